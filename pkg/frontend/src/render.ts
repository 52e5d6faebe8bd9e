/** DOM rendering for the dispatcher console.
 *
 * Each render function replaces the contents of its container from the last
 * fetched service responses; interaction is wired through the handler
 * callbacks so the controller owns all state.
 */

import { Recommendation, Session, SessionEvent, Topology } from "./api.js";
import { treeLayout } from "./layout.js";
import {
    energizedBuses,
    formatAction,
    formatProbability,
    statusClass,
} from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el(tag: string, cls?: string, text?: string): HTMLElement {
    const node = document.createElement(tag);
    if (cls) node.className = cls;
    if (text !== undefined) node.textContent = text;
    return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
    const node = document.createElementNS(SVG_NS, tag) as SVGElement;
    for (const [key, value] of Object.entries(attrs)) {
        node.setAttribute(key, value);
    }
    return node;
}

export function renderTopology(container: HTMLElement, top: Topology): void {
    container.textContent = "";
    const layout = treeLayout(top);
    const energized = energizedBuses(top);
    const svg = svgEl("svg", {
        class: "topology-svg",
        viewBox: `0 0 ${layout.width} ${layout.height}`,
        width: String(layout.width),
        height: String(layout.height),
    });

    for (const br of top.branches) {
        const a = layout.positions.get(br.from)!;
        const b = layout.positions.get(br.to)!;
        const cls = statusClass(br.status);
        svg.appendChild(
            svgEl("line", {
                class: `branch ${cls}`,
                "data-branch": String(br.id),
                "data-status": br.status,
                x1: String(a.x),
                y1: String(a.y),
                x2: String(b.x),
                y2: String(b.y),
            }),
        );
        const label = svgEl("text", {
            class: "branch-label",
            x: String((a.x + b.x) / 2 + 6),
            y: String((a.y + b.y) / 2 - 6),
        });
        label.textContent = String(br.id);
        svg.appendChild(label);
    }

    for (const bus of top.buses) {
        const p = layout.positions.get(bus.id)!;
        const cls = energized.has(bus.id) ? "bus energized" : "bus";
        svg.appendChild(
            svgEl("circle", {
                class: cls,
                "data-bus": String(bus.id),
                cx: String(p.x),
                cy: String(p.y),
                r: "11",
            }),
        );
        const label = svgEl("text", {
            class: "bus-label",
            x: String(p.x),
            y: String(p.y + 4),
            "text-anchor": "middle",
        });
        label.textContent = String(bus.id);
        svg.appendChild(label);
        if (bus.grid_tie) {
            const badge = svgEl("text", {
                class: "badge grid-badge",
                "data-badge-bus": String(bus.id),
                x: String(p.x),
                y: String(p.y - 18),
                "text-anchor": "middle",
            });
            badge.textContent = "GRID";
            svg.appendChild(badge);
        }
        if (bus.der_capacity !== null) {
            const badge = svgEl("text", {
                class: "badge der-badge",
                "data-badge-bus": String(bus.id),
                x: String(p.x),
                y: String(p.y + 26),
                "text-anchor": "middle",
            });
            badge.textContent = "DER";
            svg.appendChild(badge);
        }
    }
    container.appendChild(svg);
}

export interface OutcomeFormHandlers {
    onObserve(branch: number, result: string): void;
    onSubmit(): void;
}

export function renderActionPanel(
    container: HTMLElement,
    rec: Recommendation,
    draft: Map<number, string>,
    handlers: OutcomeFormHandlers,
): void {
    container.textContent = "";
    if (rec.terminal) {
        container.appendChild(
            el("p", "terminal-summary", "Restoration complete — no further actions."),
        );
        container.appendChild(
            el(
                "p",
                "terminal-cost",
                `Expected remaining cost ${rec.expected_remaining_cost}`,
            ),
        );
        return;
    }

    const heading = el("h2", "recommendation", `Recommended switch set ${formatAction(rec.action)}`);
    container.appendChild(heading);
    container.appendChild(
        el(
            "p",
            "expected-cost",
            `Expected remaining cost ${rec.expected_remaining_cost}`,
        ),
    );
    if (rec.relaxed) {
        container.appendChild(
            el("p", "relaxed-note", "Voltage limits relaxed for this state."),
        );
    }

    const table = el("table", "outcomes");
    const head = el("tr");
    for (const title of ["Resulting state", "Probability", "Unenergized buses"]) {
        head.appendChild(el("th", undefined, title));
    }
    table.appendChild(head);
    for (const out of rec.outcomes) {
        const row = el("tr", "outcome-row");
        row.appendChild(el("td", "outcome-state", out.state));
        row.appendChild(el("td", "outcome-prob", formatProbability(out.probability)));
        row.appendChild(el("td", "outcome-cost", String(out.cost)));
        table.appendChild(row);
    }
    container.appendChild(table);

    const form = el("div", "report-form");
    form.appendChild(el("h3", undefined, "Report field outcome"));
    for (const branch of rec.action) {
        const row = el("label", "report-row", `Branch ${branch} `);
        const select = document.createElement("select");
        select.dataset.reportBranch = String(branch);
        for (const option of ["", "energized", "damaged"]) {
            const opt = document.createElement("option");
            opt.value = option;
            opt.textContent = option === "" ? "— observed result —" : option;
            select.appendChild(opt);
        }
        select.value = draft.get(branch) ?? "";
        select.addEventListener("change", () => handlers.onObserve(branch, select.value));
        row.appendChild(select);
        form.appendChild(row);
    }
    const submit = document.createElement("button");
    submit.className = "report-submit";
    submit.textContent = "Submit outcome";
    submit.disabled = rec.action.some((b) => !draft.get(b));
    submit.addEventListener("click", () => handlers.onSubmit());
    form.appendChild(submit);
    container.appendChild(form);
}

export interface WhatIfHandlers {
    onToggle(branch: number): void;
    onSubmit(): void;
}

export function renderWhatIf(
    container: HTMLElement,
    candidates: number[],
    selection: Set<number>,
    rec: Recommendation | null,
    result: Recommendation | null,
    error: string | null,
    handlers: WhatIfHandlers,
): void {
    container.textContent = "";
    container.appendChild(el("h2", undefined, "What if…"));
    const picker = el("div", "whatif-picker");
    for (const branch of candidates) {
        const label = el("label", "whatif-option", ` ${branch}`);
        const box = document.createElement("input");
        box.type = "checkbox";
        box.dataset.whatifBranch = String(branch);
        box.checked = selection.has(branch);
        box.addEventListener("change", () => handlers.onToggle(branch));
        label.prepend(box);
        picker.appendChild(label);
    }
    container.appendChild(picker);

    const submit = document.createElement("button");
    submit.className = "whatif-submit";
    submit.textContent = "Preview selection";
    submit.disabled = selection.size === 0;
    submit.addEventListener("click", () => handlers.onSubmit());
    container.appendChild(submit);

    if (error) {
        container.appendChild(el("p", "whatif-error", error));
    }
    if (result) {
        const compare = el("div", "whatif-compare");
        if (rec) {
            compare.appendChild(
                el(
                    "p",
                    "whatif-recommended",
                    `Recommended ${formatAction(rec.action)}: expected remaining cost ${rec.expected_remaining_cost}`,
                ),
            );
        }
        compare.appendChild(
            el(
                "p",
                "whatif-selected",
                `Selected ${formatAction(result.action)}: expected remaining cost ${result.expected_remaining_cost}`,
            ),
        );
        const table = el("table", "whatif-outcomes");
        for (const out of result.outcomes) {
            const row = el("tr", "outcome-row");
            row.appendChild(el("td", "outcome-state", out.state));
            row.appendChild(el("td", "outcome-prob", formatProbability(out.probability)));
            row.appendChild(el("td", "outcome-cost", String(out.cost)));
            table.appendChild(row);
        }
        compare.appendChild(table);
        container.appendChild(compare);
    }
}

export function renderTimeline(container: HTMLElement, log: SessionEvent[]): void {
    container.textContent = "";
    container.appendChild(el("h2", undefined, "Timeline"));
    const list = el("ol", "timeline");
    for (const event of log) {
        let text: string;
        if (event.kind === "created") {
            text = "Session created";
        } else if (event.kind === "outcome") {
            const attempted = (event.payload.attempted as number[]) ?? [];
            const observed = (event.payload.observed as Record<string, string>) ?? {};
            const parts = attempted.map((b) => `${b}: ${observed[String(b)]}`);
            text = `Step ${event.payload.step}: switched ${formatAction(attempted)} → ${parts.join(", ")}`;
        } else {
            text = event.kind;
        }
        const item = el("li", `event event-${event.kind}`, text);
        item.dataset.seq = String(event.seq);
        list.appendChild(item);
    }
    container.appendChild(list);
}

export function renderHeader(container: HTMLElement, session: Session): void {
    container.textContent = "";
    container.appendChild(el("h1", undefined, `Session ${session.id.slice(0, 8)}`));
    const meta = el("p", "session-meta");
    meta.textContent =
        `step ${session.step} · ${session.status} · state ${session.state}`;
    container.appendChild(meta);
}

export function renderBanner(container: HTMLElement, message: string | null, onReload?: () => void): void {
    container.textContent = "";
    if (!message) return;
    const banner = el("div", "banner", message + " ");
    if (onReload) {
        const btn = document.createElement("button");
        btn.className = "banner-reload";
        btn.textContent = "Reload";
        btn.addEventListener("click", onReload);
        banner.appendChild(btn);
    }
    container.appendChild(banner);
}
