/** Contract tests against recorded restoration-service responses.
 *
 * No probabilities or costs are computed here: each assertion checks that
 * what the console renders is exactly what the recorded response carried.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Console } from "../src/app.js";
import { treeLayout } from "../src/layout.js";
import { probabilitySum, statusClass } from "../src/state.js";
import { FIXTURES, FakeService, Phase } from "./fakeService.js";

function flush(): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, 0));
}

async function boot(phase: Phase): Promise<{ root: HTMLElement; app: Console; svc: FakeService }> {
    const svc = new FakeService(phase);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new Console(root, new ApiClient("", svc.fetch), svc.sessionId);
    await app.refresh();
    return { root, app, svc };
}

function branchClass(root: HTMLElement, id: number): string {
    return root.querySelector(`[data-branch="${id}"]`)!.getAttribute("class")!;
}

beforeEach(() => {
    document.body.innerHTML = "";
});

describe("session dashboard", () => {
    it("renders the s2 snapshot: branch statuses and the {3, 4} recommendation", async () => {
        const { root } = await boot("s2");
        expect(branchClass(root, 1)).toContain("grid");
        expect(branchClass(root, 2)).toContain("grid");
        expect(branchClass(root, 3)).toContain("unknown");
        expect(branchClass(root, 4)).toContain("unknown");
        expect(branchClass(root, 5)).toContain("der");
        expect(root.querySelector(".recommendation")!.textContent).toContain("{3, 4}");
    });

    it("marks energized buses and shows the grid and DER badges", async () => {
        const { root } = await boot("s2");
        const busClass = (id: number) =>
            root.querySelector(`[data-bus="${id}"]`)!.getAttribute("class")!;
        expect(busClass(1)).toContain("energized");
        expect(busClass(3)).not.toContain("energized");
        expect(busClass(6)).toContain("energized");
        const badges = [...root.querySelectorAll(".badge")].map((b) => [
            b.getAttribute("data-badge-bus"),
            b.textContent,
        ]);
        expect(badges).toContainEqual(["1", "GRID"]);
        expect(badges).toContainEqual(["6", "DER"]);
    });

    it("renders outcome previews straight from the response, summing to 1", async () => {
        const { root } = await boot("s2");
        const rec = FIXTURES.s2.recommendation;
        expect(Math.abs(probabilitySum(rec.outcomes) - 1)).toBeLessThan(1e-9);
        const rows = [...root.querySelectorAll("#action-panel .outcome-row")];
        expect(rows.length).toBe(rec.outcomes.length);
        rows.forEach((row, i) => {
            expect(row.querySelector(".outcome-state")!.textContent).toBe(rec.outcomes[i].state);
            expect(row.querySelector(".outcome-prob")!.textContent).toBe(
                `${(100 * rec.outcomes[i].probability).toFixed(1)}%`,
            );
            expect(row.querySelector(".outcome-cost")!.textContent).toBe(
                String(rec.outcomes[i].cost),
            );
        });
    });

    it("lists the event timeline", async () => {
        const { root } = await boot("s2");
        const items = [...root.querySelectorAll(".timeline li")];
        expect(items.length).toBe(FIXTURES.s2.session.log.length);
        expect(items[0].textContent).toContain("Session created");
        expect(items[2].textContent).toContain("{2}");
    });
});

describe("submit outcome", () => {
    it("enables submit only once every attempted branch has a result", async () => {
        const { root } = await boot("s2");
        const submit = () => root.querySelector<HTMLButtonElement>(".report-submit")!;
        const pick = (branch: number, value: string) => {
            const sel = root.querySelector<HTMLSelectElement>(
                `[data-report-branch="${branch}"]`,
            )!;
            sel.value = value;
            sel.dispatchEvent(new Event("change"));
        };
        expect(submit().disabled).toBe(true);
        pick(3, "damaged");
        expect(submit().disabled).toBe(true);
        pick(4, "energized");
        expect(submit().disabled).toBe(false);
    });

    it("reporting {3: damaged, 4: energized} recolors branch 5 to the grid class", async () => {
        const { root, app, svc } = await boot("s2");
        expect(branchClass(root, 5)).toContain("der");
        app.setObserved(3, "damaged");
        app.setObserved(4, "energized");
        root.querySelector<HTMLButtonElement>(".report-submit")!.click();
        await flush();
        await flush();
        const post = svc.calls.find((c) => c.method === "POST" && c.path.endsWith("/outcome"))!;
        expect(post.body).toEqual({
            attempted: [3, 4],
            observed: { "3": "damaged", "4": "energized" },
            step: 2,
        });
        expect(branchClass(root, 5)).toContain("grid");
        expect(branchClass(root, 3)).toContain("damaged");
        expect(root.querySelector(".session-meta")!.textContent).toContain("completed");
    });

    it("shows the completion summary on a terminal session", async () => {
        const { root } = await boot("s5");
        expect(root.querySelector(".terminal-summary")!.textContent).toContain(
            "Restoration complete",
        );
        expect(root.querySelector(".report-form")).toBeNull();
    });

    it("surfaces a stale-step conflict as a reload prompt", async () => {
        const { root, app, svc } = await boot("s2");
        svc.stale = true;
        app.setObserved(3, "damaged");
        app.setObserved(4, "energized");
        await app.submitOutcome();
        const banner = root.querySelector(".banner")!;
        expect(banner.textContent).toContain("Reload");
        svc.stale = false;
        root.querySelector<HTMLButtonElement>(".banner-reload")!.click();
        await flush();
        await flush();
        expect(root.querySelector(".banner")).toBeNull();
        expect(branchClass(root, 3)).toContain("unknown");
    });
});

describe("what-if exploration", () => {
    it("disables preview while the selection is empty", async () => {
        const { root, app, svc } = await boot("s2");
        const submit = () => root.querySelector<HTMLButtonElement>(".whatif-submit")!;
        expect(submit().disabled).toBe(true);
        const callsBefore = svc.calls.length;
        await app.submitWhatIf();
        expect(svc.calls.length).toBe(callsBefore);
        root.querySelector<HTMLInputElement>('[data-whatif-branch="3"]')!.click();
        await flush();
        expect(submit().disabled).toBe(false);
    });

    it("compares a single-branch selection against the recommendation", async () => {
        const { root, app } = await boot("s2");
        app.toggleWhatIf(3);
        await app.submitWhatIf();
        const rec = FIXTURES.s2.recommendation;
        const sel = FIXTURES.whatif_single_s2;
        expect(sel.expected_remaining_cost).toBeGreaterThanOrEqual(
            rec.expected_remaining_cost - 1e-9,
        );
        expect(root.querySelector(".whatif-recommended")!.textContent).toContain(
            String(rec.expected_remaining_cost),
        );
        expect(root.querySelector(".whatif-selected")!.textContent).toContain(
            String(sel.expected_remaining_cost),
        );
        const probs = [...root.querySelectorAll(".whatif-outcomes .outcome-prob")].map(
            (c) => c.textContent,
        );
        expect(probs).toEqual(["60.0%", "40.0%"]);
    });

    it("surfaces \"violates T1\" for two adjacent branches without mutating the session", async () => {
        const { root, app, svc } = await boot("s1");
        root.querySelector<HTMLInputElement>('[data-whatif-branch="2"]')!.click();
        root.querySelector<HTMLInputElement>('[data-whatif-branch="3"]')!.click();
        await app.submitWhatIf();
        expect(root.querySelector(".whatif-error")!.textContent).toBe("violates T1");
        expect(root.querySelector(".whatif-compare")).toBeNull();
        expect(svc.calls.some((c) => c.path.endsWith("/outcome"))).toBe(false);
        expect(svc.phase).toBe("s1");
        expect(root.querySelector(".session-meta")!.textContent).toContain("E0,U,U,U,E1");
    });
});

describe("tree layout", () => {
    it("roots the feeder at the grid tie and grows downward", () => {
        const layout = treeLayout(FIXTURES.s2.topology);
        const y = (id: number) => layout.positions.get(id)!.y;
        expect(y(1)).toBeLessThan(y(2));
        expect(y(2)).toBeLessThan(y(4));
        expect(y(4)).toBeLessThan(y(5));
        expect(y(5)).toBeLessThan(y(6));
        expect(layout.positions.size).toBe(FIXTURES.s2.topology.buses.length);
    });

    it("maps every status the service emits to a render class", () => {
        expect(statusClass("U")).toBe("unknown");
        expect(statusClass("D")).toBe("damaged");
        expect(statusClass("E0")).toBe("grid");
        expect(statusClass("E1")).toBe("der");
        expect(statusClass("E2")).toBe("der");
    });
});
