/** Console controller: owns the fetched responses and the form drafts, and
 * re-renders the page sections after every change. Kept separate from the
 * bootstrap in main.ts so the contract tests can drive it with a mocked
 * fetch implementation.
 */

import {
    ApiClient,
    ObservedResult,
    Recommendation,
    ServiceError,
    Session,
    Topology,
} from "./api.js";
import {
    renderActionPanel,
    renderBanner,
    renderHeader,
    renderTimeline,
    renderTopology,
    renderWhatIf,
} from "./render.js";
import { unknownBranches } from "./state.js";

const SECTION_IDS = [
    "banner",
    "header",
    "topology",
    "action-panel",
    "what-if",
    "timeline",
] as const;

type SectionId = (typeof SECTION_IDS)[number];

export class Console {
    private session: Session | null = null;
    private topology: Topology | null = null;
    private recommendation: Recommendation | null = null;
    private reportDraft = new Map<number, string>();
    private whatIfSelection = new Set<number>();
    private whatIfResult: Recommendation | null = null;
    private whatIfError: string | null = null;
    private banner: string | null = null;
    private bannerReloads = false;
    private sections = new Map<SectionId, HTMLElement>();

    constructor(
        root: HTMLElement,
        private readonly api: ApiClient,
        private readonly sessionId: string,
    ) {
        for (const id of SECTION_IDS) {
            const section = document.createElement("section");
            section.id = id;
            root.appendChild(section);
            this.sections.set(id, section);
        }
    }

    private section(id: SectionId): HTMLElement {
        return this.sections.get(id)!;
    }

    /** Fetch the three views and re-render everything. */
    async refresh(): Promise<void> {
        try {
            this.session = await this.api.session(this.sessionId);
            this.topology = await this.api.topology(this.sessionId);
            this.recommendation = await this.api.recommendation(this.sessionId);
            this.banner = null;
            this.bannerReloads = false;
        } catch (err) {
            this.banner = err instanceof ServiceError
                ? `Service error: ${err.body.message}`
                : "Service unreachable.";
            this.bannerReloads = false;
            this.render();
            return;
        }
        // A refresh invalidates drafts tied to the previous step.
        this.reportDraft.clear();
        this.whatIfSelection.clear();
        this.whatIfResult = null;
        this.whatIfError = null;
        this.render();
    }

    setObserved(branch: number, result: string): void {
        if (result === "") {
            this.reportDraft.delete(branch);
        } else {
            this.reportDraft.set(branch, result);
        }
        this.render();
    }

    async submitOutcome(): Promise<void> {
        const rec = this.recommendation;
        const session = this.session;
        if (!rec || !session || rec.action.some((b) => !this.reportDraft.get(b))) {
            return;
        }
        const observed: Record<string, ObservedResult> = {};
        for (const branch of rec.action) {
            observed[String(branch)] = this.reportDraft.get(branch) as ObservedResult;
        }
        try {
            await this.api.reportOutcome(this.sessionId, rec.action, observed, session.step);
        } catch (err) {
            if (err instanceof ServiceError && err.status === 409) {
                this.banner =
                    `This session moved on (${err.body.message}). Reload to continue from the current step.`;
                this.bannerReloads = true;
                this.render();
                return;
            }
            this.banner = err instanceof ServiceError
                ? `Service error: ${err.body.message}`
                : "Service unreachable.";
            this.render();
            return;
        }
        await this.refresh();
    }

    toggleWhatIf(branch: number): void {
        if (this.whatIfSelection.has(branch)) {
            this.whatIfSelection.delete(branch);
        } else {
            this.whatIfSelection.add(branch);
        }
        this.whatIfResult = null;
        this.whatIfError = null;
        this.render();
    }

    async submitWhatIf(): Promise<void> {
        if (this.whatIfSelection.size === 0) return;
        const action = [...this.whatIfSelection].sort((a, b) => a - b);
        try {
            this.whatIfResult = await this.api.whatIf(this.sessionId, action);
            this.whatIfError = null;
        } catch (err) {
            this.whatIfResult = null;
            this.whatIfError = err instanceof ServiceError
                ? err.body.message
                : "Service unreachable.";
        }
        this.render();
    }

    render(): void {
        renderBanner(
            this.section("banner"),
            this.banner,
            this.bannerReloads ? () => void this.refresh() : undefined,
        );
        if (this.session) renderHeader(this.section("header"), this.session);
        if (this.topology) renderTopology(this.section("topology"), this.topology);
        if (this.recommendation) {
            renderActionPanel(this.section("action-panel"), this.recommendation, this.reportDraft, {
                onObserve: (branch, result) => this.setObserved(branch, result),
                onSubmit: () => void this.submitOutcome(),
            });
        }
        if (this.topology) {
            renderWhatIf(
                this.section("what-if"),
                unknownBranches(this.topology),
                this.whatIfSelection,
                this.recommendation,
                this.whatIfResult,
                this.whatIfError,
                {
                    onToggle: (branch) => this.toggleWhatIf(branch),
                    onSubmit: () => void this.submitWhatIf(),
                },
            );
        }
        renderTimeline(this.section("timeline"), this.session?.log ?? []);
    }
}
