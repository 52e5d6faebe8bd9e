/** View-model helpers: mapping service responses onto things the DOM needs.
 *
 * Everything here is a pure reshaping of response fields — no probabilities,
 * costs, or feasibility decisions originate in the console.
 */

import { BranchView, OutcomePreview, Topology } from "./api.js";

export type StatusClass = "unknown" | "damaged" | "grid" | "der";

/** CSS class for a branch status string (U / D / E0 / E<k>). */
export function statusClass(status: string): StatusClass {
    if (status === "U") return "unknown";
    if (status === "D") return "damaged";
    if (status === "E0") return "grid";
    return "der";
}

/** Buses with at least one energized incident branch, plus the grid tie. */
export function energizedBuses(top: Topology): Set<number> {
    const on = new Set<number>();
    for (const bus of top.buses) {
        if (bus.grid_tie) on.add(bus.id);
    }
    for (const br of top.branches) {
        if (br.status.startsWith("E")) {
            on.add(br.from);
            on.add(br.to);
        }
    }
    return on;
}

export function branchById(top: Topology, id: number): BranchView | undefined {
    return top.branches.find((b) => b.id === id);
}

/** "{3, 4}" for a switch set, or a dash for the empty action. */
export function formatAction(action: number[]): string {
    if (action.length === 0) return "—";
    return `{${[...action].sort((a, b) => a - b).join(", ")}}`;
}

export function formatProbability(p: number): string {
    return `${(100 * p).toFixed(1)}%`;
}

/** Probabilities as served; rendered rows must sum to 1 within 1e-9. */
export function probabilitySum(outcomes: OutcomePreview[]): number {
    return outcomes.reduce((acc, o) => acc + o.probability, 0);
}

/** Branch ids still reportable from this state (status unknown). */
export function unknownBranches(top: Topology): number[] {
    return top.branches.filter((b) => b.status === "U").map((b) => b.id);
}
