/** A fetch implementation backed by recorded service responses.
 *
 * The recordings were captured from a live restoration-service session on the
 * five-branch feeder (uniform failure probability 0.4): "s1" is the session
 * after the first switching step, "s2" after the second, "s5" the terminal
 * state reached by reporting {3: damaged, 4: energized}. The fake advances
 * from phase to phase exactly the way the recording did, so every value the
 * console renders in the tests is a recorded service value.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";

export type Phase = "s1" | "s2" | "s5";

function fixture(name: string): any {
    const path = join(process.cwd(), "test", "fixtures", `${name}.json`);
    return JSON.parse(readFileSync(path, "utf8"));
}

export const FIXTURES = {
    s1: {
        session: fixture("session_s1"),
        topology: fixture("topology_s1"),
        recommendation: fixture("recommendation_s1"),
    },
    s2: {
        session: fixture("session_s2"),
        topology: fixture("topology_s2"),
        recommendation: fixture("recommendation_s2"),
    },
    s5: {
        session: fixture("session_s5"),
        topology: fixture("topology_s5"),
        recommendation: fixture("recommendation_s5"),
    },
    outcome_s5: fixture("outcome_s5"),
    whatif_single_s2: fixture("whatif_single_s2"),
    whatif_t1_error: fixture("whatif_t1_error"),
};

export interface RecordedCall {
    method: string;
    path: string;
    body: any;
}

export class FakeService {
    calls: RecordedCall[] = [];
    /** When set, outcome reports are rejected as stale. */
    stale = false;

    constructor(public phase: Phase) {}

    get sessionId(): string {
        return FIXTURES[this.phase].session.id;
    }

    fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
        const path = String(input);
        const method = (init?.method ?? "GET").toUpperCase();
        const body = init?.body ? JSON.parse(String(init.body)) : null;
        this.calls.push({ method, path, body });

        const respond = (status: number, payload: any) =>
            new Response(JSON.stringify(payload), {
                status,
                headers: { "Content-Type": "application/json" },
            });

        const views = FIXTURES[this.phase];
        if (method === "GET" && path.endsWith("/topology")) {
            return respond(200, views.topology);
        }
        if (method === "GET" && path.endsWith("/recommendation")) {
            return respond(200, views.recommendation);
        }
        if (method === "GET") {
            return respond(200, views.session);
        }
        if (method === "POST" && path.endsWith("/outcome")) {
            if (this.stale) {
                return respond(409, {
                    code: "stale-step",
                    message: `step ${body.step} already resolved`,
                });
            }
            if (this.phase === "s2" && body.step === 2) {
                this.phase = "s5";
                return respond(200, FIXTURES.outcome_s5);
            }
            return respond(409, { code: "stale-step", message: "unexpected step" });
        }
        if (method === "POST" && path.endsWith("/what-if")) {
            const action = JSON.stringify(body.action);
            if (action === "[2,3]") {
                return respond(400, FIXTURES.whatif_t1_error);
            }
            if (this.phase === "s2" && action === "[3]") {
                return respond(200, FIXTURES.whatif_single_s2);
            }
            return respond(400, { code: "unrecorded", message: `no recording for ${action}` });
        }
        return respond(404, { code: "not-found", message: path });
    };
}
