/** Typed client for the restoration-service HTTP API.
 *
 * The console never computes policies or probabilities itself: every value it
 * renders comes out of one of these response shapes.
 */

export interface BusView {
    id: number;
    load_p: number;
    grid_tie: boolean;
    der_capacity: number | null;
}

export interface BranchView {
    id: number;
    from: number;
    to: number;
    /** "U", "D", "E0", or "E<k>" for DER k. */
    status: string;
}

export interface Topology {
    state: string;
    step: number;
    status: string;
    buses: BusView[];
    branches: BranchView[];
}

export interface OutcomePreview {
    state: string;
    probability: number;
    cost: number;
}

export interface Recommendation {
    action: number[];
    expected_remaining_cost: number;
    outcomes: OutcomePreview[];
    relaxed: boolean;
    terminal: boolean;
}

export interface SessionEvent {
    seq: number;
    ts: string;
    kind: string;
    payload: Record<string, unknown>;
}

export interface Session {
    id: string;
    state: string;
    step: number;
    status: string;
    horizon: number;
    expected_remaining_cost: number;
    log?: SessionEvent[];
}

export interface ErrorBody {
    code: string;
    message: string;
    constraint?: string;
}

export type ObservedResult = "energized" | "damaged";

/** A non-2xx response, carrying the service's structured error body. */
export class ServiceError extends Error {
    constructor(readonly status: number, readonly body: ErrorBody) {
        super(body.message);
        this.name = "ServiceError";
    }
}

export class ApiClient {
    constructor(
        private readonly baseUrl: string = "",
        private readonly fetchImpl: typeof fetch = (...args) => fetch(...args),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const resp = await this.fetchImpl(this.baseUrl + path, init);
        const body = await resp.json();
        if (!resp.ok) {
            throw new ServiceError(resp.status, body as ErrorBody);
        }
        return body as T;
    }

    session(id: string): Promise<Session> {
        return this.request(`/sessions/${id}`);
    }

    topology(id: string): Promise<Topology> {
        return this.request(`/sessions/${id}/topology`);
    }

    recommendation(id: string): Promise<Recommendation> {
        return this.request(`/sessions/${id}/recommendation`);
    }

    reportOutcome(
        id: string,
        attempted: number[],
        observed: Record<string, ObservedResult>,
        step: number,
    ): Promise<Session> {
        return this.request(`/sessions/${id}/outcome`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ attempted, observed, step }),
        });
    }

    whatIf(id: string, action: number[]): Promise<Recommendation> {
        return this.request(`/sessions/${id}/what-if`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ action }),
        });
    }
}
