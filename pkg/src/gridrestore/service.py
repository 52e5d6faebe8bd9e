"""Session-oriented HTTP service for live restoration support.

A dispatcher opens a session from a network + failure-probability
document, reads the recommended switch set, reports observed field
outcomes and iterates. Sessions are durable: every state change is
appended to a SQLite event log and replayed on demand after a restart.
Models and policies are cached by content hash of the inputs, so many
sessions on the same feeder share one build.

Concurrency: state-advancing calls on a session are linearized by a
step-index compare-and-advance rule (stale writers get a 409); reads
never block.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import pathlib
import sqlite3
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .fragility import FragilityError, pf_from_doc
from .mdp import (
    MdpError,
    StateBudgetExceeded,
    applicable_branches,
    build_mdp,
    check_e1,
    check_t1,
    check_t2,
    outcome_distribution,
)
from .network import NetworkError, load_network
from .powerflow import PowerFlowError, VoltageLimits
from .solver import solve

_D = -1  # damaged status code, mirrors the model export convention


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, constraint: str | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.constraint = constraint
        super().__init__(message)

    def body(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.constraint is not None:
            out["constraint"] = self.constraint
        return out


@dataclass
class _Bundle:
    """Everything derived from one (network, pf, options) input set."""

    net: object
    pf: object
    model: object
    policy: object
    values: object  # ValueTable
    horizon: int


@dataclass
class _Session:
    id: str
    cache_key: str
    inputs: dict
    state_idx: int = 0
    step: int = 0
    status: str = "active"
    log: list = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    materialized: bool = False


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _cache_key(inputs: dict) -> str:
    return hashlib.sha256(json.dumps(inputs, sort_keys=True).encode()).hexdigest()


class SessionStore:
    """Durable sessions over an append-only per-session event log."""

    def __init__(self, db_path):
        self.db_path = str(db_path)
        self.bundles: dict[str, _Bundle] = {}
        self.sessions: dict[str, _Session] = {}
        self._build_lock = threading.Lock()
        with self._connect() as con:
            con.execute(
                "CREATE TABLE IF NOT EXISTS sessions("
                "id TEXT PRIMARY KEY, created_at TEXT, cache_key TEXT)"
            )
            con.execute(
                "CREATE TABLE IF NOT EXISTS events("
                "session_id TEXT, seq INTEGER, ts TEXT, kind TEXT, payload TEXT, "
                "PRIMARY KEY(session_id, seq))"
            )
        self._load()

    def _connect(self):
        return sqlite3.connect(self.db_path)

    def _load(self):
        with self._connect() as con:
            rows = con.execute("SELECT id, cache_key FROM sessions").fetchall()
            for sid, key in rows:
                events = [
                    {"seq": seq, "ts": ts, "kind": kind, "payload": json.loads(payload)}
                    for seq, ts, kind, payload in con.execute(
                        "SELECT seq, ts, kind, payload FROM events "
                        "WHERE session_id=? ORDER BY seq",
                        (sid,),
                    )
                ]
                if not events or events[0]["kind"] != "created":
                    continue  # truncated log; skip rather than guess
                self.sessions[sid] = _Session(
                    id=sid, cache_key=key, inputs=events[0]["payload"], log=events
                )

    def bundle_for(self, inputs: dict) -> tuple[str, _Bundle]:
        key = _cache_key(inputs)
        with self._build_lock:
            if key not in self.bundles:
                self.bundles[key] = self._build(inputs)
            return key, self.bundles[key]

    def _build(self, inputs: dict) -> _Bundle:
        opts = inputs.get("options") or {}
        net = load_network(inputs["network"])
        pf = pf_from_doc(net, inputs["pf"])
        limits = VoltageLimits(
            float(opts.get("vmin", 0.95)), float(opts.get("vmax", 1.05))
        )
        model = build_mdp(
            net,
            pf,
            limits=limits,
            state_budget=int(opts.get("state_budget", 2_000_000)),
            relax_cap=float(opts.get("relax_cap", 0.10)),
        )
        horizon = int(opts.get("horizon", model.n_branches))
        values, policy = solve(model, horizon)
        return _Bundle(
            net=net, pf=pf, model=model, policy=policy, values=values, horizon=horizon
        )

    def create(self, inputs: dict) -> _Session:
        key, _ = self.bundle_for(inputs)
        sid = uuid.uuid4().hex
        ts = _now()
        event = {"seq": 0, "ts": ts, "kind": "created", "payload": inputs}
        with self._connect() as con:
            con.execute(
                "INSERT INTO sessions(id, created_at, cache_key) VALUES (?,?,?)",
                (sid, ts, key),
            )
            con.execute(
                "INSERT INTO events(session_id, seq, ts, kind, payload) VALUES (?,?,?,?,?)",
                (sid, 0, ts, "created", json.dumps(inputs)),
            )
        session = _Session(id=sid, cache_key=key, inputs=inputs, log=[event])
        session.materialized = True
        self._refresh_status(session)
        self.sessions[sid] = session
        return session

    def get(self, sid: str) -> _Session:
        session = self.sessions.get(sid)
        if session is None:
            raise ApiError(404, "unknown-session", f"no session {sid!r}")
        self._materialize(session)
        return session

    def _materialize(self, session: _Session):
        """Replay the event log against the (possibly rebuilt) model."""
        if session.materialized:
            return
        with session.lock:
            if session.materialized:
                return
            _, bundle = self.bundle_for(session.inputs)
            si, step = 0, 0
            for event in session.log[1:]:
                if event["kind"] != "outcome":
                    continue
                p = event["payload"]
                si = _advance_index(
                    bundle,
                    si,
                    frozenset(int(i) for i in p["attempted"]),
                    {int(k): v for k, v in p["observed"].items()},
                )
                step += 1
            session.state_idx = si
            session.step = step
            session.materialized = True
            self._refresh_status(session)

    def _refresh_status(self, session: _Session):
        _, bundle = self.bundle_for(session.inputs)
        done = bundle.model.is_terminal(session.state_idx) or session.step >= bundle.horizon
        session.status = "completed" if done else "active"

    def append_outcome(self, session: _Session, payload: dict, next_idx: int):
        """Persist then apply; caller holds the session lock."""
        seq = session.log[-1]["seq"] + 1
        ts = _now()
        with self._connect() as con:
            con.execute(
                "INSERT INTO events(session_id, seq, ts, kind, payload) VALUES (?,?,?,?,?)",
                (session.id, seq, ts, "outcome", json.dumps(payload)),
            )
        session.log.append({"seq": seq, "ts": ts, "kind": "outcome", "payload": payload})
        session.state_idx = next_idx
        session.step += 1
        self._refresh_status(session)


def _advance_index(bundle: _Bundle, si: int, attempted: frozenset, observed: dict) -> int:
    """Index of the unique outcome state consistent with the observation."""
    model = bundle.model
    try:
        ai = model.actions[si].index(attempted)
    except ValueError:
        raise ApiError(
            400,
            "infeasible-action",
            f"violates {_violated_constraint(bundle, si, attempted)}",
            constraint=_violated_constraint(bundle, si, attempted),
        ) from None
    if set(observed) != set(attempted):
        raise ApiError(
            400, "observation-mismatch", "observed must cover exactly the attempted branches"
        )
    for value in observed.values():
        if value not in ("energized", "damaged"):
            raise ApiError(400, "observation-mismatch", f"unknown observation {value!r}")
    for ti, _ in model.transitions[si][ai]:
        t = model.states[ti]
        ok = all(
            (t.status(i) == _D) == (observed[i] == "damaged") for i in attempted
        )
        if ok:
            return ti
    raise ApiError(
        400, "observation-inconsistent", "observation matches no model outcome"
    )


def _violated_constraint(bundle: _Bundle, si: int, action: frozenset) -> str:
    """Name the first constraint that rules an action out of A(s)."""
    net, pf = bundle.net, bundle.pf
    s = bundle.model.states[si]
    if not action <= applicable_branches(net, s):
        return "applicability"
    if not check_t1(net, action):
        return "T1"
    outcomes = outcome_distribution(net, pf, s, action)
    if not check_t2(net, outcomes):
        return "T2"
    if not check_e1(net, outcomes):
        return "E1"
    return "E2"


def _remaining(bundle: _Bundle, session: _Session) -> int:
    return max(bundle.horizon - session.step, 1)


def _session_view(bundle: _Bundle, session: _Session) -> dict:
    return {
        "id": session.id,
        "state": str(bundle.model.states[session.state_idx]),
        "step": session.step,
        "status": session.status,
        "horizon": bundle.horizon,
        "expected_remaining_cost": bundle.values.value(
            _remaining(bundle, session), session.state_idx
        ),
    }


def _preview(bundle: _Bundle, si: int, action: frozenset, remaining: int) -> dict:
    model = bundle.model
    ai = model.actions[si].index(action)
    outcomes = []
    q = float(model.costs[si])
    for ti, p in model.transitions[si][ai]:
        outcomes.append(
            {
                "state": str(model.states[ti]),
                "probability": p,
                "cost": model.costs[ti],
            }
        )
        if remaining > 1:
            q += p * bundle.values.value(remaining - 1, ti)
    terminal = model.is_terminal(si)
    return {
        "action": sorted(action),
        "expected_remaining_cost": 0.0 if terminal and not model.costs[si] else q,
        "outcomes": outcomes,
        "relaxed": model.relaxed[si],
        "terminal": terminal,
    }


def create_app(db_path="sessions.db", static_dir=None) -> FastAPI:
    store = SessionStore(db_path)
    app = FastAPI(title="gridrestore", docs_url=None, redoc_url=None)

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def _body_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "validation", "message": str(exc)}
        )

    def _parse_body(doc, *required):
        if not isinstance(doc, dict):
            raise ApiError(400, "validation", "request body must be a JSON object")
        for key in required:
            if key not in doc:
                raise ApiError(400, "validation", f"missing field {key!r}")
        return doc

    @app.post("/sessions", status_code=201)
    def create_session(doc: dict):
        _parse_body(doc, "network", "pf")
        try:
            session = store.create(
                {
                    "network": doc["network"],
                    "pf": doc["pf"],
                    "options": doc.get("options") or {},
                }
            )
        except StateBudgetExceeded as exc:
            raise ApiError(400, "state-budget", str(exc)) from None
        except (NetworkError, FragilityError, PowerFlowError, MdpError, ValueError) as exc:
            raise ApiError(400, "validation", str(exc)) from None
        _, bundle = store.bundle_for(session.inputs)
        return _session_view(bundle, session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        session = store.get(sid)
        _, bundle = store.bundle_for(session.inputs)
        view = _session_view(bundle, session)
        view["log"] = [
            {"seq": e["seq"], "ts": e["ts"], "kind": e["kind"], "payload": e["payload"]}
            for e in session.log
        ]
        return view

    @app.get("/sessions/{sid}/recommendation")
    def recommendation(sid: str):
        session = store.get(sid)
        _, bundle = store.bundle_for(session.inputs)
        si = session.state_idx
        n = _remaining(bundle, session)
        action = bundle.policy.action_at(si, n)
        if session.status == "completed":
            action = frozenset()
        return _preview(bundle, si, action, n)

    @app.post("/sessions/{sid}/outcome")
    def report_outcome(sid: str, doc: dict):
        _parse_body(doc, "attempted", "observed", "step")
        session = store.get(sid)
        _, bundle = store.bundle_for(session.inputs)
        with session.lock:
            if session.status != "active":
                raise ApiError(409, "session-completed", "session is no longer active")
            if int(doc["step"]) != session.step:
                raise ApiError(
                    409,
                    "stale-step",
                    f"session is at step {session.step}, report targeted {doc['step']}",
                )
            try:
                attempted = frozenset(int(i) for i in doc["attempted"])
                observed = {int(k): v for k, v in dict(doc["observed"]).items()}
            except (TypeError, ValueError):
                raise ApiError(400, "validation", "malformed attempted/observed") from None
            next_idx = _advance_index(bundle, session.state_idx, attempted, observed)
            store.append_outcome(
                session,
                {
                    "attempted": sorted(attempted),
                    "observed": {str(k): observed[k] for k in sorted(observed)},
                    "step": session.step,
                },
                next_idx,
            )
        return _session_view(bundle, session)

    @app.post("/sessions/{sid}/what-if")
    def what_if(sid: str, doc: dict):
        _parse_body(doc, "action")
        session = store.get(sid)
        _, bundle = store.bundle_for(session.inputs)
        try:
            action = frozenset(int(i) for i in doc["action"])
        except (TypeError, ValueError):
            raise ApiError(400, "validation", "malformed action") from None
        si = session.state_idx
        if action not in bundle.model.actions[si]:
            constraint = _violated_constraint(bundle, si, action)
            raise ApiError(
                400,
                "infeasible-action",
                f"violates {constraint}",
                constraint=constraint,
            )
        return _preview(bundle, si, action, _remaining(bundle, session))

    @app.get("/sessions/{sid}/topology")
    def topology(sid: str):
        session = store.get(sid)
        _, bundle = store.bundle_for(session.inputs)
        net = bundle.net
        state = bundle.model.states[session.state_idx]
        return {
            "state": str(state),
            "step": session.step,
            "status": session.status,
            "buses": [
                {
                    "id": b.id,
                    "load_p": b.load_p,
                    "grid_tie": b.is_grid_tie,
                    "der_capacity": (
                        net.der_at_bus(b.id).capacity_p if net.der_at_bus(b.id) else None
                    ),
                }
                for b in net.buses
            ],
            "branches": [
                {
                    "id": br.id,
                    "from": br.from_bus,
                    "to": br.to_bus,
                    "status": state.labels()[br.id - 1],
                }
                for br in net.branches
            ],
        }

    static = pathlib.Path(static_dir) if static_dir else None
    if static and static.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static), html=True), name="console")

    return app
