"""Restoration MDP over branch statuses.

A state assigns each branch one of: unknown (breakers open), damaged, or
energized with a source label (0 = transmission grid, k >= 1 = DER k).
Switching a set of breakers simultaneously is an action; each attempted
branch independently fails with its assigned probability. Feasible
actions respect:

  T1  no two switched branches share a bus,
  T2  no outcome closes an energized loop,
  E1  islanded DER groups stay within merged capacity,
  E2  no outcome violates voltage limits (with bounded relaxation).

The reachable model is explored breadth-first from the all-unknown state.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .fragility import PfAssignment
from .network import Network, branch_neighbors, source_branches
from .powerflow import Island, VoltageLimits, fbpf_solve, violating_buses

# Branch status encoding: energized statuses are the source index itself.
U = -2
D = -1
GRID = 0

_PROB_TOL = 1e-12


class MdpError(Exception):
    pass


class StateBudgetExceeded(MdpError):
    def __init__(self, budget: int, explored: int, frontier: int):
        self.budget = budget
        self.explored = explored
        self.frontier = frontier
        super().__init__(
            f"state budget exceeded: budget={budget}, explored={explored}, "
            f"frontier={frontier}"
        )


def status_label(code: int) -> str:
    if code == U:
        return "U"
    if code == D:
        return "D"
    return f"E{code}"


def status_code(label: str) -> int:
    if label == "U":
        return U
    if label == "D":
        return D
    if label.startswith("E"):
        return int(label[1:])
    raise MdpError(f"unknown status label {label!r}")


@dataclass(frozen=True)
class SystemState:
    """Snapshot of every branch status; index i holds branch i+1."""

    statuses: tuple[int, ...]

    @classmethod
    def initial(cls, n_branches: int) -> "SystemState":
        return cls((U,) * n_branches)

    @classmethod
    def from_labels(cls, labels) -> "SystemState":
        if isinstance(labels, str):
            labels = labels.split(",")
        return cls(tuple(status_code(lbl.strip()) for lbl in labels))

    def status(self, branch_id: int) -> int:
        return self.statuses[branch_id - 1]

    def labels(self) -> list[str]:
        return [status_label(c) for c in self.statuses]

    def canonical_key(self, n_ders: int) -> int:
        """Integer encoding base (M+3); equal vectors share keys."""
        base = n_ders + 3
        key = 0
        for c in self.statuses:
            key = key * base + (c + 2)
        return key

    def energized_branches(self) -> list[int]:
        return [i + 1 for i, c in enumerate(self.statuses) if c >= 0]

    def unknown_branches(self) -> list[int]:
        return [i + 1 for i, c in enumerate(self.statuses) if c == U]

    def __str__(self) -> str:
        return ",".join(self.labels())


ActionSet = frozenset  # of branch ids

OutcomeDistribution = list  # of (SystemState, probability)


def applicable_branches(net: Network, s: SystemState) -> set[int]:
    """Unknown branches next to a source or an energized branch."""
    sources = source_branches(net)
    out = set()
    for i in s.unknown_branches():
        if i in sources:
            out.add(i)
            continue
        if any(s.status(j) >= 0 for j in branch_neighbors(net, i)):
            out.add(i)
    return out


def check_t1(net: Network, a: ActionSet) -> bool:
    """No two switched branches may share a bus end."""
    seen: set[int] = set()
    for i in a:
        for bus in net.branch(i).endpoints:
            if bus in seen:
                return False
            seen.add(bus)
    return True


def _energized_components(net: Network, s: SystemState):
    """Connected components of the energized subgraph.

    Returns (components, has_cycle) where each component is
    (bus_set, branch_set).
    """
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    has_cycle = False
    edges: list[int] = []
    for i in s.energized_branches():
        u, v = net.branch(i).endpoints
        for b in (u, v):
            parent.setdefault(b, b)
        ru, rv = find(u), find(v)
        if ru == rv:
            has_cycle = True
        else:
            parent[ru] = rv
        edges.append(i)

    comps: dict[int, tuple[set, set]] = {}
    for b in parent:
        comps.setdefault(find(b), (set(), set()))[0].add(b)
    for i in edges:
        comps[find(net.branch(i).from_bus)][1].add(i)
    return list(comps.values()), has_cycle


def check_t2(net: Network, outcomes: OutcomeDistribution) -> bool:
    """No outcome may close a loop of energized branches."""
    for state, _ in outcomes:
        _, has_cycle = _energized_components(net, state)
        if has_cycle:
            return False
    return True


def act_bus(net: Network, s: SystemState, k: int) -> set[int]:
    """Buses touched by a branch energized from source k."""
    if not 0 <= k <= net.n_ders:
        raise MdpError(f"source index {k} outside 0..{net.n_ders}")
    out: set[int] = set()
    for i, code in enumerate(s.statuses):
        if code == k:
            out.update(net.branch(i + 1).endpoints)
    return out


def energized_buses(net: Network, s: SystemState) -> set[int]:
    out: set[int] = set()
    for i in s.energized_branches():
        out.update(net.branch(i).endpoints)
    return out


def state_cost(net: Network, s: SystemState) -> int:
    """Number of unenergized buses."""
    return net.n_buses - len(energized_buses(net, s))


def check_e1(net: Network, outcomes: OutcomeDistribution) -> bool:
    """Islanded DER groups must cover their member loads.

    DERs joined by an energized path pool their capacity; components that
    reach the grid tie are exempt.
    """
    grid = net.grid_tie_bus
    for state, _ in outcomes:
        comps, _ = _energized_components(net, state)
        for buses, _branches in comps:
            if grid in buses:
                continue
            capacity = sum(
                net.der_at_bus(b).capacity_p for b in buses if net.der_at_bus(b)
            )
            load = sum(net.bus(b).load_p for b in buses)
            if load > capacity + 1e-9:
                return False
    return True


def _island_solutions(net: Network, state: SystemState, cache: dict | None = None):
    """FBPF solution per energized component of a state.

    Grid components take the grid tie as slack with internal DERs as
    negative demand at full capability; islanded components take the
    lowest-id member DER as slack, remaining DERs injecting capability.
    """
    grid = net.grid_tie_bus
    comps, _ = _energized_components(net, state)
    sols = []
    for buses, branches in comps:
        ders_here = sorted(d.id for b in buses if (d := net.der_at_bus(b)))
        if grid in buses:
            slack = grid
            inject = {net.der(k).bus: net.der(k).capacity_p for k in ders_here}
        else:
            if not ders_here:
                raise MdpError("energized component with no source")
            slack = net.der(ders_here[0]).bus
            inject = {net.der(k).bus: net.der(k).capacity_p for k in ders_here[1:]}
        key = (frozenset(branches), slack)
        if cache is not None and key in cache:
            sols.append(cache[key])
            continue
        island = Island(slack_bus=slack, buses=frozenset(buses), branches=frozenset(branches))
        sol = fbpf_solve(net, island, inject)
        if cache is not None:
            cache[key] = sol
        sols.append(sol)
    return sols


def check_e2(
    net: Network,
    outcomes: OutcomeDistribution,
    limits: VoltageLimits,
    cache: dict | None = None,
) -> bool:
    """Every outcome island must solve within voltage limits.

    A non-convergent island has no acceptable operating point at all, so
    it fails the check outright (no relaxation can save it).
    """
    for state, _ in outcomes:
        for sol in _island_solutions(net, state, cache):
            if not sol.converged:
                return False
            if violating_buses(sol, limits):
                return False
    return True


def outcome_distribution(
    net: Network, pf: PfAssignment, s: SystemState, a: ActionSet
) -> OutcomeDistribution:
    """All positive-probability outcome states of switching `a` in `s`.

    Each attempted branch fails with its assigned probability or picks up
    the label of its energized neighbor / adjacent source; branches whose
    island gains a grid path are relabeled to the grid source. Identical
    outcomes are merged.
    """
    action = sorted(a)
    for i in action:
        if s.status(i) != U:
            raise MdpError(f"branch {i} is not in unknown status")
    applicable = applicable_branches(net, s)
    if not set(action) <= applicable:
        raise MdpError(f"action {sorted(a)} not within applicable branches")

    merged: dict[tuple, tuple[SystemState, float]] = {}
    for success_mask in itertools.product((True, False), repeat=len(action)):
        prob = 1.0
        for i, ok in zip(action, success_mask):
            prob *= (1.0 - pf[i]) if ok else pf[i]
        if prob <= 0.0:
            continue
        statuses = list(s.statuses)
        for i, ok in zip(action, success_mask):
            statuses[i - 1] = _raw_label(net, s, i) if ok else D
        state = _grid_closure(net, SystemState(tuple(statuses)))
        key = state.statuses
        if key in merged:
            state, acc = merged[key]
            merged[key] = (state, acc + prob)
        else:
            merged[key] = (state, prob)
    return [(state, p) for state, p in merged.values()]


def _raw_label(net: Network, s: SystemState, i: int) -> int:
    """Source label a successfully closed branch takes before grid closure."""
    candidates: set[int] = set()
    br = net.branch(i)
    grid = net.grid_tie_bus
    for bus in br.endpoints:
        if bus == grid:
            candidates.add(GRID)
        der = net.der_at_bus(bus)
        if der is not None:
            candidates.add(der.id)
    for j in branch_neighbors(net, i):
        if s.status(j) >= 0:
            candidates.add(s.status(j))
    if not candidates:
        raise MdpError(f"branch {i} has no energized neighbor or source")
    return min(candidates)


def _grid_closure(net: Network, s: SystemState) -> SystemState:
    """Relabel every branch whose island reaches the grid tie to the grid source."""
    grid = net.grid_tie_bus
    comps, _ = _energized_components(net, s)
    statuses = list(s.statuses)
    for buses, branches in comps:
        if grid in buses:
            for i in branches:
                statuses[i - 1] = GRID
    return SystemState(tuple(statuses))


def state_is_consistent(net: Network, s: SystemState) -> bool:
    """Every energized branch traces to its source and no loop exists."""
    comps, has_cycle = _energized_components(net, s)
    if has_cycle:
        return False
    grid = net.grid_tie_bus
    for buses, branches in comps:
        for i in branches:
            k = s.status(i)
            source_bus = grid if k == GRID else net.der(k).bus
            if source_bus not in buses:
                return False
        # Canonical form: grid-connected islands carry only the grid label.
        if grid in buses and any(s.status(i) != GRID for i in branches):
            return False
    return True


def feasible_actions(
    net: Network,
    pf: PfAssignment,
    s: SystemState,
    limits: VoltageLimits,
    relax_step: float = 0.02,
    relax_cap: float = 0.10,
) -> set[ActionSet]:
    """Feasible action sets for a state (always includes the empty action)."""
    actions, _, _ = _feasible_actions_full(net, pf, s, limits, relax_step, relax_cap)
    return set(actions)


def _independent_subsets(net: Network, branches: list[int]):
    """Non-empty subsets with pairwise-disjoint endpoints (T1 pre-pruned)."""
    branches = sorted(branches)
    ends = {i: set(net.branch(i).endpoints) for i in branches}

    def extend(prefix: list[int], used: set[int], start: int):
        for idx in range(start, len(branches)):
            i = branches[idx]
            if used & ends[i]:
                continue
            chosen = prefix + [i]
            yield frozenset(chosen)
            yield from extend(chosen, used | ends[i], idx + 1)

    yield from extend([], set(), 0)


def _feasible_actions_full(
    net: Network,
    pf: PfAssignment,
    s: SystemState,
    limits: VoltageLimits,
    relax_step: float = 0.02,
    relax_cap: float = 0.10,
    pf_cache: dict | None = None,
):
    """Returns (actions, outcomes-by-action, relaxed flag).

    E2 is checked last: candidates passing T1/T2/E1 but failing E2 at the
    base limits are retried under a stepwise-widened band, up to the cap.
    """
    candidates: dict[ActionSet, OutcomeDistribution] = {}
    for a in _independent_subsets(net, sorted(applicable_branches(net, s))):
        outcomes = outcome_distribution(net, pf, s, a)
        if not check_t2(net, outcomes):
            continue
        if not check_e1(net, outcomes):
            continue
        candidates[a] = outcomes

    empty: ActionSet = frozenset()
    outcomes_by_action: dict[ActionSet, OutcomeDistribution] = {empty: [(s, 1.0)]}
    relaxed = False
    delta = 0.0
    while True:
        trial = limits if delta == 0.0 else limits.widened(delta)
        passing = {
            a: outs
            for a, outs in candidates.items()
            if check_e2(net, outs, trial, pf_cache)
        }
        if passing or not candidates:
            outcomes_by_action.update(passing)
            relaxed = delta > 0.0
            break
        delta = round(delta + relax_step, 10)
        if delta > relax_cap + 1e-12:
            break  # nothing survives even at the widest band; terminal
    return set(outcomes_by_action), outcomes_by_action, relaxed


@dataclass
class MdpModel:
    """Explored reachable model, immutable once built."""

    n_buses: int
    n_branches: int
    n_ders: int
    states: list[SystemState]
    actions: list[list[ActionSet]]  # per state, sorted (cardinality, lexicographic)
    transitions: list[list[list[tuple[int, float]]]]  # [state][action] -> (idx, p)
    costs: list[int]
    relaxed: list[bool]
    limits: VoltageLimits = field(default_factory=VoltageLimits)
    index: dict[tuple, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {s.statuses: i for i, s in enumerate(self.states)}

    def state_index(self, s: SystemState) -> int:
        try:
            return self.index[s.statuses]
        except KeyError:
            raise MdpError(f"state [{s}] is not in the model") from None

    def actions_of(self, s: SystemState) -> list[ActionSet]:
        return self.actions[self.state_index(s)]

    def outcomes(self, s: SystemState, a: ActionSet) -> OutcomeDistribution:
        si = self.state_index(s)
        try:
            ai = self.actions[si].index(frozenset(a))
        except ValueError:
            raise MdpError(f"action {sorted(a)} infeasible in [{s}]") from None
        return [(self.states[t], p) for t, p in self.transitions[si][ai]]

    def is_terminal(self, si: int) -> bool:
        return len(self.actions[si]) == 1

    @property
    def n_states(self) -> int:
        return len(self.states)

    def to_json(self) -> str:
        states = [str(s) for s in self.states]
        return json.dumps(
            {
                "meta": {
                    "n_buses": self.n_buses,
                    "n_branches": self.n_branches,
                    "n_ders": self.n_ders,
                    "v_min": self.limits.v_min,
                    "v_max": self.limits.v_max,
                },
                "states": states,
                "actions": {
                    states[i]: [sorted(a) for a in acts]
                    for i, acts in enumerate(self.actions)
                },
                "transitions": [
                    [states[i], sorted(a), states[t], p]
                    for i, acts in enumerate(self.actions)
                    for ai, a in enumerate(acts)
                    for t, p in self.transitions[i][ai]
                ],
                "costs": {states[i]: c for i, c in enumerate(self.costs)},
                "relaxed": {states[i]: r for i, r in enumerate(self.relaxed)},
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str | bytes | dict) -> "MdpModel":
        doc = text if isinstance(text, dict) else json.loads(text)
        meta = doc["meta"]
        states = [SystemState.from_labels(s) for s in doc["states"]]
        index = {s.statuses: i for i, s in enumerate(states)}
        str_index = {s: i for i, s in enumerate(doc["states"])}
        actions: list[list[ActionSet]] = []
        for s in doc["states"]:
            acts = [frozenset(a) for a in doc["actions"][s]]
            actions.append(sorted(acts, key=_action_sort_key))
        transitions: list[list[list[tuple[int, float]]]] = [
            [[] for _ in acts] for acts in actions
        ]
        for s_str, a, t_str, p in doc["transitions"]:
            si = str_index[s_str]
            ai = actions[si].index(frozenset(a))
            transitions[si][ai].append((str_index[t_str], float(p)))
        return cls(
            n_buses=meta["n_buses"],
            n_branches=meta["n_branches"],
            n_ders=meta["n_ders"],
            states=states,
            actions=actions,
            transitions=transitions,
            costs=[doc["costs"][s] for s in doc["states"]],
            relaxed=[doc["relaxed"][s] for s in doc["states"]],
            limits=VoltageLimits(meta["v_min"], meta["v_max"]),
            index=index,
        )


def _action_sort_key(a: ActionSet):
    # Larger actions first so value ties resolve toward wider coverage;
    # the empty action always sorts last.
    return (-len(a), sorted(a))


def build_mdp(
    net: Network,
    pf: PfAssignment,
    limits: VoltageLimits | None = None,
    state_budget: int = 2_000_000,
    relax_step: float = 0.02,
    relax_cap: float = 0.10,
) -> MdpModel:
    """Breadth-first exploration from the all-unknown state."""
    limits = limits or VoltageLimits()
    s0 = SystemState.initial(net.n_branches)
    states: list[SystemState] = [s0]
    index: dict[tuple, int] = {s0.statuses: 0}
    actions: list[list[ActionSet]] = []
    transitions: list[list[list[tuple[int, float]]]] = []
    costs: list[int] = []
    relaxed_flags: list[bool] = []
    pf_cache: dict = {}

    frontier = 0
    while frontier < len(states):
        s = states[frontier]
        acts, outs_by_action, relaxed = _feasible_actions_full(
            net, pf, s, limits, relax_step, relax_cap, pf_cache
        )
        sorted_acts = sorted(acts, key=_action_sort_key)
        row: list[list[tuple[int, float]]] = []
        for a in sorted_acts:
            entry: list[tuple[int, float]] = []
            for t, p in outs_by_action[a]:
                ti = index.get(t.statuses)
                if ti is None:
                    if len(states) >= state_budget:
                        raise StateBudgetExceeded(
                            state_budget, frontier, len(states) - frontier
                        )
                    ti = len(states)
                    index[t.statuses] = ti
                    states.append(t)
                entry.append((ti, p))
            row.append(entry)
        actions.append(sorted_acts)
        transitions.append(row)
        costs.append(state_cost(net, s))
        relaxed_flags.append(relaxed)
        frontier += 1

    return MdpModel(
        n_buses=net.n_buses,
        n_branches=net.n_branches,
        n_ders=net.n_ders,
        states=states,
        actions=actions,
        transitions=transitions,
        costs=costs,
        relaxed=relaxed_flags,
        limits=limits,
        index=index,
    )
