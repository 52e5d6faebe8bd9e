"""Backward/forward sweep load flow on energized radial islands.

Each island is a connected radial subtree with a single slack bus (the
grid tie, or the DER bus when operating islanded). DERs inside a grid-fed
island appear as negative demand; loads are constant power. The sweep
iterates a backward current summation and a forward voltage update from
the slack until the voltage profile settles.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

from .network import Network


class PowerFlowError(Exception):
    pass


@dataclass(frozen=True)
class Island:
    slack_bus: int
    buses: frozenset[int]
    branches: frozenset[int]

    def __post_init__(self):
        if self.slack_bus not in self.buses:
            raise PowerFlowError("slack bus is not an island member")


@dataclass(frozen=True)
class VoltageLimits:
    v_min: float = 0.95
    v_max: float = 1.05

    def __post_init__(self):
        if not (0.0 < self.v_min < 1.0 < self.v_max):
            raise PowerFlowError(f"invalid voltage limits ({self.v_min}, {self.v_max})")

    def widened(self, delta: float) -> "VoltageLimits":
        return VoltageLimits(self.v_min - delta, self.v_max + delta)


@dataclass(frozen=True)
class VoltageSolution:
    magnitude: dict[int, float]  # per-unit, by bus id
    angle: dict[int, float]  # radians
    converged: bool
    iterations: int
    slack_bus: int = 0

    def to_dict(self) -> dict:
        return {
            "magnitude": {str(k): v for k, v in self.magnitude.items()},
            "angle": {str(k): v for k, v in self.angle.items()},
            "converged": self.converged,
            "iterations": self.iterations,
            "slack_bus": self.slack_bus,
        }


def island_tree(net: Network, island: Island) -> dict[int, tuple[int, int]]:
    """Orient the island from the slack: bus -> (parent bus, connecting branch).

    Raises PowerFlowError if the member branches do not form a tree
    spanning the member buses.
    """
    adj: dict[int, list[tuple[int, int]]] = {b: [] for b in island.buses}
    for bid in island.branches:
        br = net.branch(bid)
        u, v = br.endpoints
        if u not in island.buses or v not in island.buses:
            raise PowerFlowError(f"branch {bid} leaves the island")
        adj[u].append((v, bid))
        adj[v].append((u, bid))
    parent: dict[int, tuple[int, int]] = {}
    seen = {island.slack_bus}
    stack = [island.slack_bus]
    while stack:
        u = stack.pop()
        for v, bid in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            parent[v] = (u, bid)
            stack.append(v)
    if len(seen) != len(island.buses) or len(island.branches) != len(island.buses) - 1:
        raise PowerFlowError("island is not a connected radial subtree")
    return parent


def fbpf_solve(
    net: Network,
    island: Island,
    der_injections: dict[int, float] | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> VoltageSolution:
    """Solve the island load flow; injections are in kW at DER buses."""
    der_injections = der_injections or {}
    for bus in der_injections:
        if bus not in island.buses:
            raise PowerFlowError(f"DER injection at non-member bus {bus}")
        if net.der_at_bus(bus) is None:
            raise PowerFlowError(f"DER injection at non-DER bus {bus}")

    parent = island_tree(net, island)
    # Order buses so every parent precedes its children.
    order = [island.slack_bus]
    children: dict[int, list[int]] = {b: [] for b in island.buses}
    for child, (par, _) in parent.items():
        children[par].append(child)
    i = 0
    while i < len(order):
        order.extend(children[order[i]])
        i += 1

    p_base = net.base.p_base_kw
    z_base = net.base.z_base
    demand: dict[int, complex] = {}
    for b in island.buses:
        bus = net.bus(b)
        p = (bus.load_p - der_injections.get(b, 0.0)) / p_base
        q = bus.load_q / p_base
        demand[b] = complex(p, q)

    volts: dict[int, complex] = {b: complex(1.0, 0.0) for b in island.buses}
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        # Backward sweep: accumulate branch currents from the leaves up.
        inj_current = {
            b: (demand[b] / volts[b]).conjugate() if demand[b] != 0 else complex(0.0)
            for b in island.buses
        }
        branch_current: dict[int, complex] = {}
        for b in reversed(order):
            if b == island.slack_bus:
                continue
            total = inj_current[b]
            for c in children[b]:
                total += branch_current[parent[c][1]]
            branch_current[parent[b][1]] = total
        # Forward sweep: voltage drops from the slack down.
        max_dv = 0.0
        for b in order:
            if b == island.slack_bus:
                continue
            par, bid = parent[b]
            br = net.branch(bid)
            z = complex(br.resistance, br.reactance) / z_base
            new_v = volts[par] - z * branch_current[bid]
            max_dv = max(max_dv, abs(abs(new_v) - abs(volts[b])))
            volts[b] = new_v
        if max_dv < tol:
            converged = True
            break

    return VoltageSolution(
        magnitude={b: abs(volts[b]) for b in island.buses},
        angle={b: cmath.phase(volts[b]) for b in island.buses},
        converged=converged,
        iterations=iterations,
        slack_bus=island.slack_bus,
    )


def violating_buses(sol: VoltageSolution, limits: VoltageLimits) -> set[int]:
    """Buses whose magnitude falls outside the permitted band."""
    if not sol.converged:
        raise PowerFlowError("voltage solution did not converge")
    return {
        b for b, m in sol.magnitude.items() if m < limits.v_min or m > limits.v_max
    }
