"""Monte Carlo evaluation of restoration policies.

Damage realizations are sampled from the model's outcome distributions;
rollouts accumulate the unenergized-bus cost so the empirical mean is an
estimator of the solver's n-step value. Randomness comes from the Philox
counter-based generator; trial t uses the stream keyed by (seed, t), so
reports are reproducible bit-for-bit and trials are independent.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .mdp import ActionSet, MdpModel, SystemState
from .solver import TIE_TOL, FlatModel, Policy


class SimulationError(Exception):
    pass


@dataclass
class Trajectory:
    steps: list[tuple[SystemState, ActionSet, SystemState]]
    bus_first_step: dict[int, int]  # first step the bus was energized; horizon if never
    cost: float


@dataclass
class SimulationReport:
    trials: int
    horizon: int
    seed: int
    n_buses: int
    mean: float  # average restoration time per bus
    stderr: float
    costs: list[float] = field(repr=False)
    bus_steps: list[dict[int, int]] = field(repr=False)

    def to_json(self) -> str:
        histograms: dict[int, dict[int, int]] = {}
        for steps in self.bus_steps:
            for bus, step in steps.items():
                histograms.setdefault(bus, {})[step] = (
                    histograms.setdefault(bus, {}).get(step, 0) + 1
                )
        return json.dumps(
            {
                "trials": self.trials,
                "horizon": self.horizon,
                "seed": self.seed,
                "n_buses": self.n_buses,
                "mean_average_restoration_time": self.mean,
                "stderr": self.stderr,
                "bus_first_step_histogram": {
                    str(bus): {str(st): c for st, c in sorted(hist.items())}
                    for bus, hist in sorted(histograms.items())
                },
            },
            indent=1,
        )

    def to_csv(self) -> str:
        buses = sorted(self.bus_steps[0]) if self.bus_steps else []
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["trial", "cost"] + [f"bus_{b}_first_step" for b in buses])
        for t, (cost, steps) in enumerate(zip(self.costs, self.bus_steps)):
            writer.writerow([t, cost] + [steps[b] for b in buses])
        return buf.getvalue()


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, trial]))


def sample_outcome(dist, rng: np.random.Generator) -> SystemState:
    """Draw one outcome state; dist is a list of (state, probability)."""
    if not dist:
        raise SimulationError("empty outcome distribution")
    probs = np.asarray([p for _, p in dist])
    idx = rng.choice(len(dist), p=probs / probs.sum())
    return dist[idx][0]


def rollout(
    model: MdpModel,
    policy: Policy,
    horizon: int,
    rng: np.random.Generator,
    start: int = 0,
    bus_sets: list[set[int]] | None = None,
) -> Trajectory:
    """One sampled trajectory; cost sums the first `horizon` state costs."""
    if bus_sets is None:
        bus_sets = energized_bus_sets(model)
    cum_cache = _cumulative_transitions(model)
    si = start
    steps: list[tuple[SystemState, ActionSet, SystemState]] = []
    bus_first: dict[int, int] = {}
    cost = 0.0
    for t in range(horizon):
        for bus in bus_sets[si]:
            bus_first.setdefault(bus, t)
        cost += model.costs[si]
        if t == horizon - 1:
            break
        a = policy.action_at(si, horizon - t)
        ai = model.actions[si].index(a)
        outs, cum = cum_cache[si][ai]
        if len(outs) == 1:
            ti = outs[0]
        else:
            ti = int(outs[np.searchsorted(cum, rng.random(), side="right")])
        steps.append((model.states[si], a, model.states[ti]))
        si = ti
    for bus in range(1, model.n_buses + 1):
        bus_first.setdefault(bus, horizon)
    return Trajectory(steps=steps, bus_first_step=bus_first, cost=cost)


def _cumulative_transitions(model: MdpModel):
    """Per-(state, action) outcome arrays with cumulative probabilities."""
    cached = getattr(model, "_cum_trans", None)
    if cached is not None:
        return cached
    table = []
    for si in range(model.n_states):
        row = []
        for trans in model.transitions[si]:
            outs = np.asarray([t for t, _ in trans], dtype=np.int64)
            probs = np.asarray([p for _, p in trans])
            cum = np.cumsum(probs / probs.sum())
            cum[-1] = 1.0  # guard against rounding at the top end
            row.append((outs, cum))
        table.append(row)
    model._cum_trans = table
    return table


def energized_bus_sets(model: MdpModel) -> list[set[int]]:
    """Per-state energized bus sets, derived from costs and labels.

    The model export does not carry the network, so buses are recovered
    from branch endpoints when a network is attached; otherwise from the
    cost bookkeeping alone this is impossible, so the caller must pass a
    network-aware mapping. Here we reconstruct via the helper attached at
    build time when available.
    """
    cached = getattr(model, "_bus_sets", None)
    if cached is not None:
        return cached
    raise SimulationError(
        "model lacks per-state bus sets; call attach_bus_sets(model, net) first"
    )


def attach_bus_sets(model: MdpModel, net) -> None:
    from .mdp import energized_buses

    model._bus_sets = [energized_buses(net, s) for s in model.states]


def monte_carlo(
    model: MdpModel,
    policy: Policy,
    trials: int,
    horizon: int | None = None,
    seed: int = 0,
) -> SimulationReport:
    """Estimate the per-bus average restoration time for a policy."""
    if trials < 1:
        raise SimulationError("trials must be >= 1")
    horizon = horizon or policy.horizon
    bus_sets = energized_bus_sets(model)
    costs: list[float] = []
    bus_steps: list[dict[int, int]] = []
    for t in range(trials):
        traj = rollout(model, policy, horizon, trial_rng(seed, t), bus_sets=bus_sets)
        costs.append(traj.cost)
        bus_steps.append(traj.bus_first_step)
    arr = np.asarray(costs) / model.n_buses
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return SimulationReport(
        trials=trials,
        horizon=horizon,
        seed=seed,
        n_buses=model.n_buses,
        mean=mean,
        stderr=stderr,
        costs=costs,
        bus_steps=bus_steps,
    )


def baseline_policy(model: MdpModel, kind: str, horizon: int | None = None) -> Policy:
    """Comparison policies: one-step greedy coverage, or min expected steps
    to a terminal state (the earlier total-restoration-time objective)."""
    horizon = horizon or model.n_branches
    if kind == "greedy-max-energize":
        choices_row = np.zeros(model.n_states, dtype=np.int64)
        for si in range(model.n_states):
            best_ai = 0
            best_val = None
            for ai in range(len(model.actions[si])):
                val = sum(p * model.costs[ti] for ti, p in model.transitions[si][ai])
                if best_val is None or val < best_val - TIE_TOL:
                    best_val, best_ai = val, ai
                elif val < best_val:
                    best_val = val
            choices_row[si] = best_ai
        choices = np.tile(choices_row, (horizon, 1))
        return Policy(model=model, stage_choice=choices, horizon=horizon, optimal=False)
    if kind == "min-total-time":
        flat = FlatModel.from_model(model)
        step_costs = np.asarray(
            [0.0 if model.is_terminal(si) else 1.0 for si in range(model.n_states)]
        )
        _, choices = _kernels.backward_induction(
            step_costs,
            flat.action_start,
            flat.trans_start,
            flat.out_idx,
            flat.prob,
            horizon,
            TIE_TOL,
        )
        return Policy(model=model, stage_choice=choices, horizon=horizon, optimal=False)
    raise SimulationError(f"unknown baseline kind {kind!r}")
