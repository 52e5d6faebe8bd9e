"""Finite-horizon policy synthesis by backward induction.

v^1(s) = c(s); v^n(s) = c(s) + min_a sum_t p(t|s,a) v^{n-1}(t). The policy
is stage-indexed: the action may depend on the remaining horizon. Ties in
the argmin are broken toward the largest action cardinality, then
lexicographic branch order (the model stores actions in that order), with
a 1e-9 absolute tolerance on value comparisons, so cost-neutral switching
opportunities are still taken.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .mdp import ActionSet, MdpError, MdpModel, SystemState

TIE_TOL = 1e-9


class SolverError(Exception):
    pass


@dataclass
class FlatModel:
    """CSR-style arrays the kernels consume."""

    costs: np.ndarray
    action_start: np.ndarray
    trans_start: np.ndarray
    out_idx: np.ndarray
    prob: np.ndarray

    @classmethod
    def from_model(cls, model: MdpModel) -> "FlatModel":
        action_start = [0]
        trans_start = [0]
        out_idx: list[int] = []
        prob: list[float] = []
        for si in range(model.n_states):
            for ai, _ in enumerate(model.actions[si]):
                for t, p in model.transitions[si][ai]:
                    out_idx.append(t)
                    prob.append(p)
                trans_start.append(len(out_idx))
            action_start.append(action_start[-1] + len(model.actions[si]))
        return cls(
            costs=np.asarray(model.costs, dtype=np.float64),
            action_start=np.asarray(action_start, dtype=np.int64),
            trans_start=np.asarray(trans_start, dtype=np.int64),
            out_idx=np.asarray(out_idx, dtype=np.int64),
            prob=np.asarray(prob, dtype=np.float64),
        )


@dataclass
class ValueTable:
    """values[n-1, s] is the n-step expected cost of state s."""

    values: np.ndarray  # [horizon, n_states]
    horizon: int

    def value(self, n: int, state_idx: int) -> float:
        if not 1 <= n <= self.horizon:
            raise SolverError(f"stage {n} outside 1..{self.horizon}")
        return float(self.values[n - 1, state_idx])


@dataclass
class Policy:
    """Stage-indexed deterministic policy over a built model."""

    model: MdpModel
    stage_choice: np.ndarray  # [horizon, n_states], local action index
    horizon: int
    optimal: bool = False
    values: np.ndarray | None = field(default=None, repr=False)

    def action_at(self, state_idx: int, remaining: int) -> ActionSet:
        n = min(max(remaining, 1), self.horizon)
        ai = int(self.stage_choice[n - 1, state_idx])
        return self.model.actions[state_idx][ai]

    def action_for(self, s: SystemState, remaining: int) -> ActionSet:
        return self.action_at(self.model.state_index(s), remaining)


def solve(model: MdpModel, horizon: int | None = None) -> tuple[ValueTable, Policy]:
    """Optimal stage-indexed policy minimizing expected unenergized-bus cost."""
    if model.n_states == 0:
        raise SolverError("empty model")
    horizon = horizon or model.n_branches
    if horizon < 1:
        raise SolverError("horizon must be >= 1")
    flat = FlatModel.from_model(model)
    values, choices = _kernels.backward_induction(
        flat.costs,
        flat.action_start,
        flat.trans_start,
        flat.out_idx,
        flat.prob,
        horizon,
        TIE_TOL,
    )
    table = ValueTable(values=values, horizon=horizon)
    policy = Policy(
        model=model, stage_choice=choices, horizon=horizon, optimal=True, values=values
    )
    return table, policy


def evaluate_policy(model: MdpModel, policy, horizon: int | None = None) -> ValueTable:
    """Value table of a fixed policy (no minimization).

    ``policy`` is a Policy, or a mapping from SystemState/state string to
    an action set; states absent from a mapping default to the empty
    action.
    """
    horizon = horizon or (policy.horizon if isinstance(policy, Policy) else model.n_branches)
    flat = FlatModel.from_model(model)
    if isinstance(policy, Policy):
        choices = np.asarray(policy.stage_choice[:horizon], dtype=np.int64)
        if choices.shape[0] < horizon:
            pad = np.repeat(choices[-1:], horizon - choices.shape[0], axis=0)
            choices = np.vstack([choices, pad])
    else:
        stationary = _stationary_choices(model, policy)
        choices = np.tile(stationary, (horizon, 1))
    values = _kernels.policy_values(
        flat.costs, flat.action_start, flat.trans_start, flat.out_idx, flat.prob, choices
    )
    return ValueTable(values=values, horizon=horizon)


def _stationary_choices(model: MdpModel, mapping) -> np.ndarray:
    empty = frozenset()
    choices = np.asarray(
        [model.actions[si].index(empty) for si in range(model.n_states)], dtype=np.int64
    )
    normalized: dict[tuple, ActionSet] = {}
    for key, a in mapping.items():
        if isinstance(key, SystemState):
            state = key
        else:
            state = SystemState.from_labels(key)
        normalized[state.statuses] = frozenset(a)
    for si, s in enumerate(model.states):
        a = normalized.get(s.statuses)
        if a is None:
            continue  # wait (empty action) by default
        try:
            choices[si] = model.actions[si].index(a)
        except ValueError:
            raise SolverError(f"action {sorted(a)} infeasible in [{s}]") from None
    return choices


def average_restoration_time(value_at_s0: float, n_buses: int) -> float:
    """Per-bus average expected restoration time."""
    if n_buses <= 0:
        raise SolverError("bus count must be positive")
    return value_at_s0 / n_buses


def nominal_sequence(model: MdpModel, policy: Policy) -> list[list[int]]:
    """Action sequence along the all-successes trajectory from the start."""
    seq: list[list[int]] = []
    si = 0
    remaining = policy.horizon
    while remaining >= 1:
        a = policy.action_at(si, remaining)
        if not a:
            break
        seq.append(sorted(a))
        ai = model.actions[si].index(a)
        si = _all_success_outcome(model, si, ai, a)
        remaining -= 1
    return seq


def _all_success_outcome(model: MdpModel, si: int, ai: int, a: ActionSet) -> int:
    for ti, _ in model.transitions[si][ai]:
        t = model.states[ti]
        if all(t.status(i) >= 0 for i in a):
            return ti
    raise SolverError(f"no all-success outcome for action {sorted(a)}")


def first_visit_stages(model: MdpModel, horizon: int) -> list[int]:
    """Stage (remaining horizon) at each state's earliest possible visit."""
    stages = [0] * model.n_states
    stages[0] = horizon
    queue = [0]
    while queue:
        nxt: list[int] = []
        for si in queue:
            n = stages[si]
            if n <= 1:
                continue
            for ai in range(len(model.actions[si])):
                for ti, _ in model.transitions[si][ai]:
                    if ti != si and stages[ti] < n - 1:
                        stages[ti] = n - 1
                        nxt.append(ti)
        queue = nxt
    return [max(n, 1) for n in stages]


def policy_to_json(model: MdpModel, policy: Policy) -> str:
    """Export: state string -> {action, value, stage} at first-visit stage."""
    stages = first_visit_stages(model, policy.horizon)
    out = {}
    for si, s in enumerate(model.states):
        n = stages[si]
        out[str(s)] = {
            "action": sorted(policy.action_at(si, n)),
            "value": float(policy.values[n - 1, si]) if policy.values is not None else None,
            "stage": n,
        }
    return json.dumps(out, indent=1)


def policy_from_json(model: MdpModel, text: str | bytes | dict) -> Policy:
    """Rebuild a stage-indexed policy from the export format."""
    doc = text if isinstance(text, dict) else json.loads(text)
    horizon = max((rec["stage"] for rec in doc.values()), default=model.n_branches)
    choices = np.zeros((horizon, model.n_states), dtype=np.int64)
    for state_str, rec in doc.items():
        s = SystemState.from_labels(state_str)
        try:
            si = model.state_index(s)
        except MdpError:
            continue
        a = frozenset(rec["action"])
        try:
            ai = model.actions[si].index(a)
        except ValueError:
            raise SolverError(f"action {sorted(a)} infeasible in [{s}]") from None
        choices[:, si] = ai
    return Policy(model=model, stage_choice=choices, horizon=horizon, optimal=False)
