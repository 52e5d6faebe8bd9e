"""Numpy implementation of the backward-induction kernels.

Used when the compiled extension is unavailable; semantics are identical.
The model is flattened to CSR-style arrays: state s owns actions
[action_start[s], action_start[s+1]) and action q owns transition entries
[trans_start[q], trans_start[q+1]). Actions are pre-sorted per state by
(cardinality, branch order), so tie-breaking picks the first action whose
value is within tie_tol of the minimum.
"""

import numpy as np

IMPLEMENTATION = "python"


def backward_induction(costs, action_start, trans_start, out_idx, prob, horizon, tie_tol):
    """Returns (values, choices), both shaped [horizon, n_states].

    Row n-1 holds the n-step value v^n and the minimizing action's local
    index within its state's action list.
    """
    n_states = costs.shape[0]
    n_actions = action_start[-1]
    values = np.empty((horizon, n_states), dtype=np.float64)
    choices = np.zeros((horizon, n_states), dtype=np.int64)
    values[0] = costs
    seg = action_start[:-1]
    pos = np.arange(n_actions)
    for n in range(1, horizon):
        contrib = prob * values[n - 1][out_idx]
        q_val = np.add.reduceat(contrib, trans_start[:-1])
        best = np.minimum.reduceat(q_val, seg)
        within = q_val <= np.repeat(best, np.diff(action_start)) + tie_tol
        first = np.minimum.reduceat(np.where(within, pos, n_actions), seg)
        values[n] = costs + best
        choices[n] = first - seg
    return values, choices


def policy_values(costs, action_start, trans_start, out_idx, prob, choices):
    """n-step values of a fixed stage-indexed policy (no minimization)."""
    horizon, n_states = choices.shape
    values = np.empty((horizon, n_states), dtype=np.float64)
    values[0] = costs
    for n in range(1, horizon):
        contrib = prob * values[n - 1][out_idx]
        q_val = np.add.reduceat(contrib, trans_start[:-1])
        chosen = action_start[:-1] + choices[n]
        values[n] = costs + q_val[chosen]
    return values
