# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backward-induction kernels; mirrors pykernel exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPLEMENTATION = "cython"


def backward_induction(
    cnp.float64_t[::1] costs,
    cnp.int64_t[::1] action_start,
    cnp.int64_t[::1] trans_start,
    cnp.int64_t[::1] out_idx,
    cnp.float64_t[::1] prob,
    int horizon,
    double tie_tol,
):
    cdef Py_ssize_t n_states = costs.shape[0]
    values_arr = np.empty((horizon, n_states), dtype=np.float64)
    choices_arr = np.zeros((horizon, n_states), dtype=np.int64)
    cdef cnp.float64_t[:, ::1] values = values_arr
    cdef cnp.int64_t[:, ::1] choices = choices_arr
    cdef Py_ssize_t n, s, q, e, chosen
    cdef double best, qv
    for s in range(n_states):
        values[0, s] = costs[s]
    for n in range(1, horizon):
        for s in range(n_states):
            best = 0.0
            chosen = 0
            for q in range(action_start[s], action_start[s + 1]):
                qv = 0.0
                for e in range(trans_start[q], trans_start[q + 1]):
                    qv += prob[e] * values[n - 1, out_idx[e]]
                if q == action_start[s] or qv < best - tie_tol:
                    best = qv
                    chosen = q - action_start[s]
                elif qv < best:
                    best = qv
            values[n, s] = costs[s] + best
            choices[n, s] = chosen
    return values_arr, choices_arr


def policy_values(
    cnp.float64_t[::1] costs,
    cnp.int64_t[::1] action_start,
    cnp.int64_t[::1] trans_start,
    cnp.int64_t[::1] out_idx,
    cnp.float64_t[::1] prob,
    cnp.int64_t[:, ::1] choices,
):
    cdef Py_ssize_t horizon = choices.shape[0]
    cdef Py_ssize_t n_states = choices.shape[1]
    values_arr = np.empty((horizon, n_states), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] values = values_arr
    cdef Py_ssize_t n, s, q, e
    cdef double qv
    for s in range(n_states):
        values[0, s] = costs[s]
    for n in range(1, horizon):
        for s in range(n_states):
            q = action_start[s] + choices[n, s]
            qv = 0.0
            for e in range(trans_start[q], trans_start[q + 1]):
                qv += prob[e] * values[n - 1, out_idx[e]]
            values[n, s] = costs[s] + qv
    return values_arr
