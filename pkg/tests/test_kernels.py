"""The compiled kernel and the numpy fallback must agree bitwise-close."""

import numpy as np
import pytest

import gridrestore
from gridrestore._kernels import pykernel
from gridrestore.solver import TIE_TOL, FlatModel


def random_flat(rng, n_states=40, max_actions=4, max_outcomes=3):
    """Synthetic CSR model: arbitrary stochastic transitions, no physics."""
    costs = rng.integers(0, 10, n_states).astype(np.float64)
    action_start = [0]
    trans_start = [0]
    out_idx: list[int] = []
    prob: list[float] = []
    for _ in range(n_states):
        n_actions = int(rng.integers(1, max_actions + 1))
        for _ in range(n_actions):
            n_out = int(rng.integers(1, max_outcomes + 1))
            weights = rng.random(n_out)
            weights /= weights.sum()
            for w in weights:
                out_idx.append(int(rng.integers(0, n_states)))
                prob.append(float(w))
            trans_start.append(len(out_idx))
        action_start.append(action_start[-1] + n_actions)
    return (
        costs,
        np.asarray(action_start, dtype=np.int64),
        np.asarray(trans_start, dtype=np.int64),
        np.asarray(out_idx, dtype=np.int64),
        np.asarray(prob, dtype=np.float64),
    )


def test_compiled_kernel_is_active():
    # the build produces the extension; the fallback is for source installs
    assert gridrestore.KERNEL_IMPLEMENTATION in ("cython", "python")


def test_backward_induction_agreement_random():
    try:
        from gridrestore._kernels import _cykernel
    except ImportError:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(7)
    for _ in range(25):
        flat = random_flat(rng)
        horizon = int(rng.integers(1, 8))
        v_py, c_py = pykernel.backward_induction(*flat, horizon, TIE_TOL)
        v_cy, c_cy = _cykernel.backward_induction(*flat, horizon, TIE_TOL)
        np.testing.assert_allclose(v_cy, v_py, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(c_cy, c_py)


def test_policy_values_agreement_random():
    try:
        from gridrestore._kernels import _cykernel
    except ImportError:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(11)
    for _ in range(25):
        flat = random_flat(rng)
        n_states = len(flat[0])
        horizon = int(rng.integers(1, 8))
        n_actions = np.diff(flat[1])
        choices = np.vstack(
            [rng.integers(0, n_actions) for _ in range(horizon)]
        ).astype(np.int64)
        v_py = pykernel.policy_values(*flat, choices)
        v_cy = _cykernel.policy_values(*flat, choices)
        np.testing.assert_allclose(v_cy, v_py, rtol=0, atol=1e-12)


def test_agreement_on_real_model(feeder6_model):
    try:
        from gridrestore._kernels import _cykernel
    except ImportError:
        pytest.skip("compiled kernel not built")
    flat = FlatModel.from_model(feeder6_model)
    args = (flat.costs, flat.action_start, flat.trans_start, flat.out_idx, flat.prob)
    v_py, c_py = pykernel.backward_induction(*args, 5, TIE_TOL)
    v_cy, c_cy = _cykernel.backward_induction(*args, 5, TIE_TOL)
    np.testing.assert_allclose(v_cy, v_py, rtol=0, atol=1e-12)
    np.testing.assert_array_equal(c_cy, c_py)
