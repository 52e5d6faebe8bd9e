import csv
import io
import json

import numpy as np
import pytest

from gridrestore.simulate import (
    SimulationError,
    attach_bus_sets,
    baseline_policy,
    monte_carlo,
    rollout,
    sample_outcome,
    trial_rng,
)
from gridrestore.solver import evaluate_policy, solve


@pytest.fixture(scope="module")
def sim_setup(feeder6, feeder6_model):
    attach_bus_sets(feeder6_model, feeder6)
    _, policy = solve(feeder6_model, horizon=5)
    return feeder6_model, policy


def test_trial_rng_streams_are_stable():
    a = trial_rng(123, 0).random(4)
    b = trial_rng(123, 0).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(trial_rng(123, 1).random(4), a)
    assert not np.array_equal(trial_rng(124, 0).random(4), a)


def test_sample_outcome_frequencies(feeder6_model):
    s2 = feeder6_model.states[0]
    dist = [(0, 0.36), (1, 0.24), (2, 0.24), (3, 0.16)]
    # wrap plain indices as states for the helper's (state, p) shape
    wrapped = [(t, p) for t, p in dist]
    rng = np.random.default_rng(0)
    counts = {t: 0 for t, _ in dist}
    n = 20000
    for _ in range(n):
        counts[sample_outcome(wrapped, rng)] += 1
    for t, p in dist:
        assert counts[t] / n == pytest.approx(p, abs=0.02)
    with pytest.raises(SimulationError, match="empty outcome"):
        sample_outcome([], rng)


def test_rollout_deterministic_per_stream(sim_setup):
    model, policy = sim_setup
    t1 = rollout(model, policy, 5, trial_rng(9, 4))
    t2 = rollout(model, policy, 5, trial_rng(9, 4))
    assert t1.cost == t2.cost
    assert t1.steps == t2.steps
    assert t1.bus_first_step == t2.bus_first_step


def test_rollout_cost_accounting(sim_setup):
    model, policy = sim_setup
    traj = rollout(model, policy, 5, trial_rng(0, 0))
    assert traj.cost >= 0
    assert set(traj.bus_first_step) == set(range(1, 7))
    assert all(0 <= t <= 5 for t in traj.bus_first_step.values())


def test_monte_carlo_reproducible(sim_setup):
    model, policy = sim_setup
    r1 = monte_carlo(model, policy, trials=500, seed=42)
    r2 = monte_carlo(model, policy, trials=500, seed=42)
    assert r1.costs == r2.costs
    r3 = monte_carlo(model, policy, trials=500, seed=43)
    assert r1.costs != r3.costs


def test_monte_carlo_matches_value(sim_setup):
    model, policy = sim_setup
    table, _ = solve(model, horizon=5)
    expected = table.value(5, 0) / model.n_buses
    report = monte_carlo(model, policy, trials=4000, seed=1)
    assert abs(report.mean - expected) <= 4 * report.stderr


def test_monte_carlo_validation(sim_setup):
    model, policy = sim_setup
    with pytest.raises(SimulationError, match="trials"):
        monte_carlo(model, policy, trials=0)


def test_report_serialization(sim_setup):
    model, policy = sim_setup
    report = monte_carlo(model, policy, trials=25, seed=5)
    doc = json.loads(report.to_json())
    assert doc["trials"] == 25
    assert doc["seed"] == 5
    assert doc["n_buses"] == 6
    assert set(doc["bus_first_step_histogram"]) == {str(b) for b in range(1, 7)}
    rows = list(csv.DictReader(io.StringIO(report.to_csv())))
    assert len(rows) == 25
    assert float(rows[0]["cost"]) >= 0


def test_bus_sets_required(feeder6, feeder6_model):
    import gridrestore.mdp as mdp
    from gridrestore.fragility import PfAssignment

    fresh = mdp.build_mdp(feeder6, PfAssignment.uniform(feeder6, 0.4))
    _, policy = solve(fresh)
    with pytest.raises(SimulationError, match="attach_bus_sets"):
        monte_carlo(fresh, policy, trials=1)


def test_baselines_are_feasible_and_dominated(sim_setup):
    model, policy = sim_setup
    table, _ = solve(model, horizon=5)
    for kind in ("greedy-max-energize", "min-total-time"):
        base = baseline_policy(model, kind, horizon=5)
        for si in range(model.n_states):
            for n in range(1, 6):
                assert base.action_at(si, n) in model.actions[si]
        valued = evaluate_policy(model, base, horizon=5)
        assert valued.value(5, 0) >= table.value(5, 0) - 1e-9
    with pytest.raises(SimulationError, match="unknown baseline"):
        baseline_policy(model, "nope")
