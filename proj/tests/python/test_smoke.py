import json
import math

import pytest

import _rcm as rcm


def test_platt_fit_and_apply():
    scores = [-1.0, 1.0] * 200
    labels = [0, 1] * 200
    a, b = rcm.fit_platt(scores, labels)
    assert a > 0
    assert abs(b) < 0.1
    p = rcm.apply_platt(a, b, 0.0)
    assert 0.4 < p < 0.6
    assert rcm.apply_platt(a, b, 3.0) > rcm.apply_platt(a, b, -3.0)


def test_isotonic_breakpoints_are_monotone():
    breakpoints = rcm.fit_isotonic([1.0, 2.0, 3.0, 4.0], [0, 1, 0, 1])
    probs = [p for _, p in breakpoints]
    assert probs == sorted(probs)


def test_threshold_and_decisions():
    assert rcm.accept_threshold(100.0, 10.0) == pytest.approx(1.0 / 11.0)
    accept, challenge, reject = rcm.action_risks(0.2, 0.9, 1.0, 100.0, 5.0)
    assert accept == pytest.approx(20.0)
    assert challenge == pytest.approx(3.4)
    assert reject == pytest.approx(4.0)
    assert rcm.bayes_action(0.2, 0.9, 1.0, 100.0, 5.0) == rcm.Action.CHALLENGE
    with pytest.raises(ValueError):
        rcm.accept_threshold(0.0, 0.0)


def test_value_of_information():
    perfect = [(1.0, 0.0), (0.0, 1.0)]
    assert rcm.value_of_information(0.5, perfect, 10.0, 10.0, 1.0) == pytest.approx(4.0)
    flat = [(0.5, 0.5), (0.5, 0.5)]
    voi = rcm.value_of_information(0.3, flat, 100.0, 5.0, 1.0, 2.0, 3.0)
    assert voi == pytest.approx(-(1.0 + 2.0 * 3.0))


def test_cvar_and_robust_means():
    losses = [1.0, 2.0, 3.0, 4.0]
    assert rcm.cvar(losses, 0.5) == pytest.approx(3.5)
    t_star, value = rcm.cvar_dual(losses, 0.5)
    assert value == pytest.approx(3.5)
    assert rcm.worst_case_mean_tv([0.0, 10.0], 0.25) == pytest.approx(7.5)
    assert rcm.worst_case_mean_chi2([0.0, 10.0], 0.04) == pytest.approx(
        5.0 + math.sqrt(0.04 * 25.0)
    )


def test_drift_index_nonnegative():
    a = [0.1, 0.2, 0.3, 0.4]
    assert rcm.drift_index(a, a) == pytest.approx(0.0)
    assert rcm.drift_index(a, [0.7, 0.8, 0.9, 0.95]) > 0


def test_run_simulation_deterministic():
    scenario = {
        "impostor_prior": 0.2,
        "legit_score": {"mean": -1.0, "stddev": 1.0},
        "impostor_score": {"mean": 1.0, "stddev": 1.0},
        "challenge": {"default": {"rho": 0.9, "cost": 1.0, "leakage_increment": 0.1}},
        "horizon": 200,
        "replications": 2,
        "seed": 99,
        "policy": {"costs": {"c_fa": 100.0, "c_fr": 5.0}},
    }
    first = rcm.run_simulation(json.dumps(scenario))
    second = rcm.run_simulation(json.dumps(scenario))
    assert len(first) == 2
    assert first == second
    assert all(s["epsilon_final"] >= 0 for s in first)
    assert first[0]["fingerprint"] == first[1]["fingerprint"]

    scenario["seed"] = 100
    assert rcm.run_simulation(json.dumps(scenario)) != first


def test_strict_scenario_parsing():
    with pytest.raises(RuntimeError):
        rcm.run_simulation(json.dumps({"horizon": 10, "bogus": 1}))
