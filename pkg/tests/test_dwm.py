import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddol import kernels
from ddol.core import Topology
from ddol.dwm import (DwmConfig, agent_rng, dwm_a_merge, dwm_i_merge, dwm_round, penalize, rwm_choose,
                      vote, wma_trajectory)
from ddol.experts import DecisionStump, ExpertPool

POOL4 = ExpertPool(tuple(DecisionStump(k, 0.0, 1) for k in range(4)))


def test_vote_and_tie():
    assert vote([1, 2, 4], [1, -1, 1]) == 1
    assert vote([3, 1], [-1, 1]) == -1
    assert vote([1, 1], [1, -1]) == 1


def test_penalize_only_wrong_experts():
    assert penalize([1, 1, 1], [1, -1, 1], -1, 0.5).tolist() == [0.5, 1, 0.5]


def test_geometric_merge_value():
    w = np.array([[0.25, 1.0], [1.0, 1.0]])
    out = dwm_i_merge(w, Topology.complete(2))
    assert out[0, 0] == pytest.approx(0.5) and out[0, 1] == 1.0
    assert np.array_equal(out[0], out[1])


def test_arithmetic_merge_value():
    w = np.array([[0.25, 1.0], [1.0, 1.0]])
    assert dwm_a_merge(w, Topology.complete(2))[1, 0] == pytest.approx(0.625)


def test_merge_respects_topology():
    w = np.array([[1.0], [0.5], [0.25], [0.125]])
    out = dwm_a_merge(w, Topology.star(4))
    assert out[0, 0] == pytest.approx((1 + 0.5 + 0.25 + 0.125) / 4)
    assert out[2, 0] == pytest.approx((1 + 0.25) / 2)


def test_merge_rejects_non_positive():
    with pytest.raises(ValueError):
        dwm_i_merge(np.array([[0.0], [1.0]]), Topology.complete(2))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=3, max_size=3))
def test_geometric_below_arithmetic(vals):
    w = np.array(vals)[:, None]
    g = dwm_i_merge(w, Topology.complete(3))
    a = dwm_a_merge(w, Topology.complete(3))
    assert np.all(g <= a * (1 + 1e-12))


def test_geometric_merge_survives_tiny_weights():
    w = np.array([[1e-300], [1e-300]]) * np.array([[1.0], [0.5]])
    out = dwm_i_merge(w, Topology.complete(2))
    assert out[0, 0] > 0 and math.isfinite(out[0, 0])


def test_rwm_choose_distribution():
    rng = np.random.default_rng(0)
    draws = [rwm_choose([1.0, 3.0], rng) for _ in range(4000)]
    assert abs(np.mean(draws) - 0.75) < 0.03


def test_choose_expert_inverse_cdf():
    w = np.array([1.0, 1.0, 2.0])
    assert kernels.choose_expert(w, 0.0) == 0
    assert kernels.choose_expert(w, 0.26) == 1
    assert kernels.choose_expert(w, 0.51) == 2
    assert kernels.choose_expert(w, 0.999999) == 2


def test_agent_rng_independent_of_agent_count():
    a = agent_rng(7, 2).random(5)
    b = agent_rng(7, 2).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, agent_rng(7, 3).random(5))


def test_round_single_agent_matches_wma(rng):
    E = rng.choice([-1, 1], size=(50, 4)).astype(np.int8)
    y = rng.choice([-1, 1], size=50)
    preds, traj = wma_trajectory(E, y, 0.7)
    cfg = DwmConfig(0.7, 1, POOL4)
    w = np.ones((1, 4))
    for t in range(50):
        p, w, _ = dwm_round(w, E[t][None], [y[t]], cfg, Topology.complete(1))
        assert p[0] == preds[t]
        assert np.array_equal(w[0], traj[t + 1])


def test_prediction_uses_previous_weights():
    # expert 0 right first, then the weights decide
    cfg = DwmConfig(0.5, 2, ExpertPool(tuple(DecisionStump(k, 0.0, 1) for k in range(2))))
    w = np.array([[1.0, 4.0], [1.0, 4.0]])
    E = np.array([[1, -1], [1, -1]])
    p, new, wrong = dwm_round(w, E, [1, 1], cfg, Topology.complete(2))
    assert p.tolist() == [-1, -1] and wrong.tolist() == [True, True]
    assert new[0].tolist() == [1.0, 2.0]


def test_randomized_round_needs_generators():
    cfg = DwmConfig(0.5, 1, POOL4, randomized=True)
    with pytest.raises(ValueError):
        dwm_round(np.ones((1, 4)), np.ones((1, 4)), [1], cfg, Topology.complete(1))


def test_round_matches_kernel(rng):
    N, T, P = 3, 40, 4
    E = rng.choice([-1, 1], size=(N, T, P)).astype(np.int8)
    y = rng.choice([-1, 1], size=(N, T)).astype(np.int8)
    top = Topology.ring(3)
    ptr, idx = top.neighbor_csr()
    for variant, merge in (("imitation", kernels.MERGE_GEOMETRIC), ("averaging", kernels.MERGE_ARITHMETIC)):
        kp, kw, _ = kernels.dwm_run(E, y, ptr, idx, 0.8, merge, np.ones((N, P)))
        w = np.ones((N, P))
        cfg = DwmConfig(0.8, N, POOL4)
        for t in range(T):
            p, w, _ = dwm_round(w, E[:, t], y[:, t], cfg, top, variant)
            assert np.array_equal(p, kp[:, t])
        assert np.array_equal(w, kw)


def test_config_validation():
    with pytest.raises(ValueError):
        DwmConfig(1.0, 1, POOL4)
    with pytest.raises(ValueError):
        DwmConfig(0.5, 0, POOL4)
