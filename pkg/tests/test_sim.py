import dataclasses

import numpy as np
import pytest

from ddol import bounds, sim
from ddol.core import Topology
from ddol.data import Dataset, PartitionPlan, gen_synthetic
from ddol.dwm import DwmConfig, agent_rng, wma_trajectory
from ddol.experts import DecisionStump, ExpertPool
from ddol.omd import OmdConfig

from conftest import dwm_spec, omd_spec


def same(a: sim.Metrics, b: sim.Metrics) -> bool:
    for f in dataclasses.fields(a):
        x, y = getattr(a, f.name), getattr(b, f.name)
        if isinstance(x, np.ndarray):
            if not np.array_equal(x, y):
                return False
        elif f.name == "final_states":
            if any(not np.array_equal(s.params, t.params) for s, t in zip(x, y)):
                return False
        elif x != y:
            return False
    return True


def test_single_agent_matches_reference_wma():
    spec = dwm_spec("dwm-i", 1, 500, seed=4, record=True)
    m = sim.run(spec)
    X, y = sim.agent_streams(spec)
    E = spec.config.pool.predict_dense(X[0])
    preds, traj = wma_trajectory(E, y[0], spec.config.alpha)
    assert np.array_equal(m.predictions[0], preds)
    assert np.array_equal(m.trajectory[:, 0], traj)


def test_randomized_single_agent_matches_reference():
    spec = dwm_spec("rwm", 1, 300, seed=2)
    m = sim.run(spec)
    X, y = sim.agent_streams(spec)
    E = spec.config.pool.predict_dense(X[0])
    preds, _ = wma_trajectory(E, y[0], spec.config.alpha, randomized=True, rng=agent_rng(2, 0))
    assert np.array_equal(m.predictions[0], preds)


@pytest.mark.parametrize("algo", sim.ALGORITHMS)
def test_deterministic_and_parallel_equivalent(algo):
    make = dwm_spec if algo in sim.DWM_ALGOS else omd_spec
    a = sim.run(make(algo, 3, 200, seed=5))
    b = sim.run(make(algo, 3, 200, seed=5))
    c = sim.run(make(algo, 3, 200, seed=5, parallel=True))
    assert same(a, b) and same(a, c)
    assert sim.replay_check(a)


def test_rwm_agents_draw_from_their_own_generators():
    spec = dwm_spec("rwm", 3, 150, seed=6)
    m = sim.run(spec)
    X, y = sim.agent_streams(spec)
    for i in range(3):
        E = spec.config.pool.predict_dense(X[i])
        p, _ = wma_trajectory(E, y[i], 0.9, randomized=True, rng=agent_rng(6, i))
        assert np.array_equal(m.predictions[i], p)


def test_solo_agents_do_not_communicate():
    m = sim.run(dwm_spec("wma", 3, 200, seed=3, record=True))
    X, y = sim.agent_streams(dwm_spec("wma", 3, 200, seed=3))
    pool = dwm_spec("wma", 3, 200, seed=3).config.pool
    for i in range(3):
        p, _ = wma_trajectory(pool.predict_dense(X[i]), y[i], 0.9)
        assert np.array_equal(m.predictions[i], p)


def test_replay_detects_corruption():
    m = sim.run(dwm_spec("dwm-i", 2, 50))
    assert sim.replay_check(m).ok
    m.cum_mistakes[1, 17] += 1
    rep = sim.replay_check(m)
    assert not rep.ok
    assert any("round 17" in p for p in rep.problems)


def test_replay_detects_bad_series():
    m = sim.run(dwm_spec("dwm-a", 2, 50))
    m.m_star_series[3] = 5
    assert any("round 3" in p for p in sim.replay_check(m).problems)


def test_perfect_expert_gives_zero_m_star():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(200, 2))
    y = np.where(X[:, 0] >= 0, 1, -1)
    ds = Dataset.from_dense(X, y)
    pool = ExpertPool((DecisionStump(0, 0.0, 1), DecisionStump(1, 0.0, 1)))
    spec = sim.ExperimentSpec("dwm-i", Topology.complete(2), 100, ds, PartitionPlan("round-robin", 2),
                              DwmConfig(0.5, 2, pool))
    m = sim.run(spec)
    assert m.m_star == 0 and m.best_expert == 0
    assert sim.replay_check(m).ok
    assert m.M.max() <= bounds.dwm_i_bound(0, 2, 2, 0.5)


def test_m_star_series_follows_best_expert():
    m = sim.run(dwm_spec("dwm-a", 4, 300, seed=8))
    assert int(m.m_star_series.sum()) == m.m_star
    assert np.all(m.round_min_series <= m.m_star_series)
    assert m.expert_round_mistakes[:, m.best_expert].tolist() == m.m_star_series.tolist()


def test_bound_report_flags():
    spec = dwm_spec("dwm-i", 4, 300, seed=8)
    rep = sim.dwm_bound_report(sim.run(spec), spec.config)
    assert all(a["bound_satisfied"] for a in rep["agents"])
    spec = dwm_spec("wma", 2, 300, seed=8)
    rep = sim.dwm_bound_report(sim.run(spec), spec.config)
    assert all(a["bound_satisfied"] for a in rep["agents"])
    spec = dwm_spec("drwm", 2, 100)
    rep = sim.dwm_bound_report(sim.run(spec), spec.config)
    assert all("bound" not in a for a in rep["agents"])


def test_complete_graph_consensus():
    for algo in ("dogd", "doeg", "dwm-i", "dwm-a"):
        make = dwm_spec if algo in sim.DWM_ALGOS else omd_spec
        m = sim.run(make(algo, 4, 200, record=True))
        assert np.all(m.trajectory == m.trajectory[:, :1])


def test_ring_does_not_reach_immediate_consensus():
    m = sim.run(omd_spec("dogd", 5, 50, topology="ring", record=True))
    assert not np.all(m.trajectory[1:] == m.trajectory[1:, :1])


def test_omd_regret_report():
    spec = omd_spec("dogd", 2, 300, record=True)
    m = sim.run(spec)
    rep = sim.domd_bound_report(spec, m)
    assert rep["max_pairwise_divergence"] == 0.0
    assert rep["bound_satisfied"] and rep["bound_comparator_diameter_satisfied"]
    comp = sim.omd_comparator_report(spec, m)
    assert comp["zero"] == pytest.approx(rep["average_regret"])
    with pytest.raises(sim.SimulationError):
        sim.domd_bound_report(omd_spec("dogd", 2, 50), sim.run(omd_spec("dogd", 2, 50)))


def test_eg_modulus_uses_l1_radius():
    spec = omd_spec("doeg", 2, 100, record=True, S=3.0)
    m = sim.run(spec)
    assert m.trajectory.sum(axis=2).max() <= 3.0 + 1e-12
    assert sim.strong_convexity("eg", m.trajectory) >= 1 / 3.0 - 1e-12
    assert sim.strong_convexity("ogd") == 1.0


def test_stream_exhaustion():
    base = dwm_spec("dwm-i", 2, 10)
    with pytest.raises(sim.SimulationError):
        sim.run(dataclasses.replace(base, n_rounds=11))


def test_spec_validation():
    base = dwm_spec("dwm-i", 2, 10)
    for bad in (dict(algorithm="adaboost"), dict(algorithm="dogd"),
                dict(plan=PartitionPlan("round-robin", 3)), dict(n_rounds=0)):
        with pytest.raises(sim.SimulationError):
            dataclasses.replace(base, **bad)
    with pytest.raises(sim.SimulationError):
        sim.ExperimentSpec("doeg", Topology.complete(1), 5, base.dataset, PartitionPlan("round-robin", 1),
                           OmdConfig("ogd", 1))
