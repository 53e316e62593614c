import numpy as np
import pytest

from ddol import kernels
from ddol.core import SparseVector
from ddol.data import Dataset, gen_synthetic
from ddol.experts import (DecisionStump, ExpertPool, best_stump_on_column, stump_predict,
                          train_stumps)


def brute_errors(col, y, thr, pol):
    pred = np.where(col >= thr, pol, -pol)
    return int(np.sum(pred != y))


def test_stump_predict_threshold_inclusive():
    s = DecisionStump(1, 0.5, 1)
    assert stump_predict(s, SparseVector.from_dense([0, 0.5])) == 1
    assert stump_predict(s, SparseVector.from_dense([0, 0.4])) == -1
    assert stump_predict(DecisionStump(1, 0.5, -1), SparseVector.from_dense([0, 0.9])) == -1


def test_stump_validation():
    with pytest.raises(ValueError):
        DecisionStump(0, 0.0, 0)
    with pytest.raises(ValueError):
        ExpertPool((DecisionStump(0, 0.0, 1), DecisionStump(0, 1.0, 1)))


def test_stump_errors_match_brute_force(rng):
    for _ in range(20):
        col = np.round(rng.normal(size=60), 1)
        y = rng.choice([-1, 1], size=60).astype(np.int8)
        thr = np.linspace(col.min(), col.max(), 17)
        got = kernels.stump_errors(col, y, thr)
        assert got.tolist() == [brute_errors(col, y, t, 1) for t in thr]


def test_best_stump_is_optimal_on_grid(rng):
    col = rng.uniform(-1, 1, 200)
    y = np.where(col > 0.3, 1, -1).astype(np.int8)
    s, err = best_stump_on_column(col, y, 0, 200)
    thr = np.linspace(col.min(), col.max(), 200)
    best = min(min(brute_errors(col, y, t, 1), brute_errors(col, y, t, -1)) for t in thr)
    assert err == best == brute_errors(col, y, s.threshold, s.polarity)
    assert s.polarity == 1


def test_negative_polarity_found():
    col = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([1, 1, -1, -1], dtype=np.int8)
    s, err = best_stump_on_column(col, y, 0, 4)
    assert err == 0 and s.polarity == -1 and s.threshold == 2.0


def test_train_stumps_distinct_and_deterministic():
    d = gen_synthetic(300, 6, 0.1, 0.05, 2)
    a = train_stumps(d, 4, probes=50, seed=1)
    b = train_stumps(d, 4, probes=50, seed=1)
    assert a == b
    assert len({s.dim_index for s in a.stumps}) == 4


def test_pool_json_round_trip():
    pool = train_stumps(gen_synthetic(100, 3, 0.1, 0.0, 0), 3, probes=10)
    assert ExpertPool.from_json(pool.to_json()) == pool


def test_predict_dense_matches_scalar():
    d = gen_synthetic(50, 4, 0.1, 0.0, 3)
    pool = train_stumps(d, 4, probes=20)
    X, _ = d.to_dense()
    E = pool.predict_dense(X)
    for r in range(len(d)):
        assert E[r].tolist() == [stump_predict(s, d[r].features) for s in pool.stumps]


def test_train_stumps_errors():
    d = gen_synthetic(40, 3, 0.1, 0.0, 0)
    with pytest.raises(ValueError):
        train_stumps(d, 4)
    with pytest.raises(ValueError):
        train_stumps(d, 2, probes=1)
    X = d.to_dense()[0].copy()
    with pytest.raises(ValueError):
        train_stumps(Dataset.from_dense(X, [1] * len(X)), 2)
    X[:, 1:] = 0.0
    with pytest.raises(ValueError):
        train_stumps(Dataset.from_dense(X, d.labels), 2)
