"""Decision-stump experts trained offline on the full dataset.

Note that training sees every example the agents will later be scored on;
the pool therefore carries information about the test stream. This mirrors
the offline protocol the experiments are meant to reproduce.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import SparseVector
from .data import Dataset


@dataclass(frozen=True)
class DecisionStump:
    dim_index: int
    threshold: float
    polarity: int

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValueError("polarity must be -1 or +1")
        if self.dim_index < 0:
            raise ValueError("negative dimension index")


def stump_predict(s: DecisionStump, x: SparseVector) -> int:
    return s.polarity if x[s.dim_index] >= s.threshold else -s.polarity


@dataclass(frozen=True)
class ExpertPool:
    stumps: tuple[DecisionStump, ...]

    def __post_init__(self):
        dims = [s.dim_index for s in self.stumps]
        if not dims:
            raise ValueError("an expert pool needs at least one stump")
        if len(set(dims)) != len(dims):
            raise ValueError("stump dimensions must be pairwise distinct")

    @property
    def P(self) -> int:
        return len(self.stumps)

    def predict_dense(self, X: np.ndarray) -> np.ndarray:
        """Expert predictions for dense inputs of shape ``(..., D)`` -> ``(..., P)`` int8."""
        dims = np.array([s.dim_index for s in self.stumps])
        thr = np.array([s.threshold for s in self.stumps])
        pol = np.array([s.polarity for s in self.stumps], dtype=np.int8)
        return np.where(X[..., dims] >= thr, pol, -pol).astype(np.int8)

    def to_json(self) -> str:
        return json.dumps(
            [
                {"dim_index": s.dim_index, "threshold": s.threshold, "polarity": s.polarity}
                for s in self.stumps
            ],
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "ExpertPool":
        return cls(tuple(DecisionStump(int(d["dim_index"]), float(d["threshold"]), int(d["polarity"]))
                         for d in json.loads(text)))


def best_stump_on_column(column: np.ndarray, labels: np.ndarray, dim_index: int,
                         probes: int) -> tuple[DecisionStump, int]:
    """Scan ``probes`` evenly spaced thresholds on ``[min, max]`` of ``column``
    with both polarities; return the stump with fewest training errors and the
    error count. Ties go to the smaller threshold, then to polarity +1."""
    thresholds = np.linspace(column.min(), column.max(), probes)
    err_pos = kernels.stump_errors(column, labels, thresholds)
    err_neg = len(column) - err_pos
    best = None
    for q in range(probes):
        for pol, err in ((1, err_pos[q]), (-1, err_neg[q])):
            if best is None or err < best[2]:
                best = (float(thresholds[q]), pol, int(err))
    return DecisionStump(dim_index, best[0], best[1]), best[2]


def train_stumps(d: Dataset, P: int, probes: int = 200, seed: int = 0) -> ExpertPool:
    """Pick ``P`` distinct non-constant dimensions at random and fit one stump on each."""
    if probes < 2:
        raise ValueError("need at least two probes")
    if P < 1 or P > d.dim:
        raise ValueError(f"need 1 <= P <= D (P={P}, D={d.dim})")
    if not d.has_both_classes():
        raise ValueError("stump training needs examples of both classes")
    X, y = d.to_dense()
    order = np.random.default_rng(seed).permutation(d.dim)
    stumps = []
    for k in order:
        col = X[:, k]
        if col.min() == col.max():
            continue
        stumps.append(best_stump_on_column(col, y, int(k), probes)[0])
        if len(stumps) == P:
            return ExpertPool(tuple(stumps))
    raise ValueError(f"only {len(stumps)} non-constant dimensions available, need {P}")
