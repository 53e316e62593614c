"""Datasets in LIBSVM form or drawn around a hidden hyperplane, and their
split into per-agent streams."""
from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .core import LabeledExample, SparseVector


class LibsvmFormatError(ValueError):
    """A line of LIBSVM input could not be parsed."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


_LABELS = {"+1": 1, "1": 1, "-1": -1, "0": -1, "1.0": 1, "+1.0": 1, "-1.0": -1, "0.0": -1}


@dataclass(frozen=True)
class Dataset:
    examples: tuple[LabeledExample, ...]
    dim: int

    def __post_init__(self):
        for ex in self.examples:
            if ex.features.indices and ex.features.indices[-1] >= self.dim:
                raise ValueError("dataset dim smaller than a stored feature index")

    def __len__(self) -> int:
        return len(self.examples)

    def __getitem__(self, k):
        if isinstance(k, slice):
            return Dataset(self.examples[k], self.dim)
        return self.examples[k]

    @property
    def labels(self) -> np.ndarray:
        return np.fromiter((ex.label for ex in self.examples), dtype=np.int8, count=len(self))

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Return read-only ``(X, y)`` with ``X`` of shape ``(n, dim)``."""
        return self._dense

    @cached_property
    def _dense(self) -> tuple[np.ndarray, np.ndarray]:
        X = np.zeros((len(self), self.dim))
        for row, ex in enumerate(self.examples):
            if ex.features.indices:
                X[row, list(ex.features.indices)] = ex.features.values
        y = self.labels
        X.setflags(write=False)
        y.setflags(write=False)
        return X, y

    def has_both_classes(self) -> bool:
        y = self.labels
        return bool(np.any(y == 1) and np.any(y == -1))

    @classmethod
    def from_dense(cls, X: np.ndarray, y: Iterable[int]) -> "Dataset":
        X = np.asarray(X, dtype=float)
        dim = X.shape[1]
        exs = []
        # plain lists beat per-row numpy calls for the short rows used here
        for row, lab in zip(X.tolist(), np.asarray(y).tolist()):
            nz = [(k, v) for k, v in enumerate(row) if v != 0.0]
            exs.append(LabeledExample(SparseVector(tuple(k for k, _ in nz), tuple(v for _, v in nz), dim),
                                      int(lab)))
        return cls(tuple(exs), dim)


def _parse_label(tok: str, lineno: int) -> int:
    if tok in _LABELS:
        return _LABELS[tok]
    try:
        val = float(tok)
    except ValueError:
        raise LibsvmFormatError(f"bad label {tok!r}", lineno) from None
    if val == 1.0:
        return 1
    if val in (-1.0, 0.0):
        return -1
    raise LibsvmFormatError(f"label {tok!r} is not binary", lineno)


def parse_libsvm(source: str | TextIO | Iterable[str]) -> Dataset:
    """Parse LIBSVM text (``<label> <idx>:<val> ...`` with 1-based indices).

    Label 0 is read as -1. Indices become 0-based; ``dim`` is the largest
    1-based index seen. Blank lines are skipped; ``#`` starts a comment.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    examples = []
    dim = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        label = _parse_label(toks[0], lineno)
        idx: list[int] = []
        vals: list[float] = []
        prev = 0
        for tok in toks[1:]:
            key, sep, val = tok.partition(":")
            if not sep:
                raise LibsvmFormatError(f"feature {tok!r} lacks ':'", lineno)
            try:
                k = int(key)
                v = float(val)
            except ValueError:
                raise LibsvmFormatError(f"malformed feature {tok!r}", lineno) from None
            if k < 1:
                raise LibsvmFormatError(f"feature index {k} is not 1-based", lineno)
            if k <= prev:
                raise LibsvmFormatError(f"non-increasing index {k} after {prev}", lineno)
            if not np.isfinite(v):
                raise LibsvmFormatError(f"non-finite value {val!r}", lineno)
            prev = k
            idx.append(k - 1)
            vals.append(v)
        dim = max(dim, prev)
        examples.append((label, idx, vals))
    if not examples:
        raise LibsvmFormatError("no examples in input", 0)
    return Dataset(
        tuple(
            LabeledExample(SparseVector(tuple(i), tuple(v), dim), lab) for lab, i, v in examples
        ),
        dim,
    )


def load_libsvm(path: str | Path) -> Dataset:
    with open(path) as fh:
        return parse_libsvm(fh)


def serialize_libsvm(d: Dataset) -> str:
    lines = []
    for ex in d.examples:
        feats = " ".join(f"{k + 1}:{v!r}" for k, v in ex.features.entries)
        lines.append(f"{ex.label:+d} {feats}".rstrip())
    return "\n".join(lines) + "\n"


PARTITION_STRATEGIES = ("round-robin", "contiguous", "shuffled")


@dataclass(frozen=True)
class PartitionPlan:
    strategy: str
    n_agents: int
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in PARTITION_STRATEGIES:
            raise ValueError(f"unknown partition strategy {self.strategy!r}")
        if self.n_agents < 1:
            raise ValueError("need at least one agent")


def partition_indices(n: int, plan: PartitionPlan) -> list[np.ndarray]:
    N = plan.n_agents
    if N > n:
        raise ValueError(f"cannot split {n} examples across {N} agents")
    if plan.strategy == "round-robin":
        return [np.arange(i, n, N) for i in range(N)]
    if plan.strategy == "contiguous":
        return np.array_split(np.arange(n), N)
    perm = np.random.default_rng(plan.seed).permutation(n)
    return [perm[i::N] for i in range(N)]


def partition(d: Dataset, plan: PartitionPlan) -> list[Dataset]:
    """Split ``d`` into ``plan.n_agents`` streams whose lengths differ by at most one."""
    return [Dataset(tuple(d.examples[k] for k in idx), d.dim) for idx in partition_indices(len(d), plan)]


@dataclass(frozen=True)
class SyntheticManifest:
    n: int
    dim: int
    margin: float
    noise_rate: float
    seed: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticManifest":
        return cls(**json.loads(text))

    def generate(self) -> Dataset:
        return gen_synthetic(self.n, self.dim, self.margin, self.noise_rate, self.seed)


def hidden_normal(dim: int, seed: int) -> np.ndarray:
    """Unit normal of the hyperplane used by :func:`gen_synthetic` for ``seed``."""
    u = np.random.default_rng(seed).standard_normal(dim)
    return u / np.linalg.norm(u)


def gen_synthetic(n: int, dim: int, margin: float, noise_rate: float, seed: int) -> Dataset:
    """Draw ``n`` points uniformly from ``[-1, 1]^dim`` at distance at least
    ``margin`` from a hidden hyperplane through the origin, label them by side,
    then flip each label independently with probability ``noise_rate``."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    if not 0 <= noise_rate < 1:
        raise ValueError("noise_rate must lie in [0, 1)")
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be positive")
    u = hidden_normal(dim, seed)
    if margin >= np.abs(u).sum():
        raise ValueError(f"margin {margin} unreachable inside the unit cube")
    rng = np.random.default_rng([seed, 1])
    kept: list[np.ndarray] = []
    have = 0
    for _ in range(10_000):
        batch = rng.uniform(-1.0, 1.0, size=(max(2 * (n - have), 64), dim))
        batch = batch[np.abs(batch @ u) >= margin]
        kept.append(batch)
        have += len(batch)
        if have >= n:
            break
    else:
        raise RuntimeError("rejection sampling made no progress; lower the margin")
    X = np.concatenate(kept)[:n]
    y = np.where(X @ u >= 0, 1, -1)
    flips = rng.random(n) < noise_rate
    y[flips] = -y[flips]
    return Dataset.from_dense(X, y)
