"""Domain types shared by every module."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class SparseVector:
    """Sparse real vector with strictly increasing 0-based indices.

    Absent entries read as zero. Explicit zeros are dropped at construction.
    """

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        if self.dim < 0:
            raise ValueError(f"negative dimension {self.dim}")
        prev = -1
        for k in self.indices:
            if k <= prev:
                raise ValueError(f"indices must be strictly increasing (saw {k} after {prev})")
            prev = k
        if self.indices and self.indices[-1] >= self.dim:
            raise ValueError(f"index {self.indices[-1]} out of range for dim {self.dim}")
        if any(v == 0.0 for v in self.values):
            keep = [(k, v) for k, v in zip(self.indices, self.values) if v != 0.0]
            object.__setattr__(self, "indices", tuple(k for k, _ in keep))
            object.__setattr__(self, "values", tuple(v for _, v in keep))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], dim: int) -> "SparseVector":
        pairs = list(pairs)
        return cls(tuple(int(k) for k, _ in pairs), tuple(float(v) for _, v in pairs), dim)

    @classmethod
    def from_dense(cls, x: Sequence[float]) -> "SparseVector":
        x = np.asarray(x, dtype=float)
        nz = np.flatnonzero(x)
        return cls(tuple(int(k) for k in nz), tuple(float(x[k]) for k in nz), len(x))

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices, self.values))

    def __getitem__(self, k: int) -> float:
        # indices are sorted, so a bisection would do; vectors here are tiny
        for idx, v in zip(self.indices, self.values):
            if idx == k:
                return v
            if idx > k:
                break
        return 0.0

    def to_dense(self, dim: int | None = None) -> np.ndarray:
        out = np.zeros(self.dim if dim is None else dim)
        if self.indices:
            out[list(self.indices)] = self.values
        return out

    def with_dim(self, dim: int) -> "SparseVector":
        return SparseVector(self.indices, self.values, dim)


@dataclass(frozen=True)
class LabeledExample:
    features: SparseVector
    label: int

    def __post_init__(self):
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label!r}")


TOPOLOGY_KINDS = ("complete", "ring", "star", "custom")


@dataclass(frozen=True)
class Topology:
    """Undirected connected communication graph over ``n_agents`` agents.

    Self-loops are never stored; :func:`neighborhood` adds the agent itself.
    """

    n_agents: int
    edges: frozenset[tuple[int, int]]
    kind: str = "custom"
    _adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_agents
        if n < 1:
            raise ValueError("a topology needs at least one agent")
        if self.kind not in TOPOLOGY_KINDS:
            raise ValueError(f"unknown topology kind {self.kind!r}")
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) references an agent outside [0, {n})")
            if a == b:
                continue
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in norm:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adjacency", tuple(tuple(sorted(x)) for x in adj))
        if len(reachable(self, 0)) != n:
            raise ValueError("communication graph is not connected")

    @classmethod
    def complete(cls, n: int) -> "Topology":
        return cls(n, frozenset((a, b) for a in range(n) for b in range(a + 1, n)), "complete")

    @classmethod
    def ring(cls, n: int) -> "Topology":
        return cls(n, frozenset((i, (i + 1) % n) for i in range(n)), "ring")

    @classmethod
    def star(cls, n: int, center: int = 0) -> "Topology":
        return cls(n, frozenset((center, i) for i in range(n) if i != center), "star")

    @classmethod
    def from_name(cls, name: str, n: int) -> "Topology":
        try:
            return {"complete": cls.complete, "ring": cls.ring, "star": cls.star}[name](n)
        except KeyError:
            raise ValueError(f"unknown topology {name!r}") from None

    def adjacent(self, i: int) -> tuple[int, ...]:
        return self._adjacency[i]

    def degree(self, i: int) -> int:
        return len(self._adjacency[i])

    def neighbor_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighborhoods (self included) in ascending agent order, CSR-packed.

        The fixed ascending order is what makes merges reproducible.
        """
        ptr = [0]
        idx: list[int] = []
        for i in range(self.n_agents):
            idx.extend(sorted((i,) + self._adjacency[i]))
            ptr.append(len(idx))
        return np.asarray(ptr, dtype=np.int64), np.asarray(idx, dtype=np.int64)


def reachable(topology: Topology, start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in topology._adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def neighborhood(topology: Topology, i: int) -> frozenset[int]:
    """Agent ``i`` together with its adjacent agents (size ``N_i``)."""
    if not 0 <= i < topology.n_agents:
        raise IndexError(f"agent {i} out of range for {topology.n_agents} agents")
    return frozenset((i,) + topology.adjacent(i))


@dataclass
class AgentState:
    """Mutable per-agent parameters, owned by one agent between merges.

    ``params`` holds expert weights (length P) for the weighted-majority
    family, model weights (length D) for gradient descent, and the stacked
    ``(w_plus, w_minus)`` pair (length 2D) for exponentiated gradient.
    """

    agent_id: int
    params: np.ndarray
    cumulative_mistakes: int = 0
    cumulative_loss: float = 0.0

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        if self.cumulative_mistakes < 0:
            raise ValueError("cumulative mistakes cannot be negative")
