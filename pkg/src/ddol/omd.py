"""Distributed online mirror descent on hinge objectives.

The closed-form merges are what the simulator runs; the numerical prox
solver exists to check them."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import LabeledExample, SparseVector

VARIANTS = ("ogd", "eg")


@dataclass(frozen=True)
class OmdConfig:
    variant: str
    n_agents: int
    C: float = 1.0
    S: float = 1e4
    include_regularizer: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.C <= 0 or self.S <= 0:
            raise ValueError("C and S must be positive")
        if self.n_agents < 1:
            raise ValueError("need at least one agent")


def eta(t: int) -> float:
    """Step size at 1-based round ``t``."""
    return 1.0 / math.sqrt(t)


@dataclass
class EgState:
    """Signed weights as a difference of two strictly positive vectors."""

    w_plus: np.ndarray
    w_minus: np.ndarray

    def __post_init__(self):
        self.w_plus = np.asarray(self.w_plus, dtype=float)
        self.w_minus = np.asarray(self.w_minus, dtype=float)
        if self.w_plus.shape != self.w_minus.shape:
            raise ValueError("w_plus and w_minus differ in shape")
        if np.any(self.w_plus <= 0) or np.any(self.w_minus <= 0):
            raise ValueError("EG components must be strictly positive")

    @property
    def effective(self) -> np.ndarray:
        return self.w_plus - self.w_minus

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.w_plus, self.w_minus])

    @classmethod
    def from_stacked(cls, v: np.ndarray) -> "EgState":
        v = np.asarray(v, dtype=float)
        D = len(v) // 2
        return cls(v[:D].copy(), v[D:].copy())

    @classmethod
    def initial(cls, dim: int, S: float) -> "EgState":
        """All-ones start (effective weights zero), shrunk onto the l1 ball if needed."""
        v = np.ones(2 * dim)
        if v.sum() > S:
            v = S * v / v.sum()
        return cls.from_stacked(v)


def _xl(example) -> tuple[np.ndarray | SparseVector, int]:
    if isinstance(example, LabeledExample):
        return example.features, example.label
    x, label = example
    return x, int(label)


def _dot(w: np.ndarray, x) -> float:
    if isinstance(x, SparseVector):
        acc = 0.0
        for k, v in x.entries:
            acc += float(w[k]) * v
        return acc
    return float(np.dot(w, x))


def _dense(x, dim: int) -> np.ndarray:
    return x.to_dense(dim) if isinstance(x, SparseVector) else np.asarray(x, dtype=float)


def ogd_loss(w, example, C: float) -> float:
    """``C * max(0, 1 - l <w, x>) + ||w||^2 / 2``."""
    w = np.asarray(w, dtype=float)
    x, label = _xl(example)
    return C * max(0.0, 1.0 - label * _dot(w, x)) + 0.5 * float(np.dot(w, w))


def hinge_loss(w, example) -> float:
    x, label = _xl(example)
    return max(0.0, 1.0 - label * _dot(np.asarray(w, dtype=float), x))


def hinge_subgradient(w, example, C: float = 1.0, include_regularizer: bool = True) -> np.ndarray:
    """Subgradient of the hinge objective at ``w``.

    The hinge part is ``-l x`` while the margin is violated and 0 otherwise.
    With ``include_regularizer`` it is scaled by ``C`` and ``w`` is added (the
    regularized gradient-descent objective); without, it is returned as is.
    """
    w = np.asarray(w, dtype=float)
    x, label = _xl(example)
    active = 1.0 - label * _dot(w, x) > 0.0
    part = -label * _dense(x, len(w)) if active else np.zeros(len(w))
    return C * part + w if include_regularizer else part


def eg_gradient(g: np.ndarray) -> np.ndarray:
    """Gradient with respect to stacked ``(w_plus, w_minus)`` given the gradient in ``w``."""
    g = np.asarray(g, dtype=float)
    return np.concatenate([g, -g])


def dogd_update(neighbor_states: Sequence[tuple[np.ndarray, np.ndarray]], eta_t: float) -> np.ndarray:
    """``(1/N_i) * sum_j (w_j - eta_t * g_j)``."""
    if not neighbor_states:
        raise ValueError("empty neighborhood")
    acc = np.zeros(len(neighbor_states[0][0]))
    for w, g in neighbor_states:
        acc = acc + (np.asarray(w, dtype=float) - eta_t * np.asarray(g, dtype=float))
    return acc / len(neighbor_states)


def doeg_update(neighbor_states: Sequence[tuple[np.ndarray, np.ndarray]], eta_t: float,
                S: float = math.inf) -> np.ndarray:
    """Geometric mean of ``w_j * exp(-eta_t * g_j)``, rescaled onto ``||w||_1 <= S``.

    Pass stacked ``(w_plus, w_minus)`` vectors with :func:`eg_gradient` for
    signed weights.
    """
    if not neighbor_states:
        raise ValueError("empty neighborhood")
    K = len(neighbor_states[0][0])
    acc = np.zeros(K)
    for w, g in neighbor_states:
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise ValueError("exponentiated-gradient weights must be strictly positive")
        logs = np.array([math.log(v) for v in w])
        acc = acc + (logs - eta_t * np.asarray(g, dtype=float))
    m = acc / len(neighbor_states)
    out = np.array([math.exp(v) for v in m])
    l1 = 0.0
    for v in out:
        l1 += float(v)
    if l1 > S:
        out = S * out / l1
    return out


def omd_predict(state, x) -> int:
    """Sign of the margin, with 0 mapped to +1."""
    w = state.effective if isinstance(state, EgState) else np.asarray(state, dtype=float)
    return 1 if _dot(w, x) >= 0.0 else -1


# -- divergences ------------------------------------------------------------

def euclidean_divergence(u, v) -> float:
    d = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return 0.5 * float(d @ d)


def entropy_divergence(u, v) -> float:
    """Unnormalized relative entropy ``sum u ln(u/v) - u + v`` for positive vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(np.sum(u * np.log(u / v) - u + v))


DIVERGENCES = {"euclidean": euclidean_divergence, "unnormalized-entropy": entropy_divergence}


# -- prox oracle ------------------------------------------------------------

class OracleDidNotConverge(RuntimeError):
    pass


def _descend(objective, grad, project, z, tol, max_iter, positive):
    """Projected gradient descent with backtracking.

    ``project`` must be an affine projection, so the tangent residual
    ``||z - project(z - grad)||`` goes to zero at the minimizer.
    """
    f = objective(z)
    gz = grad(z)
    step = 1.0
    for _ in range(max_iter):
        r = float(np.linalg.norm(z - project(z - gz)))
        if r <= tol:
            return z
        roundoff = 1e-13 * max(1.0, abs(f))
        while True:
            cand = project(z - step * gz)
            if not positive or np.all(cand > 0):
                fc = objective(cand)
                gc = grad(cand)
                if fc <= f - 0.5 / step * float((cand - z) @ (cand - z)) - roundoff:
                    break
                # objective no longer resolves progress: fall back to the residual
                if float(np.linalg.norm(cand - project(cand - gc))) < r:
                    break
            step *= 0.5
            if step < 1e-20:
                raise OracleDidNotConverge("line search collapsed")
        z, f, gz = cand, fc, gc
        step *= 2.0
    raise OracleDidNotConverge(f"no convergence within {max_iter} iterations")


def bregman_prox_oracle(neighbor_states: Sequence[tuple[np.ndarray, np.ndarray]], eta_t: float,
                        divergence: str = "euclidean", radius: float | None = None,
                        tol: float = 1e-9, max_iter: int = 100_000) -> np.ndarray:
    """Minimize ``sum_j [eta_t <g_j, z - w_j> + psi(z, w_j)]`` numerically.

    Gradient descent with backtracking until the gradient norm is at most
    ``tol``. ``radius`` restricts ``z`` to ``||z||_1 <= radius`` (entropy
    only): if the unconstrained minimizer violates it, the constraint is
    active and descent continues projected onto ``sum(z) = radius``.
    Raises :class:`OracleDidNotConverge` past ``max_iter``. Intended for small
    problems (dimension and neighborhood at most 8).
    """
    W = np.array([np.asarray(w, dtype=float) for w, _ in neighbor_states])
    G = np.array([np.asarray(g, dtype=float) for _, g in neighbor_states])
    m, K = W.shape
    if m > 8 or K > 8:
        raise ValueError("prox oracle is limited to 8 neighbors and 8 coordinates")
    psi = DIVERGENCES[divergence]
    lin = eta_t * G.sum(axis=0)

    def objective(z):
        return float(lin @ z) + sum(psi(z, w) for w in W)

    def identity(z):
        return z

    if divergence == "euclidean":
        if radius is not None:
            raise ValueError("the euclidean oracle is unconstrained")
        wsum = W.sum(axis=0)
        return _descend(objective, lambda z: lin + (m * z - wsum), identity,
                        W.mean(axis=0), tol, max_iter, positive=False)

    if np.any(W <= 0):
        raise ValueError("entropy divergence needs positive points")
    logW = np.log(W).sum(axis=0)

    def grad(z):
        return lin + (m * np.log(z) - logW)

    z = _descend(objective, grad, identity, W.mean(axis=0), tol, max_iter, positive=True)
    if radius is None or z.sum() <= radius:
        return z

    def onto_plane(v):
        return v - (v.sum() - radius) / K

    start = radius * z / z.sum()
    return _descend(objective, grad, onto_plane, start, tol, max_iter, positive=True)


# -- regret -----------------------------------------------------------------

@dataclass(frozen=True)
class RegretReport:
    individual: np.ndarray
    social: float
    average: float


def regret_accounting(losses: np.ndarray, comparator_loss) -> RegretReport:
    """Regrets of each agent against the cumulative loss of a fixed comparator.

    ``losses`` is ``(N, T)``; ``comparator_loss`` holds one cumulative value
    per agent (or a per-round ``(N, T)`` array, which is summed).
    """
    L = np.atleast_2d(np.asarray(losses, dtype=float))
    comp = np.asarray(comparator_loss, dtype=float)
    if comp.ndim == 2:
        if comp.shape != L.shape:
            raise ValueError("per-round comparator losses must match the loss array")
        comp = comp.sum(axis=1)
    comp = np.broadcast_to(comp, (L.shape[0],)) if comp.ndim == 0 else comp
    if comp.shape != (L.shape[0],):
        raise ValueError("need one comparator loss per agent")
    R = L.sum(axis=1) - comp
    return RegretReport(R, float(R.sum()), float(R.mean()))


def objective_losses(X: np.ndarray, y: np.ndarray, w: np.ndarray, variant: str, C: float) -> np.ndarray:
    """Per-round losses of a fixed effective weight vector ``w`` on dense
    streams ``X`` of shape ``(N, T, D)``."""
    margins = np.asarray(y, dtype=float) * (X @ w)
    hinge = np.maximum(0.0, 1.0 - margins)
    if variant == "ogd":
        return C * hinge + 0.5 * float(w @ w)
    return hinge


def best_comparator(X: np.ndarray, y: np.ndarray, variant: str, C: float, S: float,
                    reference: np.ndarray) -> tuple[np.ndarray, float]:
    """Best of zero and positive multiples of ``reference`` (kept inside the
    feasible set) by total loss over all agents' streams."""
    best_w = np.zeros(X.shape[-1])
    best = float(objective_losses(X, y, best_w, variant, C).sum())
    l1 = float(np.abs(reference).sum())
    for c in (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
        cand = c * reference
        if variant == "eg" and c * l1 > S:
            continue
        total = float(objective_losses(X, y, cand, variant, C).sum())
        if total < best:
            best, best_w = total, cand
    return best_w, best
