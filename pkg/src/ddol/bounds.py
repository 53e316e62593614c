"""Closed-form mistake and regret bounds, evaluated on measured quantities.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _rate(alpha: float) -> float:
    return math.log(2.0 / (1.0 + alpha))


@dataclass
class BoundInputs:
    """Measured quantities the bounds are evaluated on, kept for auditing."""

    N: int
    P: int
    alpha: float
    m_star: int = 0
    m_star_series: Sequence[int] = field(default_factory=list)
    diam_bound: float = 0.0
    grad_bound: float = 0.0
    strong_convexity: float = 1.0
    T: int = 0

    def __post_init__(self):
        _check_alpha(self.alpha)
        series = np.asarray(self.m_star_series)
        if series.size and (series.min() < 0 or series.max() > self.N):
            raise ValueError("per-round best-expert mistakes must lie in [0, N]")
        if series.sum() > self.m_star:
            raise ValueError("per-round series sums past m_star")
        if self.strong_convexity <= 0:
            raise ValueError("strong convexity modulus must be positive")


def dwm_i_bound(m_star: float, N: int, P: int, alpha: float) -> float:
    """Per-agent mistake bound for imitation (geometric) merging."""
    _check_alpha(alpha)
    return (m_star / N * math.log(1.0 / alpha) + math.log(P)) / _rate(alpha)


def dwm_i_coefficient(alpha: float) -> float:
    """Coefficient of ``m_star / N`` in :func:`dwm_i_bound`."""
    _check_alpha(alpha)
    return math.log(1.0 / alpha) / _rate(alpha)


def dwm_social_bound(m_star: float, N: int, P: int, alpha: float) -> float:
    """Bound on the total mistakes of all agents."""
    _check_alpha(alpha)
    return (m_star * math.log(1.0 / alpha) + N * math.log(P)) / _rate(alpha)


def dwm_a_bound(m_star_series: Sequence[float], N: int, P: int, alpha: float) -> float:
    """Per-agent mistake bound for averaging (arithmetic) merging, from the
    per-round best-expert mistake counts."""
    _check_alpha(alpha)
    m = np.asarray(m_star_series, dtype=float)
    if m.size and (m.min() < 0 or m.max() > N):
        raise ValueError("per-round best-expert mistakes must lie in [0, N]")
    c = 1.0 - alpha
    total = float(np.sum(c * m / (N - c * m))) if m.size else 0.0
    return (total + math.log(P)) / _rate(alpha)


def dwm_a_condition(alpha: float, N: float) -> float:
    """Per-round count below which the averaging bound beats the imitation
    bound term by term; stated for ``alpha < 1/2``."""
    if not 0.0 < alpha < 0.5:
        raise ValueError("the condition applies only for 0 < alpha < 1/2")
    return N * (1.0 / (1.0 - alpha) - 1.0 / math.log(1.0 / alpha))


def dual_norm(v: np.ndarray, norm: str) -> float:
    v = np.asarray(v, dtype=float)
    if norm == "l2":
        return float(np.sqrt(v @ v))
    if norm == "linf":
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise ValueError(f"unknown dual norm {norm!r}")


def domd_avg_regret_bound(diam_bound: float, a: float, grad_sums: np.ndarray, N: int,
                          T: int | None = None, norm: str = "l2") -> float:
    """Bound on the average individual regret under step size ``1/sqrt(t)``.

    ``grad_sums`` is ``(T, K)``: the sum over agents of their gradients at
    each round. ``norm`` is the dual norm matching the divergence (``"l2"``
    for squared Euclidean, ``"linf"`` for entropy).
    """
    if a <= 0:
        raise ValueError("strong convexity modulus must be positive")
    G = np.atleast_2d(np.asarray(grad_sums, dtype=float))
    T = G.shape[0] if T is None else T
    if G.shape[0] != T:
        raise ValueError("need one aggregated gradient per round")
    if norm == "l2":
        sq = np.einsum("tk,tk->t", G, G)
    else:
        sq = np.max(np.abs(G), axis=1) ** 2 if G.shape[1] else np.zeros(T)
    steps = 1.0 / np.sqrt(np.arange(1, T + 1))
    return diam_bound * math.sqrt(T) + float(np.sum(steps * sq)) / (2.0 * a * N * N)


def domd_social_regret_cases(diam_bound: float, grad_bound: float, a: float, N: int,
                             T: int) -> dict:
    """Optimistic and pessimistic social-regret expressions for ``N`` agents
    each processing ``T`` samples, next to the single agent processing ``NT``.

    These carry the squared diameter as written in the source discussion;
    :func:`domd_avg_regret_bound` uses the diameter itself.
    """
    D2, G2, rt = diam_bound ** 2, grad_bound ** 2, math.sqrt(T)
    return {
        "optimistic": (N * D2 + G2 / a) * rt,
        "pessimistic": (N * D2 + N * G2 / a) * rt,
        "single_agent": (D2 * math.sqrt(N) + G2 * math.sqrt(N) / a) * rt,
    }
