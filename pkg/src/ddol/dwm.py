"""Weighted majority over a shared expert pool, single- and multi-agent.

The functions here operate on one round at a time and are the readable
reference; :mod:`ddol.sim` drives whole runs through :mod:`ddol.kernels`.
Labels and expert predictions are always in {-1, +1}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Topology
from .experts import ExpertPool
from .kernels import choose_expert


@dataclass(frozen=True)
class DwmConfig:
    alpha: float
    n_agents: int
    pool: ExpertPool
    randomized: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n_agents < 1:
            raise ValueError("need at least one agent")


def vote(weights: Sequence[float], preds: Sequence[int]) -> int:
    """Weighted vote; a tie goes to +1."""
    if len(weights) != len(preds):
        raise ValueError("weights and predictions differ in length")
    pos = 0.0
    neg = 0.0
    for w, y in zip(weights, preds):
        if y == 1:
            pos = pos + float(w)
        else:
            neg = neg + float(w)
    return 1 if pos >= neg else -1


def penalize(weights, preds, label: int, alpha: float) -> np.ndarray:
    """Multiply the weight of every expert that disagreed with ``label`` by ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    w = np.asarray(weights, dtype=float)
    wrong = np.asarray(preds) != label
    return np.where(wrong, w * alpha, w)


def _neighbor_mean(penalized: np.ndarray, topology: Topology, geometric: bool) -> np.ndarray:
    W = np.asarray(penalized, dtype=float)
    if W.ndim != 2 or W.shape[0] != topology.n_agents:
        raise ValueError("expected an N x P matrix with one row per agent")
    if np.any(W <= 0):
        raise ValueError("weights must be strictly positive")
    ptr, idx = topology.neighbor_csr()
    out = np.empty_like(W)
    for i in range(topology.n_agents):
        nb = idx[ptr[i]:ptr[i + 1]]
        for p in range(W.shape[1]):
            vals = [float(W[j, p]) for j in nb]
            if len(vals) == 1 or all(v == vals[0] for v in vals):
                out[i, p] = vals[0]
                continue
            acc = 0.0
            if geometric:
                # log space: products of many sub-unity weights underflow
                for v in vals:
                    acc = acc + math.log(v)
                out[i, p] = math.exp(acc / len(vals))
            else:
                for v in vals:
                    acc = acc + v
                out[i, p] = acc / len(vals)
    return out


def dwm_i_merge(penalized: np.ndarray, topology: Topology) -> np.ndarray:
    """Geometric mean of each expert's penalized weight over each neighborhood."""
    return _neighbor_mean(penalized, topology, geometric=True)


def dwm_a_merge(penalized: np.ndarray, topology: Topology) -> np.ndarray:
    """Arithmetic mean of each expert's penalized weight over each neighborhood."""
    return _neighbor_mean(penalized, topology, geometric=False)


def rwm_choose(weights: Sequence[float], rng: np.random.Generator) -> int:
    """Draw an expert index with probability proportional to its weight."""
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    return int(choose_expert(w, float(rng.random())))


def agent_rng(master_seed: int, agent_id: int) -> np.random.Generator:
    """Per-agent generator; independent of how many other agents exist."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(agent_id)]))


MERGES = {"imitation": dwm_i_merge, "averaging": dwm_a_merge}


def dwm_round(weights: np.ndarray, expert_preds: np.ndarray, labels: Sequence[int],
              cfg: DwmConfig, topology: Topology, variant: str = "imitation",
              rngs: Sequence[np.random.Generator] | None = None):
    """One synchronous round for all agents.

    ``expert_preds`` is ``(N, P)`` for this round's examples. Each agent
    predicts with its previous-round weights (vote, or a weighted random
    expert when ``cfg.randomized``), is penalized, then every agent merges.
    Returns ``(predictions, new_weights, mistakes)``.
    """
    W = np.asarray(weights, dtype=float)
    E = np.asarray(expert_preds)
    N = topology.n_agents
    if cfg.randomized and rngs is None:
        raise ValueError("randomized rounds need one generator per agent")
    preds = np.empty(N, dtype=np.int8)
    penalized = np.empty_like(W)
    for i in range(N):
        if cfg.randomized:
            preds[i] = E[i, rwm_choose(W[i], rngs[i])]
        else:
            preds[i] = vote(W[i], E[i])
        penalized[i] = penalize(W[i], E[i], int(labels[i]), cfg.alpha)
    new = MERGES[variant](penalized, topology)
    return preds, new, preds != np.asarray(labels)


def wma_trajectory(expert_preds: np.ndarray, labels: Sequence[int], alpha: float,
                   randomized: bool = False, rng: np.random.Generator | None = None):
    """Classic single-agent weighted majority (or randomized WM).

    ``expert_preds`` is ``(T, P)``. Returns ``(predictions[T], weights[T+1, P])``.
    """
    E = np.asarray(expert_preds)
    T, P = E.shape
    w = np.ones(P)
    traj = np.empty((T + 1, P))
    traj[0] = w
    preds = np.empty(T, dtype=np.int8)
    for t in range(T):
        if randomized:
            preds[t] = E[t, rwm_choose(w, rng)]
        else:
            preds[t] = vote(w, E[t])
        w = penalize(w, E[t], int(labels[t]), alpha)
        traj[t + 1] = w
    return preds, traj
