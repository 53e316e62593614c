"""Round-synchronous multi-agent runs with full instrumentation.

Every round each agent predicts on its next example with the parameters left
by the previous merge, updates locally, and then all agents merge with their
neighborhoods. The loops themselves live in :mod:`ddol.kernels`; this module
builds their inputs and checks what comes back.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bounds, kernels
from .core import AgentState, Topology
from .data import Dataset, PartitionPlan, partition_indices
from .dwm import DwmConfig, agent_rng
from .omd import EgState, OmdConfig, best_comparator, entropy_divergence, euclidean_divergence
from .omd import objective_losses, regret_accounting

DWM_ALGOS = ("wma", "rwm", "dwm-i", "dwm-a", "drwm")
OMD_ALGOS = ("ogd", "eg", "dogd", "doeg")
ALGORITHMS = DWM_ALGOS + OMD_ALGOS

# algorithms whose agents never communicate
SOLO = ("wma", "rwm", "ogd", "eg")


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    algorithm: str
    topology: Topology
    n_rounds: int
    dataset: Dataset
    plan: PartitionPlan
    config: DwmConfig | OmdConfig
    seed: int = 0
    parallel: bool = False
    record_params: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise SimulationError(f"unknown algorithm {self.algorithm!r}")
        if self.plan.n_agents != self.topology.n_agents:
            raise SimulationError("partition plan and topology disagree on the agent count")
        if self.n_rounds < 1:
            raise SimulationError("need at least one round")
        want = DwmConfig if self.algorithm in DWM_ALGOS else OmdConfig
        if not isinstance(self.config, want):
            raise SimulationError(f"{self.algorithm} needs a {want.__name__}")
        if self.algorithm in OMD_ALGOS:
            expected = "eg" if self.algorithm in ("eg", "doeg") else "ogd"
            if self.config.variant != expected:
                raise SimulationError(f"{self.algorithm} needs variant {expected!r}")

    @property
    def n_agents(self) -> int:
        return self.topology.n_agents


@dataclass
class Metrics:
    algorithm: str
    n_agents: int
    n_rounds: int
    labels: np.ndarray
    predictions: np.ndarray
    mistakes: np.ndarray
    losses: np.ndarray
    cum_mistakes: np.ndarray
    cum_losses: np.ndarray
    final_states: list[AgentState]
    # weighted-majority instrumentation
    expert_round_mistakes: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), int))
    # m_star_series: round-t mistakes (over agents) of the expert best overall
    m_star_series: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    m_star: int = 0
    best_expert: int = -1
    # fewest mistakes of any expert at round t; reported, not used by the bounds
    round_min_series: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    expert_agent_totals: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), int))
    # mirror-descent instrumentation
    grad_sums: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    trajectory: np.ndarray | None = None

    @property
    def M(self) -> np.ndarray:
        """Total mistakes per agent."""
        return self.mistakes.sum(axis=1)


def agent_streams(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    """Dense per-agent streams truncated to ``n_rounds``: ``X[N, T, D]``, ``y[N, T]``."""
    X, y = spec.dataset.to_dense()
    parts = partition_indices(len(spec.dataset), spec.plan)
    T = spec.n_rounds
    short = min(len(p) for p in parts)
    if short < T:
        raise SimulationError(f"agent stream of length {short} cannot feed {T} rounds")
    rows = np.stack([p[:T] for p in parts])
    return X[rows], y[rows]


def _neighbors(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    if spec.algorithm in SOLO:
        n = spec.n_agents
        return np.arange(n + 1, dtype=np.int64), np.arange(n, dtype=np.int64)
    return spec.topology.neighbor_csr()


def run(spec: ExperimentSpec) -> Metrics:
    X, y = agent_streams(spec)
    ptr, idx = _neighbors(spec)
    if spec.algorithm in DWM_ALGOS:
        return _run_dwm(spec, X, y, ptr, idx)
    return _run_omd(spec, X, y, ptr, idx)


def _finish(spec, y, preds, losses, states, **extra) -> Metrics:
    mistakes = (preds != y).astype(np.int8)
    cum_m = np.cumsum(mistakes, axis=1, dtype=np.int64)
    cum_l = np.cumsum(losses, axis=1)
    for i, st in enumerate(states):
        st.cumulative_mistakes = int(cum_m[i, -1])
        st.cumulative_loss = float(cum_l[i, -1])
    return Metrics(spec.algorithm, spec.n_agents, spec.n_rounds, y, preds, mistakes, losses,
                   cum_m, cum_l, states, **extra)


def _run_dwm(spec, X, y, ptr, idx) -> Metrics:
    cfg: DwmConfig = spec.config
    E = cfg.pool.predict_dense(X)
    N, T, P = E.shape
    randomized = spec.algorithm in ("rwm", "drwm")
    uniforms = None
    if randomized:
        uniforms = np.stack([agent_rng(spec.seed, i).random(T) for i in range(N)])
    merge = kernels.MERGE_ARITHMETIC if spec.algorithm == "dwm-a" else kernels.MERGE_GEOMETRIC
    preds, w, traj = kernels.dwm_run(E, y, ptr, idx, cfg.alpha, merge, np.ones((N, P)),
                                     uniforms, spec.record_params, spec.parallel)
    wrong = E != y[:, :, None]
    per_round = wrong.sum(axis=0).astype(np.int64)  # (T, P): mistakes over agents
    totals = per_round.sum(axis=0)
    best = int(np.argmin(totals))
    states = [AgentState(i, w[i].copy()) for i in range(N)]
    return _finish(
        spec, y, preds, (preds != y).astype(float), states,
        expert_round_mistakes=per_round,
        m_star_series=per_round[:, best].copy(),
        m_star=int(totals[best]),
        best_expert=best,
        round_min_series=per_round.min(axis=1),
        expert_agent_totals=wrong.sum(axis=1).astype(np.int64),
        trajectory=traj if spec.record_params else None,
    )


def initial_params(spec: ExperimentSpec, dim: int) -> np.ndarray:
    cfg: OmdConfig = spec.config
    if cfg.variant == "eg":
        row = EgState.initial(dim, cfg.S).stacked()
    else:
        row = np.zeros(dim)
    return np.tile(row, (spec.n_agents, 1))


def _run_omd(spec, X, y, ptr, idx) -> Metrics:
    cfg: OmdConfig = spec.config
    D = X.shape[2]
    variant = kernels.VARIANT_EG if cfg.variant == "eg" else kernels.VARIANT_OGD
    preds, losses, gsum, w, traj = kernels.omd_run(
        X, y, ptr, idx, variant, cfg.C, cfg.S, cfg.include_regularizer,
        initial_params(spec, D), spec.record_params, spec.parallel)
    states = [AgentState(i, w[i].copy()) for i in range(spec.n_agents)]
    return _finish(spec, y, preds, losses, states, grad_sums=gsum,
                   trajectory=traj if spec.record_params else None)


# -- consistency ------------------------------------------------------------

@dataclass
class ReplayReport:
    ok: bool
    problems: list[str]

    def __bool__(self) -> bool:
        return self.ok


def replay_check(m: Metrics) -> ReplayReport:
    """Recompute everything derivable from the per-round series and compare."""
    problems: list[str] = []
    expect = (m.predictions != m.labels).astype(m.mistakes.dtype)
    for i, t in zip(*np.nonzero(expect != m.mistakes)):
        problems.append(f"agent {i} round {t}: mistake flag disagrees with prediction")
    for name, per, cum in (("mistakes", m.mistakes, m.cum_mistakes), ("loss", m.losses, m.cum_losses)):
        ref = np.cumsum(per, axis=1)
        bad = ~np.isclose(ref, cum, rtol=0, atol=1e-9 * max(1.0, float(np.abs(ref).max(initial=0))))
        for i, t in zip(*np.nonzero(bad)):
            problems.append(f"agent {i} round {t}: cumulative {name} {cum[i, t]} != prefix sum {ref[i, t]}")
            break
    for st in m.final_states:
        if st.cumulative_mistakes != int(m.mistakes[st.agent_id].sum()):
            problems.append(f"agent {st.agent_id}: final cumulative mistakes inconsistent")
    if m.m_star_series.size:
        over = np.nonzero(m.m_star_series > m.n_agents)[0]
        for t in over:
            problems.append(f"round {t}: best-expert mistakes {m.m_star_series[t]} exceed N={m.n_agents}")
        if m.round_min_series.size and np.any(m.round_min_series > m.m_star_series):
            problems.append("per-round minimum exceeds the best expert's count")
        if int(m.m_star_series.sum()) > m.m_star:
            problems.append(f"sum of per-round best-expert mistakes {int(m.m_star_series.sum())} "
                            f"exceeds m* = {m.m_star}")
        if m.expert_round_mistakes.size and int(m.expert_round_mistakes.sum(axis=0).min()) != m.m_star:
            problems.append("m* is not the smallest expert total")
    return ReplayReport(not problems, problems)


# -- bound checks -----------------------------------------------------------

def dwm_bound_report(m: Metrics, cfg: DwmConfig) -> dict:
    """Evaluate the mistake bounds on the instrumented quantities.

    ``dwm-i`` is held to the imitation bound and ``dwm-a`` to the averaging
    bound. Non-communicating ``wma`` agents are each held to the single-agent
    bound with their own best expert. Randomized runs get values, no verdict.
    """
    N, P, a = m.n_agents, cfg.pool.P, cfg.alpha
    report = {
        "m_star": m.m_star,
        "m_star_series_sum": int(m.m_star_series.sum()),
        "m_star_series_max": int(m.m_star_series.max(initial=0)),
        "best_expert": m.best_expert,
        "dwm_i_bound": bounds.dwm_i_bound(m.m_star, N, P, a),
        "dwm_a_bound": bounds.dwm_a_bound(m.m_star_series, N, P, a),
        "dwm_a_bound_round_min": bounds.dwm_a_bound(m.round_min_series, N, P, a),
        "social_bound": bounds.dwm_social_bound(m.m_star, N, P, a),
        "social_mistakes": int(m.M.sum()),
    }
    own = m.expert_agent_totals.min(axis=1) if m.expert_agent_totals.size else None
    agents = []
    for i, Mi in enumerate(m.M):
        entry = {"agent": i, "mistakes": int(Mi)}
        limit = None
        if m.algorithm == "dwm-i":
            limit = report["dwm_i_bound"]
        elif m.algorithm == "dwm-a":
            limit = report["dwm_a_bound"]
        elif m.algorithm == "wma":
            entry["own_m_star"] = int(own[i])
            limit = bounds.dwm_i_bound(int(own[i]), 1, P, a)
        if limit is not None:
            entry["bound"] = limit
            entry["bound_satisfied"] = bool(Mi <= limit)
        agents.append(entry)
    report["agents"] = agents
    return report


def strong_convexity(variant: str, trajectory: np.ndarray | None = None) -> float:
    """Modulus of the mirror map with respect to the primal norm of the
    matching dual norm: 1 for squared Euclidean, ``1/B`` for entropy on the
    positive orthant where ``B`` bounds the l1 norm of every visited point."""
    if variant == "ogd":
        return 1.0
    if trajectory is None:
        raise ValueError("the entropy modulus needs the recorded trajectory")
    return 1.0 / float(trajectory.sum(axis=2).max())


def domd_bound_report(spec: ExperimentSpec, m: Metrics, a: float | None = None) -> dict:
    """Average individual regret against the zero comparator next to the
    regret bound evaluated on the recorded gradient aggregates.

    Needs ``spec.record_params``. ``bound`` uses the largest divergence between
    two agents' parameters over all rounds. On a complete graph that is zero,
    so ``bound_comparator_diameter`` repeats the evaluation with the largest
    divergence from the comparator to any visited point instead.
    """
    if m.trajectory is None:
        raise SimulationError("regret bound needs a run with record_params=True")
    cfg: OmdConfig = spec.config
    X, y = agent_streams(spec)
    D = X.shape[2]
    traj = m.trajectory
    if cfg.variant == "ogd":
        psi, norm, ref = euclidean_divergence, "l2", np.zeros(D)
    else:
        psi, norm, ref = entropy_divergence, "linf", initial_params(spec, D)[0]
    a = strong_convexity(cfg.variant, traj) if a is None else a
    pair = 0.0
    for t in range(traj.shape[0]):
        for i in range(m.n_agents):
            for j in range(m.n_agents):
                if i != j:
                    pair = max(pair, psi(traj[t, i], traj[t, j]))
    diam = max(psi(ref, w) for w in traj.reshape(-1, traj.shape[2]))
    comp = objective_losses(X, y, np.zeros(D), cfg.variant, cfg.C).sum(axis=1)
    regret = regret_accounting(m.losses, comp)
    bound = bounds.domd_avg_regret_bound(pair, a, m.grad_sums, m.n_agents, norm=norm)
    wide = bounds.domd_avg_regret_bound(diam, a, m.grad_sums, m.n_agents, norm=norm)
    return {
        "comparator": "zero",
        "average_regret": regret.average,
        "individual_regret": regret.individual.tolist(),
        "social_regret": regret.social,
        "max_pairwise_divergence": pair,
        "comparator_diameter": diam,
        "strong_convexity": a,
        "dual_norm": norm,
        "bound": bound,
        "bound_satisfied": bool(regret.average <= bound),
        "bound_comparator_diameter": wide,
        "bound_comparator_diameter_satisfied": bool(regret.average <= wide),
    }


def omd_comparator_report(spec: ExperimentSpec, m: Metrics) -> dict:
    """Regrets against zero and against the best grid multiple of the final
    mean iterate (effective weights)."""
    cfg: OmdConfig = spec.config
    X, y = agent_streams(spec)
    D = X.shape[2]
    final = np.mean([st.params for st in m.final_states], axis=0)
    if cfg.variant == "eg":
        final = final[:D] - final[D:]
    zero = objective_losses(X, y, np.zeros(D), cfg.variant, cfg.C).sum(axis=1)
    w_best, _ = best_comparator(X, y, cfg.variant, cfg.C, cfg.S, final)
    grid = objective_losses(X, y, w_best, cfg.variant, cfg.C).sum(axis=1)
    return {
        "zero": regret_accounting(m.losses, zero).average,
        "grid": regret_accounting(m.losses, grid).average,
        "grid_comparator": w_best.tolist(),
    }
