"""Pure-Python kernels.

Same contract as the compiled ``_ckernels`` module and bit-identical to it:
elementwise IEEE operations may be vectorized across agents with numpy, but
every reduction runs in a fixed order (experts, neighbors, coordinates) and
``exp``/``log`` go through ``math`` (libm), never numpy's SIMD versions.

``parallel=True`` runs the per-agent phases on worker threads separated by
barriers; the arithmetic per agent is unchanged, so results do not depend on
the flag.
"""
from __future__ import annotations

import math
import threading

import numpy as np

BACKEND = "python"

MERGE_GEOMETRIC = 0
MERGE_ARITHMETIC = 1
VARIANT_OGD = 0
VARIANT_EG = 1

_MAX_THREADS = 8

_log = np.frompyfunc(math.log, 1, 1)
_exp = np.frompyfunc(math.exp, 1, 1)


def _flog(a: np.ndarray) -> np.ndarray:
    return _log(a).astype(np.float64)


def _fexp(a: np.ndarray) -> np.ndarray:
    return _exp(a).astype(np.float64)


def _run_rounds(n_agents, n_rounds, local, merge, after_merge, parallel):
    """Drive ``local`` / ``merge`` over agent slices with barrier phases."""
    if not parallel or n_agents < 2:
        for t in range(n_rounds):
            local(0, n_agents, t)
            merge(0, n_agents, t)
            after_merge(t)
        return
    n_workers = min(n_agents, _MAX_THREADS)
    bounds = np.linspace(0, n_agents, n_workers + 1).astype(int)
    round_box = [0]
    errors: list[BaseException] = []

    def _advance():
        after_merge(round_box[0])
        round_box[0] += 1

    after_local = threading.Barrier(n_workers)
    end_of_round = threading.Barrier(n_workers, action=_advance)

    def worker(lo, hi):
        try:
            for t in range(n_rounds):
                local(lo, hi, t)
                after_local.wait()
                merge(lo, hi, t)
                end_of_round.wait()
        except threading.BrokenBarrierError:
            pass
        except BaseException as exc:  # pragma: no cover - surfaced below
            errors.append(exc)
            after_local.abort()
            end_of_round.abort()

    threads = [
        threading.Thread(target=worker, args=(int(bounds[k]), int(bounds[k + 1])), daemon=True)
        for k in range(n_workers)
    ]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        raise errors[0]


def stump_errors(column, labels, thresholds):
    """Training errors of the polarity +1 stump ``x >= thr -> +1`` per threshold.

    ``thresholds`` must be sorted ascending. Errors of the opposite polarity
    are ``len(column) - errors``.
    """
    column = np.asarray(column, dtype=np.float64)
    labels = np.asarray(labels)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    k = len(thresholds)
    # number of thresholds <= x, i.e. how many stumps send x to +1
    above = np.searchsorted(thresholds, column, side="right")
    neg = np.bincount(above[labels < 0], minlength=k + 1)
    pos = np.bincount(above[labels > 0], minlength=k + 1)
    # threshold q predicts +1 for x iff q < above(x)
    neg_predicted_pos = np.cumsum(neg[::-1])[::-1][1:]
    pos_predicted_neg = np.cumsum(pos)[:k]
    return (neg_predicted_pos + pos_predicted_neg).astype(np.int64)


def choose_expert(w_row, u):
    """Inverse-CDF draw: first index whose running weight sum exceeds ``u * total``."""
    total = 0.0
    for v in w_row:
        total += float(v)
    target = u * total
    cum = 0.0
    last = len(w_row) - 1
    for p in range(last + 1):
        cum += float(w_row[p])
        if target < cum:
            return p
    return last


def dwm_run(expert_preds, labels, nbr_ptr, nbr_idx, alpha, merge, w0,
            uniforms=None, record=False, parallel=False):
    """Run the weighted-majority family over ``T`` rounds for ``N`` agents.

    Returns ``(predictions[N, T], final_weights[N, P], trajectory)`` where
    ``trajectory`` has shape ``(T + 1, N, P)`` when ``record`` else ``(0, N, P)``.
    """
    E = np.ascontiguousarray(expert_preds, dtype=np.int8)
    L = np.ascontiguousarray(labels, dtype=np.int8)
    N, T, P = E.shape
    ptr = np.asarray(nbr_ptr, dtype=np.int64)
    idx = np.asarray(nbr_idx, dtype=np.int64)
    w = np.array(w0, dtype=np.float64, copy=True).reshape(N, P)
    wt = np.empty_like(w)
    logs = np.empty_like(w)
    preds = np.zeros((N, T), dtype=np.int8)
    traj = np.empty((T + 1 if record else 0, N, P))
    if record:
        traj[0] = w
    randomized = uniforms is not None
    if randomized:
        U = np.asarray(uniforms, dtype=np.float64)
    alpha = float(alpha)
    geometric = merge == MERGE_GEOMETRIC

    def local(lo, hi, t):
        e = E[lo:hi, t, :]
        if randomized:
            out = np.empty(hi - lo, dtype=np.int8)
            for r in range(hi - lo):
                out[r] = e[r, choose_expert(w[lo + r], float(U[lo + r, t]))]
        else:
            pos = np.zeros(hi - lo)
            neg = np.zeros(hi - lo)
            for p in range(P):
                up = e[:, p] == 1
                pos = np.where(up, pos + w[lo:hi, p], pos)
                neg = np.where(up, neg, neg + w[lo:hi, p])
            out = np.where(pos >= neg, 1, -1).astype(np.int8)
        preds[lo:hi, t] = out
        wrong = e != L[lo:hi, t, None]
        wt[lo:hi] = np.where(wrong, w[lo:hi] * alpha, w[lo:hi])
        if geometric:
            logs[lo:hi] = _flog(wt[lo:hi])

    def merge_rows(lo, hi, t):
        for i in range(lo, hi):
            nb = idx[ptr[i]:ptr[i + 1]]
            rows = wt[nb]
            if len(nb) == 1:
                w[i] = rows[0]
                continue
            same = np.all(rows == rows[0], axis=0)
            acc = np.zeros(P)
            if geometric:
                for j in nb:
                    acc = acc + logs[j]
                merged = _fexp(acc / len(nb))
            else:
                for j in nb:
                    acc = acc + wt[j]
                merged = acc / len(nb)
            # mean of identical values is that value; skip the rounding
            w[i] = np.where(same, rows[0], merged)

    def after(t):
        if record:
            traj[t + 1] = w

    _run_rounds(N, T, local, merge_rows, after, parallel)
    return preds, w, traj


def omd_run(X, labels, nbr_ptr, nbr_idx, variant, C, S, include_reg, w0,
            record=False, parallel=False):
    """Run distributed online gradient descent or exponentiated gradient.

    ``variant`` 0 is gradient descent on ``C*hinge + ||w||^2/2`` (params length
    D); 1 is exponentiated gradient on the plain hinge with stacked
    ``(w_plus, w_minus)`` params (length 2D) and the l1 ball of radius ``S``.
    The step size at (1-based) round ``t`` is ``1/sqrt(t)``.

    Returns ``(predictions[N, T], losses[N, T], grad_sum[T, K], final_w[N, K],
    trajectory)``; ``grad_sum[t]`` is the sum of all agents' gradients at round t.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Lab = np.ascontiguousarray(labels, dtype=np.int8)
    N, T, D = X.shape
    ptr = np.asarray(nbr_ptr, dtype=np.int64)
    idx = np.asarray(nbr_idx, dtype=np.int64)
    eg = variant == VARIANT_EG
    K = 2 * D if eg else D
    w = np.array(w0, dtype=np.float64, copy=True).reshape(N, K)
    w_new = np.empty_like(w)
    g = np.zeros((N, K))
    logs = np.empty_like(w)
    preds = np.zeros((N, T), dtype=np.int8)
    losses = np.zeros((N, T))
    grad_sum = np.zeros((T, K))
    traj = np.empty((T + 1 if record else 0, N, K))
    if record:
        traj[0] = w
    C = float(C)
    S = float(S)
    state = {"w": w, "w_new": w_new}

    def local(lo, hi, t):
        w = state["w"]
        x = X[lo:hi, t, :]
        lab = Lab[lo:hi, t].astype(np.float64)
        dot = np.zeros(hi - lo)
        for d in range(D):
            coef = w[lo:hi, d] - w[lo:hi, D + d] if eg else w[lo:hi, d]
            dot = dot + coef * x[:, d]
        preds[lo:hi, t] = np.where(dot >= 0.0, 1, -1)
        h = 1.0 - lab * dot
        active = h > 0.0
        hinge = np.where(active, h, 0.0)
        if eg:
            losses[lo:hi, t] = hinge
            for d in range(D):
                gp = np.where(active, -lab * x[:, d], 0.0)
                g[lo:hi, d] = gp
                g[lo:hi, D + d] = -gp
            logs[lo:hi] = _flog(w[lo:hi])
        else:
            sq = np.zeros(hi - lo)
            for d in range(D):
                sq = sq + w[lo:hi, d] * w[lo:hi, d]
            losses[lo:hi, t] = C * hinge + 0.5 * sq
            for d in range(D):
                part = np.where(active, -lab * x[:, d], 0.0)
                g[lo:hi, d] = C * part + w[lo:hi, d] if include_reg else part

    def merge_rows(lo, hi, t):
        w, w_new = state["w"], state["w_new"]
        eta = 1.0 / math.sqrt(t + 1.0)
        for i in range(lo, hi):
            nb = idx[ptr[i]:ptr[i + 1]]
            acc = np.zeros(K)
            if eg:
                for j in nb:
                    acc = acc + (logs[j] - eta * g[j])
                row = _fexp(acc / len(nb))
                l1 = 0.0
                for v in row:
                    l1 += float(v)
                if l1 > S:
                    row = S * row / l1
                w_new[i] = row
            else:
                for j in nb:
                    acc = acc + (w[j] - eta * g[j])
                w_new[i] = acc / len(nb)

    def after(t):
        acc = np.zeros(K)
        for i in range(N):
            acc = acc + g[i]
        grad_sum[t] = acc
        state["w"], state["w_new"] = state["w_new"], state["w"]
        if record:
            traj[t + 1] = state["w"]

    _run_rounds(N, T, local, merge_rows, after, parallel)
    return preds, losses, grad_sum, state["w"], traj
