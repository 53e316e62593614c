# cython: language_level=3
"""Compiled kernels; contract and arithmetic order match ``_pykernels``.

With ``parallel=True`` the per-agent phases run under OpenMP ``prange``. Every
agent's arithmetic is the same as in the serial loop and merges read
neighbors in ascending order, so the flag never changes a bit of output.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport exp, log, sqrt

cnp.import_array()

BACKEND = "compiled"

MERGE_GEOMETRIC = 0
MERGE_ARITHMETIC = 1
VARIANT_OGD = 0
VARIANT_EG = 1

cdef int MAX_THREADS = 8


def stump_errors(column, labels, thresholds):
    cdef const double[::1] col = np.ascontiguousarray(column, dtype=np.float64)
    cdef const cnp.int8_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int8)
    cdef const double[::1] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t n = col.shape[0], k = thr.shape[0], r, lo, hi, mid, q
    cdef double x
    cdef cnp.int64_t[::1] neg = np.zeros(k + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] pos = np.zeros(k + 1, dtype=np.int64)
    out = np.zeros(k, dtype=np.int64)
    cdef cnp.int64_t[::1] err = out
    cdef cnp.int64_t run
    with nogil:
        for r in range(n):
            x = col[r]
            # count of thresholds <= x (upper bound bisection)
            lo = 0
            hi = k
            while lo < hi:
                mid = (lo + hi) // 2
                if thr[mid] <= x:
                    lo = mid + 1
                else:
                    hi = mid
            if lab[r] < 0:
                neg[lo] += 1
            elif lab[r] > 0:
                pos[lo] += 1
        run = 0
        for q in range(k - 1, -1, -1):
            run += neg[q + 1]
            err[q] = run
        run = 0
        for q in range(k):
            run += pos[q]
            err[q] += run
    return out


cdef inline Py_ssize_t _choose(double[:, ::1] w, Py_ssize_t i, double u) noexcept nogil:
    cdef Py_ssize_t p, P = w.shape[1]
    cdef double total = 0.0, cum = 0.0, target
    for p in range(P):
        total += w[i, p]
    target = u * total
    for p in range(P):
        cum += w[i, p]
        if target < cum:
            return p
    return P - 1


def choose_expert(w_row, double u):
    cdef double[:, ::1] w = np.ascontiguousarray(w_row, dtype=np.float64).reshape(1, -1)
    return int(_choose(w, 0, u))


cdef inline void _dwm_local(Py_ssize_t i, Py_ssize_t t, const cnp.int8_t[:, :, ::1] E,
                            const cnp.int8_t[:, ::1] L, double[:, ::1] w, double[:, ::1] wt,
                            double[:, ::1] logs, cnp.int8_t[:, ::1] preds, double alpha,
                            bint randomized, const double[:, ::1] U, bint geometric) noexcept nogil:
    cdef Py_ssize_t p, P = w.shape[1]
    cdef double pos = 0.0, neg = 0.0
    cdef cnp.int8_t out
    if randomized:
        out = E[i, t, _choose(w, i, U[i, t])]
    else:
        for p in range(P):
            if E[i, t, p] == 1:
                pos = pos + w[i, p]
            else:
                neg = neg + w[i, p]
        out = 1 if pos >= neg else -1
    preds[i, t] = out
    for p in range(P):
        if E[i, t, p] != L[i, t]:
            wt[i, p] = w[i, p] * alpha
        else:
            wt[i, p] = w[i, p]
        if geometric:
            logs[i, p] = log(wt[i, p])


cdef inline void _dwm_merge(Py_ssize_t i, const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] idx,
                            double[:, ::1] w, double[:, ::1] wt, double[:, ::1] logs,
                            bint geometric) noexcept nogil:
    cdef Py_ssize_t p, P = w.shape[1], a = ptr[i], b = ptr[i + 1], q, j
    cdef Py_ssize_t m = b - a
    cdef double acc, first
    cdef bint same
    for p in range(P):
        first = wt[idx[a], p]
        if m == 1:
            w[i, p] = first
            continue
        same = True
        for q in range(a, b):
            if wt[idx[q], p] != first:
                same = False
        if same:
            w[i, p] = first
            continue
        acc = 0.0
        if geometric:
            for q in range(a, b):
                acc = acc + logs[idx[q], p]
            w[i, p] = exp(acc / m)
        else:
            for q in range(a, b):
                acc = acc + wt[idx[q], p]
            w[i, p] = acc / m


def dwm_run(expert_preds, labels, nbr_ptr, nbr_idx, double alpha, int merge, w0,
            uniforms=None, bint record=False, bint parallel=False):
    cdef const cnp.int8_t[:, :, ::1] E = np.ascontiguousarray(expert_preds, dtype=np.int8)
    cdef const cnp.int8_t[:, ::1] L = np.ascontiguousarray(labels, dtype=np.int8)
    cdef Py_ssize_t N = E.shape[0], T = E.shape[1], P = E.shape[2], t, i
    cdef const cnp.int64_t[::1] ptr = np.ascontiguousarray(nbr_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] idx = np.ascontiguousarray(nbr_idx, dtype=np.int64)
    w_arr = np.array(w0, dtype=np.float64, copy=True).reshape(N, P)
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] wt = np.empty((N, P))
    cdef double[:, ::1] logs = np.empty((N, P))
    preds_arr = np.zeros((N, T), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] preds = preds_arr
    traj_arr = np.empty((T + 1 if record else 0, N, P))
    cdef double[:, :, ::1] traj = traj_arr
    cdef bint randomized = uniforms is not None
    cdef const double[:, ::1] U
    if randomized:
        U = np.ascontiguousarray(uniforms, dtype=np.float64)
    else:
        U = np.zeros((1, 1))
    cdef bint geometric = merge == MERGE_GEOMETRIC
    cdef int nthreads = <int>min(N, MAX_THREADS) if parallel else 1
    if record:
        traj_arr[0] = w_arr
    with nogil:
        for t in range(T):
            if parallel and N > 1:
                for i in prange(N, schedule="static", num_threads=nthreads):
                    _dwm_local(i, t, E, L, w, wt, logs, preds, alpha, randomized, U, geometric)
                for i in prange(N, schedule="static", num_threads=nthreads):
                    _dwm_merge(i, ptr, idx, w, wt, logs, geometric)
            else:
                for i in range(N):
                    _dwm_local(i, t, E, L, w, wt, logs, preds, alpha, randomized, U, geometric)
                for i in range(N):
                    _dwm_merge(i, ptr, idx, w, wt, logs, geometric)
            if record:
                traj[t + 1, :, :] = w
    return preds_arr, w_arr, traj_arr


cdef inline void _omd_local(Py_ssize_t i, Py_ssize_t t, const double[:, :, ::1] X,
                            const cnp.int8_t[:, ::1] Lab, double[:, ::1] w, double[:, ::1] g,
                            double[:, ::1] logs, cnp.int8_t[:, ::1] preds,
                            double[:, ::1] losses, bint eg, double C,
                            bint include_reg) noexcept nogil:
    cdef Py_ssize_t d, D = X.shape[2]
    cdef double dot = 0.0, coef, h, hinge, sq, part, lab = <double>Lab[i, t]
    cdef bint active
    for d in range(D):
        if eg:
            coef = w[i, d] - w[i, D + d]
        else:
            coef = w[i, d]
        dot = dot + coef * X[i, t, d]
    preds[i, t] = 1 if dot >= 0.0 else -1
    h = 1.0 - lab * dot
    active = h > 0.0
    hinge = h if active else 0.0
    if eg:
        losses[i, t] = hinge
        for d in range(D):
            part = -lab * X[i, t, d] if active else 0.0
            g[i, d] = part
            g[i, D + d] = -part
        for d in range(2 * D):
            logs[i, d] = log(w[i, d])
    else:
        sq = 0.0
        for d in range(D):
            sq = sq + w[i, d] * w[i, d]
        losses[i, t] = C * hinge + 0.5 * sq
        for d in range(D):
            part = -lab * X[i, t, d] if active else 0.0
            if include_reg:
                g[i, d] = C * part + w[i, d]
            else:
                g[i, d] = part


cdef inline void _omd_merge(Py_ssize_t i, const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] idx,
                            double[:, ::1] w, double[:, ::1] w_new, double[:, ::1] g,
                            double[:, ::1] logs, double eta, bint eg, double S) noexcept nogil:
    cdef Py_ssize_t k, K = w.shape[1], a = ptr[i], b = ptr[i + 1], q, j
    cdef Py_ssize_t m = b - a
    cdef double acc, l1
    for k in range(K):
        acc = 0.0
        for q in range(a, b):
            j = idx[q]
            if eg:
                acc = acc + (logs[j, k] - eta * g[j, k])
            else:
                acc = acc + (w[j, k] - eta * g[j, k])
        if eg:
            w_new[i, k] = exp(acc / m)
        else:
            w_new[i, k] = acc / m
    if eg:
        l1 = 0.0
        for k in range(K):
            l1 = l1 + w_new[i, k]
        if l1 > S:
            for k in range(K):
                w_new[i, k] = S * w_new[i, k] / l1


def omd_run(X, labels, nbr_ptr, nbr_idx, int variant, double C, double S, bint include_reg,
            w0, bint record=False, bint parallel=False):
    cdef const double[:, :, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int8_t[:, ::1] Lab = np.ascontiguousarray(labels, dtype=np.int8)
    cdef Py_ssize_t N = Xv.shape[0], T = Xv.shape[1], D = Xv.shape[2], t, i, k
    cdef bint eg = variant == VARIANT_EG
    cdef Py_ssize_t K = 2 * D if eg else D
    cdef const cnp.int64_t[::1] ptr = np.ascontiguousarray(nbr_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] idx = np.ascontiguousarray(nbr_idx, dtype=np.int64)
    a_arr = np.array(w0, dtype=np.float64, copy=True).reshape(N, K)
    b_arr = np.empty((N, K))
    cdef double[:, ::1] w = a_arr
    cdef double[:, ::1] w_new = b_arr
    cdef double[:, ::1] tmp
    cdef double[:, ::1] g = np.zeros((N, K))
    cdef double[:, ::1] logs = np.empty((N, K))
    preds_arr = np.zeros((N, T), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] preds = preds_arr
    losses_arr = np.zeros((N, T))
    cdef double[:, ::1] losses = losses_arr
    gsum_arr = np.zeros((T, K))
    cdef double[:, ::1] gsum = gsum_arr
    traj_arr = np.empty((T + 1 if record else 0, N, K))
    cdef double[:, :, ::1] traj = traj_arr
    cdef double eta, acc
    cdef int nthreads = <int>min(N, MAX_THREADS) if parallel else 1
    cdef int flips = 0
    if record:
        traj_arr[0] = a_arr
    with nogil:
        for t in range(T):
            eta = 1.0 / sqrt(t + 1.0)
            if parallel and N > 1:
                for i in prange(N, schedule="static", num_threads=nthreads):
                    _omd_local(i, t, Xv, Lab, w, g, logs, preds, losses, eg, C, include_reg)
                for i in prange(N, schedule="static", num_threads=nthreads):
                    _omd_merge(i, ptr, idx, w, w_new, g, logs, eta, eg, S)
            else:
                for i in range(N):
                    _omd_local(i, t, Xv, Lab, w, g, logs, preds, losses, eg, C, include_reg)
                for i in range(N):
                    _omd_merge(i, ptr, idx, w, w_new, g, logs, eta, eg, S)
            for k in range(K):
                acc = 0.0
                for i in range(N):
                    acc = acc + g[i, k]
                gsum[t, k] = acc
            tmp = w
            w = w_new
            w_new = tmp
            flips = flips + 1
            if record:
                traj[t + 1, :, :] = w
    final = a_arr if flips % 2 == 0 else b_arr
    return preds_arr, losses_arr, gsum_arr, final, traj_arr
