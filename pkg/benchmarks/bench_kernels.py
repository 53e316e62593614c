"""Time the compiled and pure-Python kernels on the same inputs and check
that their outputs are identical.

    python3 benchmarks/bench_kernels.py --agents 8 --rounds 2000
"""
import argparse
import time

import numpy as np

from ddol import kernels
from ddol.core import Topology


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def cases(N, T, P, D, seed):
    rng = np.random.default_rng(seed)
    ptr, idx = Topology.complete(N).neighbor_csr()
    E = rng.choice([-1, 1], size=(N, T, P)).astype(np.int8)
    y = rng.choice([-1, 1], size=(N, T)).astype(np.int8)
    U = rng.random((N, T))
    X = rng.uniform(-1, 1, size=(N, T, D))
    yx = np.where(X @ rng.normal(size=D) >= 0, 1, -1).astype(np.int8)
    col = rng.normal(size=T * N)
    lab = rng.choice([-1, 1], size=T * N).astype(np.int8)
    thr = np.linspace(col.min(), col.max(), 200)
    return {
        "dwm-i": lambda k, par: k.dwm_run(E, y, ptr, idx, 0.9, k.MERGE_GEOMETRIC, np.ones((N, P)), None, False, par),
        "dwm-a": lambda k, par: k.dwm_run(E, y, ptr, idx, 0.9, k.MERGE_ARITHMETIC, np.ones((N, P)), None, False, par),
        "drwm": lambda k, par: k.dwm_run(E, y, ptr, idx, 0.9, k.MERGE_GEOMETRIC, np.ones((N, P)), U, False, par),
        "dogd": lambda k, par: k.omd_run(X, yx, ptr, idx, k.VARIANT_OGD, 1.0, 1e4, True, np.zeros((N, D)), False, par),
        "doeg": lambda k, par: k.omd_run(X, yx, ptr, idx, k.VARIANT_EG, 1.0, 1e4, True, np.ones((N, 2 * D)), False, par),
        "stumps": lambda k, par: k.stump_errors(col, lab, thr),
    }


def identical(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.array_equal(x, z) for x, z in zip(a, b))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--agents", type=int, default=4)
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--experts", type=int, default=16)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the Python backend is available")
    work = cases(args.agents, args.rounds, args.experts, args.dim, args.seed)
    print(f"N={args.agents} T={args.rounds} P={args.experts} D={args.dim}, best of {args.repeat}")
    print(f"{'kernel':<8} {'mode':<9} {'python s':>10} {'compiled s':>11} {'speedup':>8}  same")
    ok = True
    for name, fn in work.items():
        for par in (False, True):
            if name == "stumps" and par:
                continue
            t_py, out_py = best_of(lambda: fn(backends["python"], par), args.repeat)
            if "compiled" in backends:
                t_c, out_c = best_of(lambda: fn(backends["compiled"], par), args.repeat)
                same = identical(out_py, out_c)
                ok &= same
                print(f"{name:<8} {'parallel' if par else 'serial':<9} {t_py:>10.4f} {t_c:>11.4f} "
                      f"{t_py / t_c:>7.1f}x  {'yes' if same else 'NO'}")
            else:
                print(f"{name:<8} {'parallel' if par else 'serial':<9} {t_py:>10.4f} {'-':>11} {'-':>8}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
