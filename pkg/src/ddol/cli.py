"""Experiment runner: sweeps an algorithm over agent counts and writes one CSV
per run plus a summary.

    ddol --algo dwm-i --agents 1,2,4 --synthetic 12000,4,0.1,0.05 --rounds 3000 --out runs/
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from . import sim
from .core import Topology
from .data import LibsvmFormatError, PartitionPlan, SyntheticManifest, load_libsvm
from .dwm import DwmConfig
from .experts import train_stumps
from .omd import OmdConfig

# C and S per known dataset name
DATASET_DEFAULTS = {
    "cod-rna": (1e-2, 1e4),
    "covtype": (1e4, 1e4),
}


class DataError(Exception):
    pass


def _agents(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}")
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("agent counts must be >= 1")
    if len(set(vals)) != len(vals):
        raise argparse.ArgumentTypeError("agent counts must be distinct")
    return vals


def _synthetic(text: str) -> tuple[int, int, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected n,dim,margin,noise")
    try:
        n, dim, margin, noise = int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad synthetic spec {text!r}")
    if n < 1 or dim < 1 or margin <= 0 or not 0 <= noise < 1:
        raise argparse.ArgumentTypeError(f"synthetic spec out of range: {text!r}")
    return n, dim, margin, noise


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddol", description="Run distributed online learning experiments.")
    p.add_argument("--algo", required=True, choices=sim.ALGORITHMS)
    p.add_argument("--agents", type=_agents, default=[1], help="comma list of agent counts")
    p.add_argument("--topology", choices=("complete", "ring", "star"), default="complete")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="LIBSVM file")
    src.add_argument("--synthetic", type=_synthetic, metavar="n,dim,margin,noise")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--C", type=float)
    p.add_argument("--S", type=float)
    p.add_argument("--hinge-subgradient", action="store_true",
                   help="drop the regularizer from the gradient-descent subgradient")
    p.add_argument("--experts", type=int, default=4, help="number of stumps P")
    p.add_argument("--probes", type=int, default=200)
    p.add_argument("--rounds", type=int, help="rounds T (default: longest the data allows)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--partition", choices=("round-robin", "contiguous", "shuffled"), default="round-robin")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--emit-bounds", action="store_true",
                   help="also evaluate the regret bound for mirror-descent runs")
    return p


def _c_and_s(args, parser) -> tuple[float, float]:
    known = DATASET_DEFAULTS.get(args.data.stem if args.data else "", (None, None))
    C = args.C if args.C is not None else known[0]
    S = args.S if args.S is not None else known[1]
    if C is None or S is None:
        parser.error(f"--C and --S are required for {args.algo} on this dataset")
    return C, S


def write_csv(path: Path, m: sim.Metrics) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "agent", "mistake", "cum_mistakes", "loss", "cum_loss"])
        for t in range(m.n_rounds):
            for i in range(m.n_agents):
                w.writerow([t + 1, i, int(m.mistakes[i, t]), int(m.cum_mistakes[i, t]),
                            repr(float(m.losses[i, t])), repr(float(m.cum_losses[i, t]))])


def _summary(spec: sim.ExperimentSpec, m: sim.Metrics, seconds: float, emit_bounds: bool) -> dict:
    out = {
        "algorithm": spec.algorithm,
        "n_agents": spec.n_agents,
        "topology": spec.topology.kind,
        "rounds": spec.n_rounds,
        "mistakes": [int(v) for v in m.M],
        "social_mistakes": int(m.M.sum()),
        "cumulative_loss": [float(v) for v in m.cum_losses[:, -1]],
        "wall_seconds": seconds,
    }
    if spec.algorithm in sim.DWM_ALGOS:
        rep = sim.dwm_bound_report(m, spec.config)
        out["bounds"] = {k: v for k, v in rep.items() if k != "agents"}
        out["agents"] = rep["agents"]
    elif emit_bounds:
        out["regret"] = sim.domd_bound_report(spec, m)
        out["regret"]["comparators"] = sim.omd_comparator_report(spec, m)
    return out


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0 < args.alpha < 1:
        parser.error("--alpha must lie in (0, 1)")
    if args.rounds is not None and args.rounds < 1:
        parser.error("--rounds must be positive")
    if args.probes < 2 or args.experts < 1:
        parser.error("--probes must be >= 2 and --experts >= 1")
    C = S = None
    if args.algo in sim.OMD_ALGOS:
        C, S = _c_and_s(args, parser)
        if C <= 0 or S <= 0:
            parser.error("--C and --S must be positive")
    try:
        return _run(args, C, S)
    except (DataError, LibsvmFormatError, sim.SimulationError, OSError, ValueError) as e:
        print(f"ddol: error: {e}", file=sys.stderr)
        return 1


def _run(args, C, S) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    if args.data is not None:
        ds = load_libsvm(args.data)
    else:
        n, dim, margin, noise = args.synthetic
        manifest = SyntheticManifest(n, dim, margin, noise, args.seed)
        ds = manifest.generate()
        (args.out / "synthetic.json").write_text(manifest.to_json() + "\n")
    pool = None
    if args.algo in sim.DWM_ALGOS:
        pool = train_stumps(ds, args.experts, args.probes, args.seed)
        (args.out / "experts.json").write_text(pool.to_json() + "\n")

    runs = []
    for N in args.agents:
        T = args.rounds if args.rounds is not None else len(ds) // N
        if T < 1:
            raise DataError(f"{len(ds)} examples cannot feed {N} agents")
        if args.algo in sim.DWM_ALGOS:
            cfg = DwmConfig(args.alpha, N, pool, randomized=args.algo in ("rwm", "drwm"), seed=args.seed)
        else:
            variant = "eg" if args.algo in ("eg", "doeg") else "ogd"
            cfg = OmdConfig(variant, N, C=C, S=S, include_regularizer=not args.hinge_subgradient)
        spec = sim.ExperimentSpec(
            algorithm=args.algo,
            topology=Topology.from_name(args.topology, N),
            n_rounds=T,
            dataset=ds,
            plan=PartitionPlan(args.partition, N, args.seed),
            config=cfg,
            seed=args.seed,
            parallel=args.parallel,
            record_params=args.emit_bounds and args.algo in sim.OMD_ALGOS,
        )
        start = time.perf_counter()
        m = sim.run(spec)
        seconds = time.perf_counter() - start
        write_csv(args.out / f"run_N{N}.csv", m)
        runs.append(_summary(spec, m, seconds, args.emit_bounds))

    summary = {"algorithm": args.algo, "seed": args.seed, "runs": runs}
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
