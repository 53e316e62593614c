import numpy as np
import pytest

from ddol.core import Topology
from ddol.data import PartitionPlan, gen_synthetic
from ddol.dwm import DwmConfig
from ddol.experts import train_stumps
from ddol.omd import OmdConfig
from ddol import sim


def dwm_spec(algo, N, T, seed=0, P=4, alpha=0.9, dim=4, noise=0.05, margin=0.1,
             topology="complete", parallel=False, record=False, partition="round-robin"):
    ds = gen_synthetic(N * T, dim, margin, noise, seed)
    pool = train_stumps(ds, P, probes=50, seed=seed)
    return sim.ExperimentSpec(algo, Topology.from_name(topology, N), T, ds,
                              PartitionPlan(partition, N, seed), DwmConfig(alpha, N, pool),
                              seed=seed, parallel=parallel, record_params=record)


def omd_spec(algo, N, T, seed=0, dim=5, noise=0.0, margin=0.2, C=1.0, S=100.0,
             topology="complete", parallel=False, record=False, include_reg=True):
    ds = gen_synthetic(N * T, dim, margin, noise, seed)
    variant = "eg" if algo in ("eg", "doeg") else "ogd"
    return sim.ExperimentSpec(algo, Topology.from_name(topology, N), T, ds,
                              PartitionPlan("round-robin", N, seed),
                              OmdConfig(variant, N, C=C, S=S, include_regularizer=include_reg),
                              seed=seed, parallel=parallel, record_params=record)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results: (number, title, passed, detail), printed after the run
ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion():
    def record(number, title, passed, detail):
        ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {number:>2}  {title}: {detail}")
