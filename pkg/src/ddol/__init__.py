"""Data-distributed online learning: distributed weighted majority and
distributed online mirror descent, with a deterministic multi-agent
simulator."""
from .core import AgentState, LabeledExample, SparseVector, Topology, neighborhood
from .data import Dataset, PartitionPlan, gen_synthetic, parse_libsvm, partition
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "BACKEND",
    "Dataset",
    "LabeledExample",
    "PartitionPlan",
    "SparseVector",
    "Topology",
    "gen_synthetic",
    "neighborhood",
    "parse_libsvm",
    "partition",
]
