"""Experiment lab for runtime analysis of the (1+1)-EA on robust linear
subset selection (deletion-robust and worst-case objectives under a
cardinality budget)."""

from .bitvec import BitString, RandomSource, hamming, mix_seed, mutate, sample_uniform
from .ea import RunConfig, RunResult, run, run_accept_all
from .problems import (
    DeletionRobustInstance,
    Instance,
    LinearObjective,
    UnknownOptimumError,
    WorstCaseInstance,
    build_binval,
    build_linear,
    build_onemax,
    build_plateau,
    build_worst,
    build_worst_highk,
    build_worst_k1,
    build_worst_midk,
)

__version__ = "0.1.0"

__all__ = [
    "BitString",
    "RandomSource",
    "hamming",
    "mix_seed",
    "mutate",
    "sample_uniform",
    "RunConfig",
    "RunResult",
    "run",
    "run_accept_all",
    "DeletionRobustInstance",
    "Instance",
    "LinearObjective",
    "UnknownOptimumError",
    "WorstCaseInstance",
    "build_binval",
    "build_linear",
    "build_onemax",
    "build_plateau",
    "build_worst",
    "build_worst_highk",
    "build_worst_k1",
    "build_worst_midk",
    "__version__",
]
