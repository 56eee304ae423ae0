"""Chemically-inspired reservoir computing.

Builds cycle-with-chord reaction networks, simulates them exactly with a
stochastic event engine driven by a random step inflow, trains a ridge
readout on memory-capacity targets, and tunes topology and kinetics with
a two-level genetic algorithm.
"""

from .topology import Topology, TopologySpec, build_topology, export_dot
from .inflow import StepSignal, constant_signal, generate_step_signal
from .ssa import NetworkParams, ReservoirState, Trajectory, simulate
from .meanfield import mean_field_ode
from .readout import Dataset, ReadoutModel, fit_ridge, nrmse, split_train_test
from .tasks import (
    LongTermTask,
    ShortTermTask,
    TargetSeries,
    assemble_dataset,
    long_term_target,
    short_term_target,
)
from .evolver import (
    EvalContext,
    GAConfig,
    ParamsGenome,
    TopologyGenome,
    evaluate_params,
    run_inner_ga,
    run_outer_ga,
)

__version__ = "0.1.0"

__all__ = [
    "Topology",
    "TopologySpec",
    "build_topology",
    "export_dot",
    "StepSignal",
    "constant_signal",
    "generate_step_signal",
    "NetworkParams",
    "ReservoirState",
    "Trajectory",
    "simulate",
    "mean_field_ode",
    "Dataset",
    "ReadoutModel",
    "fit_ridge",
    "nrmse",
    "split_train_test",
    "LongTermTask",
    "ShortTermTask",
    "TargetSeries",
    "assemble_dataset",
    "long_term_target",
    "short_term_target",
    "EvalContext",
    "GAConfig",
    "ParamsGenome",
    "TopologyGenome",
    "evaluate_params",
    "run_inner_ga",
    "run_outer_ga",
    "__version__",
]
