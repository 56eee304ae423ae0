"""Deterministic mean of the reservoir dynamics.

With unimolecular conversions and first-order outflow the expected counts
obey a linear ODE system exactly,

    dx/dt = A x + b(t),

where ``A`` collects the scaled per-edge rates and the uniform outflow and
``b(t)`` feeds the scaled inflow signal into node 0. Solving this system
gives an independent oracle for the stochastic engine with no
linearization error; disagreement beyond sampling noise means one of the
two is wrong.
"""

from __future__ import annotations

import math

import numpy as np

from .topology import Topology
from .inflow import StepSignal
from .ssa import NetworkParams


def _rate_matrix(topology: Topology, params: NetworkParams) -> np.ndarray:
    n = topology.num_nodes
    A = np.zeros((n, n))
    for (u, v), k in zip(topology.edges, params.reaction_rates):
        kk = params.reaction_rate_scaling * k
        A[u, u] -= kk
        A[v, u] += kk
    A -= params.outflow_rate * np.eye(n)
    return A


def mean_field_ode(
    topology: Topology,
    params: NetworkParams,
    signal: StepSignal,
    total_time: int,
    max_step: float = 0.01,
) -> np.ndarray:
    """Expected counts on the same integer-second grid as ``simulate``.

    Integrates the linear system with fixed-step RK4, one second at a
    time so the piecewise-constant inflow never changes inside a step.
    The step size is at most ``max_step``. Returns a float matrix of
    shape (total_time, num_nodes); row 0 is the zero initial state.
    """
    if len(params.reaction_rates) != topology.num_edges:
        raise ValueError(
            f"params carry {len(params.reaction_rates)} reaction rates but the "
            f"topology has {topology.num_edges} edges"
        )
    if total_time <= 0 or int(total_time) != total_time:
        raise ValueError(f"total_time must be a positive integer, got {total_time}")
    if total_time > signal.total_time:
        raise ValueError(
            f"signal covers [0, {signal.total_time}) but total_time={total_time}"
        )
    if float(signal.step_size) != int(signal.step_size):
        raise ValueError(
            "second-by-second integration needs integer-second signal segments"
        )

    T = int(total_time)
    n = topology.num_nodes
    A = _rate_matrix(topology, params)
    substeps = max(1, math.ceil(1.0 / max_step))
    h = 1.0 / substeps

    states = np.zeros((T, n))
    x = np.zeros(n)
    b = np.zeros(n)
    for sec in range(T - 1):
        b[0] = params.input_rate_scaling * signal.value_at(sec)
        for _ in range(substeps):
            k1 = A @ x + b
            k2 = A @ (x + 0.5 * h * k1) + b
            k3 = A @ (x + 0.5 * h * k2) + b
            k4 = A @ (x + h * k3) + b
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[sec + 1] = x
    return states
