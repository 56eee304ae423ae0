"""Exact stochastic simulation of the reservoir reaction network.

Every node holds an integer molecule count. Three kinds of events move the
state, with propensities evaluated at the current state ``x`` and time ``t``:

* input: ``a_in(t) = input_rate_scaling * Q(t)`` where ``Q`` is the step
  signal; one molecule is added at the input node.
* reaction, one channel per directed edge ``u -> v`` with rate ``k_e``:
  ``a_e = reaction_rate_scaling * k_e * x[u]``; one molecule of ``u``
  converts into one molecule of ``v``.
* outflow, one channel per node ``v``: ``a_v = outflow_rate * x[v]``; one
  molecule of ``v`` leaves the system.

The sampler is the direct-method Gillespie algorithm: the waiting time is
exponential at the summed propensity and the channel is chosen
proportionally to its propensity. The inflow is piecewise constant, which
is handled exactly: whenever a proposed waiting time would cross the next
segment boundary, the clock advances to the boundary without firing and
the wait is redrawn there (valid because propensities are constant inside
a segment and the exponential is memoryless).

The event loop lives in ``_ssa_kernel``, written so the very same function
body can run either as plain Python (reference path) or compiled by numba
(fast path). Both paths consume the same PCG64 stream and produce
bit-identical trajectories.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .topology import Topology
from .inflow import StepSignal

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

OUTFLOW_BOUNDS = (0.05, 1.0)
RATE_BOUNDS = (0.1, 1.0)
SCALING_BOUNDS = (1.0, 10.0)

# Exact incremental propensity sums drift by float rounding; resum this often.
_RESUM_INTERVAL = 4096


@dataclass(frozen=True)
class NetworkParams:
    """Kinetic parameterization of a reservoir network.

    ``reaction_rates`` carries one rate constant per edge, ordered like
    ``Topology.edges`` (cycle edges first, then chords). All fields are
    restricted to the search boundaries used by the genetic optimizer.
    """

    reaction_rates: tuple[float, ...]
    outflow_rate: float
    input_rate_scaling: float = 1.0
    reaction_rate_scaling: float = 1.0

    def __post_init__(self):
        for k in self.reaction_rates:
            if not RATE_BOUNDS[0] <= k <= RATE_BOUNDS[1]:
                raise ValueError(f"reaction rate {k} outside {RATE_BOUNDS}")
        if not OUTFLOW_BOUNDS[0] <= self.outflow_rate <= OUTFLOW_BOUNDS[1]:
            raise ValueError(f"outflow_rate {self.outflow_rate} outside {OUTFLOW_BOUNDS}")
        for s in (self.input_rate_scaling, self.reaction_rate_scaling):
            if not SCALING_BOUNDS[0] <= s <= SCALING_BOUNDS[1]:
                raise ValueError(f"scaling factor {s} outside {SCALING_BOUNDS}")


@dataclass(frozen=True, eq=False)
class ReservoirState:
    """Snapshot of the network: per-node counts at one instant."""

    counts: np.ndarray
    time: float

    def __post_init__(self):
        if (np.asarray(self.counts) < 0).any():
            raise ValueError("molecule counts cannot be negative")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Molecule counts sampled on the integer-second grid.

    ``states[t, v]`` is the count of node ``v`` at time ``t`` for
    ``t = 0 .. T-1``, defined as the state after the last event with
    event time <= t. Row 0 is the all-zero initial state.
    """

    states: np.ndarray
    seed: int

    @property
    def total_time(self) -> int:
        return self.states.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.states.shape[1]

    @property
    def sample_times(self) -> np.ndarray:
        return np.arange(self.states.shape[0])

    def state_at(self, t: int) -> ReservoirState:
        """Sampled snapshot at integer second ``t``."""
        return ReservoirState(counts=self.states[int(t)].copy(), time=float(t))


def _ssa_kernel(
    n,
    edge_start,
    edge_dst,
    edge_rate,
    out_rate_sum,
    outflow,
    a_in_values,
    seg_len,
    total_time,
    T,
    rng,
):
    """Direct-method event loop. Numba-compatible; see module docstring.

    Edges arrive grouped by source node (CSR layout): node v owns entries
    ``edge_start[v]:edge_start[v+1]`` of ``edge_dst``/``edge_rate``, with
    rates already multiplied by the reaction scaling. ``out_rate_sum[v]``
    is the summed scaled rate of v's outgoing edges, so the per-node
    reaction propensity is ``x[v] * out_rate_sum[v]``.
    """
    x = np.zeros(n, np.int64)
    states = np.zeros((T, n), np.int64)
    R = np.zeros(n)  # per-node reaction propensity
    sum_r = 0.0
    mass = 0  # total count; summed outflow propensity is outflow * mass
    t = 0.0
    next_s = 1  # row 0 stays the all-zero initial state
    n_seg = a_in_values.shape[0]
    n_events = 0

    while t < total_time:
        seg = int(t / seg_len)
        if seg >= n_seg:
            seg = n_seg - 1
        tb = (seg + 1) * seg_len
        if tb > total_time:
            tb = total_time
        a_in = a_in_values[seg]

        while True:
            total = a_in + sum_r + outflow * mass
            if total <= 0.0:
                t = tb  # nothing can fire; jump to the next segment
                break
            dt = -np.log1p(-rng.random()) / total
            if t + dt >= tb:
                t = tb  # boundary crossed: advance without firing, redraw
                break
            t = t + dt
            # samples strictly before the event keep the pre-event state
            while next_s < T and next_s < t:
                for j in range(n):
                    states[next_s, j] = x[j]
                next_s += 1

            pick = rng.random() * total
            if pick < a_in:
                # input event
                x[0] += 1
                mass += 1
                sum_r -= R[0]
                R[0] = x[0] * out_rate_sum[0]
                sum_r += R[0]
            elif pick < a_in + sum_r:
                # reaction event: choose source node, then edge within it
                target = pick - a_in
                acc = 0.0
                src = -1
                for v in range(n):
                    rv = R[v]
                    if rv > 0.0:
                        acc += rv
                        src = v
                        if acc > target:
                            break
                if src < 0:
                    continue  # sum_r was pure roundoff residue
                rem = target - (acc - R[src])
                xs = float(x[src])
                acc2 = 0.0
                e_sel = -1
                for j in range(edge_start[src], edge_start[src + 1]):
                    aj = edge_rate[j] * xs
                    if aj > 0.0:
                        acc2 += aj
                        e_sel = j
                        if acc2 > rem:
                            break
                if e_sel < 0:
                    continue
                d = edge_dst[e_sel]
                x[src] -= 1
                x[d] += 1
                sum_r -= R[src]
                R[src] = x[src] * out_rate_sum[src]
                sum_r += R[src]
                sum_r -= R[d]
                R[d] = x[d] * out_rate_sum[d]
                sum_r += R[d]
            else:
                # outflow event
                target = pick - a_in - sum_r
                acc = 0.0
                sel = -1
                for v in range(n):
                    xv = x[v]
                    if xv > 0:
                        acc += outflow * xv
                        sel = v
                        if acc > target:
                            break
                if sel < 0:
                    continue
                x[sel] -= 1
                mass -= 1
                sum_r -= R[sel]
                R[sel] = x[sel] * out_rate_sum[sel]
                sum_r += R[sel]

            n_events += 1
            if n_events % _RESUM_INTERVAL == 0:
                s = 0.0
                for v in range(n):
                    s += R[v]
                sum_r = s

    while next_s < T:
        for j in range(n):
            states[next_s, j] = x[j]
        next_s += 1
    return states


if _HAVE_NUMBA:
    _ssa_kernel_jit = njit(cache=True)(_ssa_kernel)
else:  # pragma: no cover
    _ssa_kernel_jit = None


def _csr_edges(topology: Topology, params: NetworkParams):
    """Group edges by source node, rates pre-scaled by the reaction scaling."""
    n = topology.num_nodes
    edges = topology.edges
    src = np.array([u for u, _ in edges], dtype=np.int64)
    dst = np.array([v for _, v in edges], dtype=np.int64)
    rate = params.reaction_rate_scaling * np.asarray(params.reaction_rates, dtype=np.float64)
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=n) if len(edges) else np.zeros(n, dtype=np.int64)
    edge_start = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=edge_start[1:])
    edge_dst = dst[order]
    edge_rate = rate[order]
    out_rate_sum = np.zeros(n)
    np.add.at(out_rate_sum, src, rate)
    return edge_start, edge_dst, edge_rate, out_rate_sum


def simulate(
    topology: Topology,
    params: NetworkParams,
    signal: StepSignal,
    total_time: int,
    seed: int,
    jit: bool | None = None,
) -> Trajectory:
    """Run one exact stochastic simulation and sample it every second.

    The trajectory is a pure function of (topology, params, signal, seed):
    repeated calls are bit-identical. ``jit=None`` uses the numba-compiled
    kernel when available; ``jit=False`` forces the plain-Python reference
    path, which walks the identical code and RNG stream.
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
    if topology.input_node != 0:
        raise ValueError("inflow is defined to enter at node 0")

    edge_start, edge_dst, edge_rate, out_rate_sum = _csr_edges(topology, params)
    a_in_values = params.input_rate_scaling * np.asarray(
        signal.segment_values, dtype=np.float64
    )
    rng = np.random.default_rng(seed)
    use_jit = _HAVE_NUMBA if jit is None else jit
    if use_jit and not _HAVE_NUMBA:
        raise ValueError("jit=True requested but numba is not available")
    kernel = _ssa_kernel_jit if use_jit else _ssa_kernel
    states = kernel(
        topology.num_nodes,
        edge_start,
        edge_dst,
        edge_rate,
        out_rate_sum,
        float(params.outflow_rate),
        a_in_values,
        float(signal.step_size),
        float(total_time),
        int(total_time),
        rng,
    )
    return Trajectory(states=states, seed=seed)


def trajectory_to_csv(trajectory: Trajectory) -> str:
    """CSV of the sampled counts: a time column plus one column per node."""
    buf = io.StringIO()
    header = ",".join(["t"] + [f"node_{v}" for v in range(trajectory.num_nodes)])
    buf.write(header + "\n")
    for t, row in enumerate(trajectory.states):
        buf.write(str(t) + "," + ",".join(str(int(c)) for c in row) + "\n")
    return buf.getvalue()
