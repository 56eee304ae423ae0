"""Memory-capacity benchmark targets and dataset assembly.

Two regression tasks probe how much input history the reservoir retains.
Both build their target purely from the inflow signal, never from the
simulation:

* short-term: ``Y(t) = Q(t-1) + 2 Q(t-2)``
* long-term:  ``Y(t) = Q(t-tau) + 0.5 Q(t-1.5 tau)`` for a past lag tau

Samples earlier than the largest lag have no defined target and are the
washout; they are dropped before the train/test split.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .inflow import StepSignal
from .readout import Dataset
from .ssa import Trajectory


@dataclass(frozen=True, eq=False)
class TargetSeries:
    """Target values aligned to the sample grid; washout rows are NaN."""

    values: np.ndarray
    washout: int


@dataclass(frozen=True)
class ShortTermTask:
    """Recall of the inflow one and two seconds back."""

    @property
    def washout(self) -> int:
        return 2

    def target(self, signal: StepSignal, sample_times: np.ndarray) -> TargetSeries:
        return short_term_target(signal, sample_times)


@dataclass(frozen=True)
class LongTermTask:
    """Recall of the inflow tau and 1.5 tau seconds back."""

    tau: int

    def __post_init__(self):
        if self.tau <= 0 or int(self.tau) != self.tau:
            raise ValueError(f"tau must be a positive integer, got {self.tau}")
        if (3 * int(self.tau)) % 2 != 0:
            raise ValueError(
                f"1.5*tau must land on the 1-second grid; tau={self.tau} gives "
                f"{1.5 * self.tau}"
            )

    @property
    def washout(self) -> int:
        return (3 * int(self.tau)) // 2

    def target(self, signal: StepSignal, sample_times: np.ndarray) -> TargetSeries:
        return long_term_target(signal, self.tau, sample_times)


def _lagged_target(
    signal: StepSignal,
    sample_times: np.ndarray,
    lags: tuple[float, ...],
    coeffs: tuple[float, ...],
) -> TargetSeries:
    times = np.asarray(sample_times)
    if times.size and (times.min() < 0 or times.max() - min(lags) >= signal.total_time):
        raise ValueError("sample grid reaches outside the signal domain")
    max_lag = max(lags)
    washout = int(np.ceil(max_lag))
    values = np.full(times.shape, np.nan)
    for i, t in enumerate(times):
        if t - max_lag < 0:
            continue
        values[i] = sum(c * signal.value_at(t - lag) for c, lag in zip(coeffs, lags))
    return TargetSeries(values=values, washout=washout)


def short_term_target(signal: StepSignal, sample_times: np.ndarray) -> TargetSeries:
    """Y(t) = Q(t-1) + 2 Q(t-2); the first two samples are washout."""
    return _lagged_target(signal, sample_times, lags=(1.0, 2.0), coeffs=(1.0, 2.0))


def long_term_target(
    signal: StepSignal, tau: int, sample_times: np.ndarray
) -> TargetSeries:
    """Y(t) = Q(t-tau) + 0.5 Q(t-1.5 tau); washout is the first 1.5 tau samples."""
    task = LongTermTask(tau=tau)  # validates the grid constraint on 1.5 tau
    return _lagged_target(
        signal, sample_times, lags=(float(tau), 1.5 * tau), coeffs=(1.0, 0.5)
    )


def assemble_dataset(
    trajectory: Trajectory, targets: TargetSeries, input_node: int = 0
) -> Dataset:
    """Pair trajectory features with targets, minus washout and input node.

    The input node's column is excluded from the features so the readout
    cannot shortcut by reading the inflow directly.
    """
    states = trajectory.states
    if states.shape[0] == 0:
        raise ValueError("trajectory is empty")
    if len(targets.values) != states.shape[0]:
        raise ValueError(
            f"targets cover {len(targets.values)} samples but the trajectory "
            f"has {states.shape[0]}"
        )
    keep = ~np.isnan(targets.values)
    if not keep.any():
        raise ValueError("no usable rows remain after washout")
    cols = [v for v in range(states.shape[1]) if v != input_node]
    return Dataset(
        features=states[keep][:, cols].astype(np.float64),
        targets=targets.values[keep],
        times=trajectory.sample_times[keep],
        washout=targets.washout,
    )


def target_series_to_csv(series: TargetSeries, sample_times: np.ndarray) -> str:
    """CSV of (t, target), washout rows omitted."""
    buf = io.StringIO()
    buf.write("t,target\n")
    for t, v in zip(sample_times, series.values):
        if not np.isnan(v):
            buf.write(f"{int(t)},{float(v)!r}\n")
    return buf.getvalue()


def dataset_to_csv(dataset: Dataset) -> str:
    """Assembled rows for external analysis: time, target, feature columns."""
    buf = io.StringIO()
    cols = ",".join(f"f{j}" for j in range(dataset.features.shape[1]))
    buf.write(f"t,target,{cols}\n")
    for t, y, row in zip(dataset.times, dataset.targets, dataset.features):
        feats = ",".join(repr(float(v)) for v in row)
        buf.write(f"{int(t)},{float(y)!r},{feats}\n")
    return buf.getvalue()
