"""Random step inflow signals.

The inflow into the reservoir is piecewise constant: the total horizon is
divided into equal segments ("steps") and each segment holds one value,
drawn once as ``inflow_amount * r`` with ``r`` sampled from a normal
distribution with mean 0.5 and standard deviation 0.25, truncated to
[0, 1]. Segments are half-open ``[k*step, (k+1)*step)`` so the value at a
change point belongs to the new segment.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

TRUNCNORM_MEAN = 0.5
TRUNCNORM_SD = 0.25


def _exact_segment_count(total_time: float, step_size: float) -> int:
    n = total_time / step_size
    if abs(n - round(n)) > 1e-9 or round(n) < 1:
        raise ValueError(
            f"step_size {step_size} must divide total_time {total_time} exactly"
        )
    return int(round(n))


@dataclass(frozen=True)
class StepSignal:
    """A piecewise-constant inflow series over ``[0, total_time)``."""

    total_time: float
    step_size: float
    inflow_amount: float
    segment_values: tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        if self.total_time <= 0 or self.step_size <= 0:
            raise ValueError("total_time and step_size must be positive")
        if self.inflow_amount < 0:
            raise ValueError("inflow_amount must be non-negative")
        n = _exact_segment_count(self.total_time, self.step_size)
        if len(self.segment_values) != n:
            raise ValueError(
                f"expected {n} segment values, got {len(self.segment_values)}"
            )
        for v in self.segment_values:
            if not 0.0 <= v <= self.inflow_amount:
                raise ValueError(
                    f"segment value {v} outside [0, {self.inflow_amount}]"
                )

    @property
    def num_segments(self) -> int:
        return len(self.segment_values)

    def value_at(self, t: float) -> float:
        """Inflow value at time ``t``. Defined on ``[0, total_time)`` only."""
        if not 0 <= t < self.total_time:
            raise ValueError(f"t={t} outside signal domain [0, {self.total_time})")
        idx = int(t // self.step_size)
        if idx >= self.num_segments:  # guards float roundoff at the far edge
            idx = self.num_segments - 1
        return self.segment_values[idx]


def generate_step_signal(
    total_time: float, step_size: float, inflow_amount: float, seed: int
) -> StepSignal:
    """Draw a seeded random step signal.

    Samples the truncated normal by rejection from N(0.5, 0.25), keeping
    only draws inside [0, 1]; the acceptance rate is about 95% so this is
    cheap and exact. Identical arguments give bit-identical values.
    """
    if inflow_amount <= 0:
        raise ValueError("inflow_amount must be positive")
    if total_time <= 0 or step_size <= 0:
        raise ValueError("total_time and step_size must be positive")
    n = _exact_segment_count(total_time, step_size)
    rng = np.random.default_rng(seed)
    values = []
    for _ in range(n):
        while True:
            r = rng.normal(TRUNCNORM_MEAN, TRUNCNORM_SD)
            if 0.0 <= r <= 1.0:
                break
        values.append(inflow_amount * r)
    return StepSignal(
        total_time=total_time,
        step_size=step_size,
        inflow_amount=inflow_amount,
        segment_values=tuple(values),
        seed=seed,
    )


def constant_signal(total_time: float, value: float) -> StepSignal:
    """Single-segment signal holding ``value`` for the whole horizon."""
    return StepSignal(
        total_time=total_time,
        step_size=total_time,
        inflow_amount=value,
        segment_values=(value,),
        seed=0,
    )


def signal_to_csv(signal: StepSignal) -> str:
    """CSV with one row per segment: (segment_start_seconds, value)."""
    buf = io.StringIO()
    buf.write("segment_start_seconds,value\n")
    for k, v in enumerate(signal.segment_values):
        buf.write(f"{float(k * signal.step_size)!r},{float(v)!r}\n")
    return buf.getvalue()
