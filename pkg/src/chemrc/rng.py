"""Deterministic derivation of RNG sub-streams.

All randomness in the package comes from numpy's PCG64 generator seeded
through ``numpy.random.SeedSequence``. A master seed is split into
independent sub-streams by hashing it together with a small integer path,
so every consumer (signal generation, each stochastic simulation, each GA
evaluation) owns its own stream and changing one consumer never perturbs
another. Identical (seed, path) pairs always yield identical streams.

Stream tags used across the package:

* ``SIGNAL_STREAM``: inflow step-signal generation.
* ``SIM_STREAM``: the stochastic simulation of a single explicit run.
* ``GA_OPS_STREAM``: selection, crossover, and mutation draws of a GA run.
* ``GA_EVAL_STREAM``: per-evaluation simulation seeds, keyed by
  (generation, population index), so evaluations are independent of
  scheduling order.
* ``GA_INNER_STREAM``: seed roots handed to nested inner GA runs, keyed by
  the outer (generation, population index).
"""

from __future__ import annotations

import numpy as np

SIGNAL_STREAM = 1
SIM_STREAM = 2
GA_OPS_STREAM = 3
GA_EVAL_STREAM = 4
GA_INNER_STREAM = 5


def derive_seed(seed: int, *path: int) -> int:
    """Hash ``seed`` and an integer path into a new 64-bit seed."""
    ss = np.random.SeedSequence([int(seed), *(int(p) for p in path)])
    return int(ss.generate_state(1, np.uint64)[0])


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator for the sub-stream addressed by ``path``."""
    ss = np.random.SeedSequence([int(seed), *(int(p) for p in path)])
    return np.random.default_rng(ss)
