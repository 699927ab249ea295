"""Seed handling for reproducible Monte Carlo runs.

Every randomized routine in this package takes an integer seed and derives
its own generator through :func:`substream`, so results depend only on the
seed and the stream path, never on execution order or worker count.
"""

from __future__ import annotations

import os

import numpy as np

DEFAULT_SEED = 0
SEED_ENV_VAR = "AFFINEDIM_SEED"

# Fixed stream ids for the analysis stages.  Adding entries is fine;
# renumbering existing ones changes every seeded result downstream.
STREAM_LYAPUNOV = 1
STREAM_CHAIN = 2
STREAM_STATIONARITY = 3
STREAM_MEASURE = 4
STREAM_IRREDUCIBILITY = 5
STREAM_CONTRACTION = 6
STREAM_SLICE = 7
STREAM_TRACK = 8
STREAM_TRANSVERSALITY = 9


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return a PCG64 generator for the substream addressed by ``path``.

    Substreams are derived with ``np.random.SeedSequence`` using ``path``
    as the spawn key, i.e. a hash of ``(seed, path)``.  Distinct paths give
    statistically independent streams, and the mapping is stable across
    processes and thread counts.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def resolve_seed(seed: int | None) -> int:
    """Pick the effective seed: explicit argument, else ``AFFINEDIM_SEED``, else 0."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip():
        return int(env)
    return DEFAULT_SEED
