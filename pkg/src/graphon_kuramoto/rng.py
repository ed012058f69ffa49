"""Deterministic randomness: splitmix64 hashing and counter-based streams.

Every random quantity in this package is a pure function of an explicit
64-bit seed.  Two mechanisms are used:

* per-pair edge draws are indexed by the unordered vertex pair through a
  splitmix64 hash, so a sampled adjacency matrix does not depend on the
  order in which entries are filled;
* bulk draws (latent sample points) use numpy's Philox counter-based
  generator keyed directly with the seed.

Seeds for subtasks are derived with `derive_seed`, a keyed chain of
splitmix64 steps over the task coordinates, so sweeps are reproducible
under any parallel schedule.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(x: int) -> int:
    """One splitmix64 mixing step on a 64-bit integer."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _fold(state: int, part: int | str) -> int:
    if isinstance(part, str):
        h = _FNV_OFFSET
        for b in part.encode("utf-8"):
            h = ((h ^ b) * _FNV_PRIME) & _MASK64
        part = h
    return splitmix64(state ^ (part & _MASK64))


def derive_seed(master: int, *parts: int | str) -> int:
    """Derive a task seed from a master seed and task coordinates.

    The same (master, parts) always yields the same seed; distinct part
    tuples yield independent-looking seeds.
    """
    state = splitmix64(master & _MASK64)
    for part in parts:
        state = _fold(state, part)
    return state


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    z = (x + np.uint64(_GOLDEN)).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def pair_uniforms(seed: int, n: int) -> np.ndarray:
    """Symmetric (n, n) matrix of U[0,1) draws indexed by unordered pair.

    Entry (j, k) depends only on (seed, min(j,k), max(j,k)); the diagonal
    is 0.  Used for Bernoulli edge sampling so the adjacency matrix is a
    pure function of (seed, n).
    """
    if n < 1:
        raise ValueError("n must be positive")
    lo, hi = np.triu_indices(n, k=1)
    key = (lo.astype(np.uint64) << np.uint64(32)) | hi.astype(np.uint64)
    z = _splitmix64_array(np.uint64(seed & _MASK64) ^ _splitmix64_array(key))
    u = (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    mat = np.zeros((n, n))
    mat[lo, hi] = u
    mat[hi, lo] = u
    return mat


def generator(seed: int) -> np.random.Generator:
    """Philox (counter-based) generator keyed with an explicit 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
