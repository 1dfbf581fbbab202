"""Counter-based random streams.

Every draw is a pure function of ``(seed, stream tag, position)``: a Philox key
is derived from the seed and tag, and the k-th 64-bit output of that keyed
stream becomes the k-th variate. Nothing depends on the order in which samples
are generated, so work can be split across processes freely.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1

# stream tags, one per consumer of randomness
NOISE = 0
REFINE = 1
PERTURB = 2


def sample_seed(master_seed: int, sample_index: int) -> int:
    """64-bit seed of one Monte Carlo sample."""
    ss = np.random.SeedSequence([int(master_seed) & _MASK64, int(sample_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _bitgen(seed: int, tag: int, extra: int = 0) -> np.random.Philox:
    ss = np.random.SeedSequence([int(seed) & _MASK64, int(tag), int(extra)])
    return np.random.Philox(key=ss.generate_state(2, np.uint64))


def uniforms(seed: int, size: int, tag: int = NOISE, extra: int = 0) -> np.ndarray:
    """Uniforms on the open interval (0, 1), one per counter position."""
    raw = _bitgen(seed, tag, extra).random_raw(size)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def normals(seed: int, shape, tag: int = NOISE, extra: int = 0) -> np.ndarray:
    """Standard normals by inverse-CDF transform of :func:`uniforms`."""
    shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
    size = int(np.prod(shape, dtype=np.int64))
    return ndtri(uniforms(seed, size, tag, extra)).reshape(shape)
