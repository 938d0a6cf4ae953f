"""Vectorized Philox4x64-10 counter-based generator.

Every draw is a pure function of ``(key, counter)``, so a trial's random
numbers do not depend on how trials are batched or which thread runs them.
Matches the bijection used by :class:`numpy.random.Philox`.
"""

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_ROUNDS = 10

# 2**-53, used to map the top 53 bits of a word onto [0, 1).
_TO_UNIT = 1.0 / 9007199254740992.0


def _mulhilo(a, b):
    """Return (hi, lo) 64-bit halves of the 128-bit product a*b."""
    lo = a * b
    a0, a1 = a & _MASK32, a >> _SHIFT32
    b0, b1 = b & _MASK32, b >> _SHIFT32
    p00 = a0 * b0
    p01 = a0 * b1
    p10 = a1 * b0
    mid = (p00 >> _SHIFT32) + (p01 & _MASK32) + (p10 & _MASK32)
    hi = a1 * b1 + (p01 >> _SHIFT32) + (p10 >> _SHIFT32) + (mid >> _SHIFT32)
    return hi, lo


def philox4x64(counter, key):
    """Apply the Philox4x64-10 bijection.

    Parameters
    ----------
    counter : array_like of uint64, shape (..., 4)
    key : pair of ints

    Returns
    -------
    ndarray of uint64, shape (..., 4)
    """
    ctr = np.asarray(counter, dtype=np.uint64)
    c0, c1, c2, c3 = (ctr[..., i].copy() for i in range(4))
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFFFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for r in range(_ROUNDS):
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            if r < _ROUNDS - 1:
                k0 = k0 + _W0
                k1 = k1 + _W1
    return np.stack([c0, c1, c2, c3], axis=-1)


def seed_key(seed):
    """Split a nonnegative integer seed into a two-word Philox key."""
    seed = int(seed)
    if seed < 0 or seed >= 1 << 128:
        raise ValueError(f"seed must lie in [0, 2**128), got {seed}")
    return seed & 0xFFFFFFFFFFFFFFFF, seed >> 64


def keyed_words(seed, stream, trials, n_summands, n_blocks):
    """Raw 64-bit words for every (trial, summand, block).

    The counter for a block is ``(block, summand, trial, stream)``.

    Returns
    -------
    ndarray of uint64, shape (len(trials), n_summands, 4 * n_blocks)
    """
    trials = np.asarray(trials, dtype=np.uint64)
    ctr = np.empty((trials.size, n_summands, n_blocks, 4), dtype=np.uint64)
    ctr[..., 0] = np.arange(n_blocks, dtype=np.uint64)[None, None, :]
    ctr[..., 1] = np.arange(n_summands, dtype=np.uint64)[None, :, None]
    ctr[..., 2] = trials[:, None, None]
    ctr[..., 3] = np.uint64(stream)
    out = philox4x64(ctr, seed_key(seed))
    return out.reshape(trials.size, n_summands, 4 * n_blocks)


def keyed_uniforms(seed, stream, trials, n_summands, per_summand):
    """Uniform doubles on [0, 1), shape (len(trials), n_summands, per_summand)."""
    n_blocks = -(-per_summand // 4)
    words = keyed_words(seed, stream, trials, n_summands, n_blocks)
    u = (words[..., :per_summand] >> np.uint64(11)).astype(np.float64)
    return u * _TO_UNIT


def keyed_normals(seed, stream, trials, n_summands, per_summand):
    """Standard normals by Box-Muller, shape (len(trials), n_summands, per_summand)."""
    n_blocks = -(-per_summand // 4)
    words = keyed_words(seed, stream, trials, n_summands, n_blocks)
    bits = (words >> np.uint64(11)).astype(np.float64)
    # u1 in (0, 1] keeps the log finite; u2 in [0, 1).
    u1 = (bits[..., 0::2] + 1.0) * _TO_UNIT
    u2 = bits[..., 1::2] * _TO_UNIT
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.empty(bits.shape, dtype=np.float64)
    z[..., 0::2] = radius * np.cos(angle)
    z[..., 1::2] = radius * np.sin(angle)
    return z[..., :per_summand]


def keyed_signs(seed, stream, trials, n_summands):
    """Rademacher signs (+1.0 / -1.0), shape (len(trials), n_summands)."""
    words = keyed_words(seed, stream, trials, n_summands, 1)
    top = (words[..., 0] >> np.uint64(63)).astype(np.float64)
    return 1.0 - 2.0 * top
