"""Dense-vector kernels and the seeded, counter-based random stream.

Every stochastic piece of the toolkit draws from :class:`RngStream`, whose raw
64-bit sequence is a pure function of (seed, counter).  That makes traces
reproducible run-to-run and lets callers generate draws in vectorized blocks
without perturbing the sequence.
"""

import math

import numpy as np

from .errors import NumericError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_TWO53 = float(1 << 53)


def _mix64(z):
    """SplitMix64 finalizer, elementwise on uint64 arrays (wrapping arithmetic)."""
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


class RngStream:
    """Counter-based pseudorandom stream.

    The k-th raw word is ``mix64(seed + k * GOLDEN)`` where ``mix64`` is the
    SplitMix64 finalizer and GOLDEN the 64-bit golden-ratio increment.  Equal
    seeds therefore give bitwise-identical sequences on every platform, and
    block draws consume exactly the same counters as repeated single draws.

    One stream per run; not safe to share between concurrent runs.
    """

    def __init__(self, seed):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._key = np.uint64(self.seed)
        self._counter = 0

    def raw(self, n):
        """Next ``n`` raw 64-bit words as a uint64 array."""
        lo = self._counter + 1
        idx = np.arange(lo, lo + n, dtype=np.uint64)
        self._counter += n
        return _mix64(self._key + idx * _GOLDEN)

    def uniform(self, n=None):
        """Doubles uniform on [0, 1), one per raw word (top 53 bits)."""
        u = (self.raw(n or 1) >> np.uint64(11)).astype(np.float64) / _TWO53
        return u if n is not None else float(u[0])

    def normal(self, n):
        """``n`` standard Gaussians via Box-Muller, cosine branch only.

        Each Gaussian consumes exactly two raw words, so block and sequential
        generation agree bitwise.
        """
        w = self.raw(2 * n)
        u1 = ((w[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) / _TWO53  # (0, 1]
        u2 = (w[1::2] >> np.uint64(11)).astype(np.float64) / _TWO53
        return np.sqrt(-2.0 * np.log(u1)) * np.cos((2.0 * np.pi) * u2)

    def integers(self, n, low, high):
        """``n`` integers uniform on [low, high)."""
        if high <= low:
            raise ValueError("empty integer range")
        return (self.uniform(n) * (high - low)).astype(np.int64) + low

    def choice_without_replacement(self, n_total, k):
        """First ``k`` entries of a Fisher-Yates shuffle of range(n_total)."""
        if not 1 <= k <= n_total:
            raise ValueError("need 1 <= k <= n_total")
        idx = np.arange(n_total)
        u = self.uniform(k)
        for i in range(k):
            j = i + int(u[i] * (n_total - i))
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:k].copy()


def as_vector(x, d=None):
    """Coerce to a 1-D float64 array, optionally checking the dimension."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {v.shape[0]}")
    return v


def check_finite(v, context=""):
    """Raise NumericError if any entry of ``v`` is NaN or infinite."""
    if not np.all(np.isfinite(v)):
        raise NumericError(f"non-finite value in {context or 'vector'}", x=np.asarray(v))
    return v


def sample_unit_sphere(d, rng):
    """Uniform draw from the unit sphere in R^d (normalized Gaussian vector)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    g = rng.normal(d)
    nrm = math.sqrt(float(np.dot(g, g)))
    while nrm == 0.0:  # the counter stream could in principle emit all zeros
        g = rng.normal(d)
        nrm = math.sqrt(float(np.dot(g, g)))
    return g / nrm


def sample_unit_ball(d, rng):
    """Uniform draw from the closed unit ball: sphere direction scaled by r^(1/d)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    u = sample_unit_sphere(d, rng)
    r = rng.uniform()
    return u * (r ** (1.0 / d))


def elementwise_max(a, b):
    """Componentwise maximum of two equal-dimension vectors."""
    a = as_vector(a)
    b = as_vector(b, a.shape[0])
    return np.maximum(a, b)
