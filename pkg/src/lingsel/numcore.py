"""Deterministic numerics: seeded RNG streams and RBF kernel helpers.

All randomness in the package flows through :class:`SplitMix64` so that every
result is a pure function of the documented seeds, independent of platform,
process, or thread count. The generator is the splitmix64 sequence: state
advances by a fixed odd constant and each output is a bijective mix of the
state, which makes block generation a pure function of (seed, position) and
lets the vectorized generators reproduce the scalar stream bit for bit.
"""

import math

import numpy as np

from .errors import DataError, DegenerateDataError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Smallest positive uniform; log() of it is finite, so gaussians stay finite.
_MIN_UNIFORM = 2.0 ** -53


def mix64(z):
    """The splitmix64 output permutation of a 64-bit state."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(parent_state, stream_index):
    """Child seed for an independent substream.

    One full splitmix64 step (advance, then mix) applied to
    parent_state XOR stream_index.
    """
    return mix64(((parent_state ^ stream_index) + GOLDEN) & MASK64)


class SplitMix64:
    """Scalar splitmix64 stream with vectorized block draws.

    Block draws consume exactly as many states as the equivalent sequence of
    scalar draws, and uniform blocks are bit-identical to scalar uniforms.
    """

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next_uint64(self):
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_uniform(self):
        """Uniform f64 in [0, 1): top 53 bits of the next output."""
        return (self.next_uint64() >> 11) * _MIN_UNIFORM

    def next_below(self, n):
        """Uniform integer in [0, n)."""
        return int(self.next_uniform() * n)

    def next_gaussian(self):
        """Standard normal draw; consumes two uniforms."""
        return float(self.gaussian_block(1)[0])

    def uniform_block(self, count):
        """Vector of `count` uniforms, bit-identical to scalar draws."""
        if count == 0:
            return np.empty(0, dtype=np.float64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + np.arange(
                1, count + 1, dtype=np.uint64
            ) * np.uint64(GOLDEN)
            z ^= z >> np.uint64(30)
            z *= np.uint64(_MIX1)
            z ^= z >> np.uint64(27)
            z *= np.uint64(_MIX2)
            z ^= z >> np.uint64(31)
        self.state = (self.state + count * GOLDEN) & MASK64
        return (z >> np.uint64(11)).astype(np.float64) * _MIN_UNIFORM

    def gaussian_block(self, count):
        """Vector of `count` standard normals via Box-Muller.

        Consumes 2*count uniforms; the radius uniform is clamped away from 0
        so the log stays finite.
        """
        u = self.uniform_block(2 * count)
        u1 = np.maximum(u[0::2], _MIN_UNIFORM)
        u2 = u[1::2]
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)

    def shuffle(self, items):
        """In-place Fisher-Yates shuffle of a mutable sequence."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]

    def derive(self, stream_index):
        """Independent child stream; see :func:`derive_seed`."""
        return SplitMix64(derive_seed(self.state, stream_index))


def rbf_kernel(x, y, gamma):
    """exp(-gamma * ||x - y||^2) for two vectors of equal dimension."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(
            f"kernel dimension mismatch: {x.shape} vs {y.shape}"
        )
    d = x - y
    return math.exp(-gamma * float(np.dot(d, d)))


def rbf_gram(X, Y, gamma):
    """RBF kernel matrix between the rows of X (n,d) and Y (m,d).

    Squared distances are computed via the expansion ||x||^2+||y||^2-2x.y and
    clipped at zero; when X is Y the diagonal is forced to exactly one.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise DataError(
            f"gram matrix needs matching row dimensions, got {X.shape} and {Y.shape}"
        )
    xx = np.einsum("ij,ij->i", X, X)
    yy = np.einsum("ij,ij->i", Y, Y)
    sq = xx[:, None] + yy[None, :] - 2.0 * (X @ Y.T)
    np.maximum(sq, 0.0, out=sq)
    K = np.exp(-gamma * sq)
    if X is Y:
        np.fill_diagonal(K, 1.0)
    return K


def gamma_scale(X):
    """Data-driven RBF width: 1 / (dim * pooled variance of all entries).

    Raises if the pooled variance is zero (all entries equal): no finite
    width separates identical data.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise DataError(f"gamma_scale needs a non-empty (n, d) array, got {X.shape}")
    var = float(np.var(X))
    if var <= 0.0:
        raise DegenerateDataError(
            "cannot derive a kernel width: data has zero variance"
        )
    return 1.0 / (X.shape[1] * var)
