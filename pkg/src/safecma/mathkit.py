"""Numerical primitives: symmetric eigensolves, SPD square roots, the
chi-squared percent point function, and a seedable random stream.

Everything here is deterministic given its inputs; the random stream is
the only stateful object and is never shared between trial workers.
"""

from __future__ import annotations

import numpy as np
from scipy import special

# Version tag written into experiment logs so that archived results can be
# matched to the generator that produced them.
RNG_VERSION = "pcg64-numpy-v1"

SYMMETRY_RTOL = 1e-12


class SingularCovariance(Exception):
    """An SPD operation hit a non-positive eigenvalue."""


class NonSymmetricMatrix(ValueError):
    """Input matrix violates the symmetry contract."""


def _as_sym(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSymmetricMatrix(f"expected square matrix, got shape {a.shape}")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
        raise NonSymmetricMatrix("matrix is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def eig_sym(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Returns eigenvalues in ascending order and orthonormal eigenvectors as
    columns, so that ``a == V @ diag(w) @ V.T``.
    """
    a = _as_sym(a)
    w, v = np.linalg.eigh(a)
    return w, v


def sqrt_spd(a: np.ndarray) -> np.ndarray:
    """Unique SPD square root of a symmetric positive definite matrix."""
    w, v = eig_sym(a)
    if w.min() <= 0.0:
        raise SingularCovariance(f"non-positive eigenvalue {w.min():g}")
    s = (v * np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def inv_sqrt_spd(a: np.ndarray) -> np.ndarray:
    """Inverse of the SPD square root."""
    w, v = eig_sym(a)
    if w.min() <= 0.0:
        raise SingularCovariance(f"non-positive eigenvalue {w.min():g}")
    s = (v / np.sqrt(w)) @ v.T
    return 0.5 * (s + s.T)


def chi2_cdf(x: float, k: int) -> float:
    """CDF of the chi-squared distribution with ``k`` degrees of freedom."""
    if x <= 0.0:
        return 0.0
    return float(special.gammainc(k / 2.0, x / 2.0))


def chi2_ppf(p: float, k: int) -> float:
    """Percent point function (inverse CDF) of the chi-squared distribution.

    Solved by bracketed bisection on the regularized incomplete gamma CDF,
    followed by a few Newton polishing steps on the density.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if k < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {k}")

    lo, hi = 0.0, max(4.0 * k, 8.0)
    while chi2_cdf(hi, k) < p:
        hi *= 2.0
        if hi > 1e12:  # pragma: no cover - p astronomically close to 1
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, k) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    x = 0.5 * (lo + hi)

    # Newton polish; the log-density form avoids overflow for large k.
    half_k = k / 2.0
    log_norm = -half_k * np.log(2.0) - special.gammaln(half_k)
    for _ in range(8):
        pdf = np.exp(log_norm + (half_k - 1.0) * np.log(x) - x / 2.0) if x > 0 else 0.0
        if pdf <= 0.0:
            break
        step = (chi2_cdf(x, k) - p) / pdf
        x_new = x - step
        if x_new <= 0.0:
            break
        x = x_new
        if abs(step) < 1e-14 * max(1.0, x):
            break
    return float(x)


class RngStream:
    """Seedable random stream with reproducible draws across runs.

    Backed by numpy's PCG64 generator; identical seeds produce bit-identical
    sequences on any platform running the same numpy build.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def standard_normal(self, d: int) -> np.ndarray:
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        return self._gen.standard_normal(d)

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)


_SPLIT_MIX = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, index: int) -> int:
    """Derive an independent 64-bit seed for a sub-stream.

    SplitMix64-style mixing so that nearby (seed, index) pairs land far
    apart in seed space.
    """
    x = (int(master_seed) ^ ((index + 1) * _SPLIT_MIX)) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def std_normal(rng: RngStream, d: int) -> np.ndarray:
    """d i.i.d. standard normal draws from the stream."""
    return rng.standard_normal(d)
