"""Noiseless Gaussian process regression with an RBF kernel.

Only the posterior mean and its analytic gradient are exposed; that is all
the Lipschitz estimator needs.  Posterior variance is deliberately absent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError


class DegenerateGram(Exception):
    """Gram matrix stayed indefinite even after jitter escalation."""


def rbf_kernel(z: np.ndarray, zp: np.ndarray, length_scale: float) -> float:
    diff = np.asarray(z, dtype=float) - np.asarray(zp, dtype=float)
    return float(np.exp(-float(diff @ diff) / (2.0 * length_scale**2)))


def _gram(inputs: np.ndarray, length_scale: float) -> np.ndarray:
    sq = np.sum(inputs**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (inputs @ inputs.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * length_scale**2))


@dataclass(frozen=True)
class GprModel:
    """Immutable fitted regressor; safe to query concurrently."""

    inputs: np.ndarray        # (n, d) standardized training inputs
    targets: np.ndarray       # (n,) normalized targets
    length_scale: float
    alpha: np.ndarray         # solution of (K + jitter I) alpha = targets
    jitter: float


def fit(inputs, targets, length_scale: float,
        jitter: float = 1e-10, max_jitter: float = 1e-6) -> GprModel:
    """Fit the noiseless regressor; jitter escalates x10 on factorization failure.

    Duplicate inputs (common after projection collapses samples) are handled
    by the jitter, not rejected.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.asarray(targets, dtype=float).ravel()
    n = inputs.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 training points, got {n}")
    if not np.all(np.isfinite(inputs)):
        raise ValueError("training inputs must be finite")
    if length_scale <= 0:
        raise ValueError("length scale must be positive")

    gram = _gram(inputs, length_scale)
    eps = jitter
    while True:
        try:
            factor = cho_factor(gram + eps * np.eye(n), lower=True)
            break
        except LinAlgError:
            eps *= 10.0
            if eps > max_jitter:
                raise DegenerateGram(
                    f"Cholesky failed up to jitter {max_jitter:g}") from None
    alpha = cho_solve(factor, targets)
    return GprModel(inputs=inputs, targets=targets,
                    length_scale=length_scale, alpha=alpha, jitter=eps)


def _kvec(model: GprModel, z: np.ndarray) -> np.ndarray:
    diff = model.inputs - np.asarray(z, dtype=float)
    return np.exp(-np.sum(diff**2, axis=1) / (2.0 * model.length_scale**2))


def posterior_mean(model: GprModel, z) -> float:
    return float(_kvec(model, z) @ model.alpha)


def posterior_mean_grad(model: GprModel, z) -> np.ndarray:
    """Analytic gradient: sum_i alpha_i k(z_i, z) (z_i - z) / H^2."""
    z = np.asarray(z, dtype=float)
    kv = _kvec(model, z)
    return ((model.inputs - z) * (kv * model.alpha)[:, None]).sum(axis=0) / model.length_scale**2
