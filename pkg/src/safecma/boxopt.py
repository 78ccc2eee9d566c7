"""Box-constrained quasi-Newton maximization.

Thin contract around scipy's limited-memory BFGS with bound handling; the
caller supplies a smooth objective returning (value, gradient).  Reported
points are clipped back into the box and the start value is a hard floor on
the reported best.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize


class InvalidStart(Exception):
    """Objective was non-finite at the starting point."""


@dataclass(frozen=True)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if not np.all(lo < hi):
            raise ValueError("lower bounds must be strictly below upper bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, half_width: float, d: int) -> "BoxBounds":
        return cls(-half_width * np.ones(d), half_width * np.ones(d))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


def maximize(objective, x0, bounds: BoxBounds,
             max_iters: int = 200) -> tuple[np.ndarray, float]:
    """Maximize ``objective`` (value, gradient) over the box from ``x0``.

    Returns a feasible point whose value is never below the start value.
    """
    x0 = bounds.clip(np.asarray(x0, dtype=float))
    f0, _ = objective(x0)
    if not np.isfinite(f0):
        raise InvalidStart("objective non-finite at the starting point")

    def negated(x):
        val, grad = objective(x)
        return -val, -np.asarray(grad, dtype=float)

    result = minimize(
        negated, x0, jac=True, method="L-BFGS-B",
        bounds=list(zip(bounds.lower, bounds.upper)),
        options={"maxiter": max_iters, "maxcor": 10, "gtol": 1e-8},
    )
    x_best = bounds.clip(result.x)
    f_best, _ = objective(x_best)
    if not np.isfinite(f_best) or f_best < f0:
        return x0, float(f0)
    return x_best, float(f_best)
