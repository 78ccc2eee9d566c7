"""Safety layer on top of the CMA-ES engine.

Holds the standardization map into the sampling distribution's own
coordinates, the safe-region construction and sample projection, the
GPR-based Lipschitz-constant estimator with its two correction
coefficients, and the seed-based initialization of the Lipschitz
estimates, mean vector, and step-size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import gpr
from .boxopt import BoxBounds, maximize
from .cmaes import DistributionState, StrategyParams
from .mathkit import RngStream, chi2_ppf, inv_sqrt_spd

# Inner maximization domain for the gradient-norm search (per dimension).
GRAD_SEARCH_HALF_WIDTH = 3.0
# Length-scale multiplier for the surrogate kernel.
LENGTH_SCALE_PER_DIM = 8.0
# Below this, a Lipschitz estimate imposes effectively no projection.
L_FLOOR = 1e-12
# Standard deviation below which target normalization is undefined.
SD_FLOOR = 1e-12


class EmptySafeRegion(Exception):
    """No safe solution available to anchor the region."""


class MissingSeeds(Exception):
    """Initialization requires at least one safe seed."""


@dataclass(frozen=True)
class SafetyConstraint:
    """Black-box safety function paired with its threshold; x is safe iff fn(x) <= threshold."""

    fn: object
    threshold: float


@dataclass(frozen=True)
class EvaluatedSolution:
    x: np.ndarray
    f: float
    s: np.ndarray        # one value per safety constraint
    safe: bool

    @classmethod
    def evaluate(cls, x, objective, constraints: list[SafetyConstraint]) -> "EvaluatedSolution":
        x = np.asarray(x, dtype=float)
        s = np.array([c.fn(x) for c in constraints], dtype=float)
        h = np.array([c.threshold for c in constraints], dtype=float)
        return cls(x=x, f=float(objective(x)), s=s, safe=bool(np.all(s <= h)))


def thresholds_of(constraints: list[SafetyConstraint]) -> np.ndarray:
    return np.array([c.threshold for c in constraints], dtype=float)


class EvalWindow:
    """Sliding window over recently evaluated solutions.

    Seeds are inserted first; batches push the oldest entries out once the
    capacity (population size times the window length in iterations) is hit,
    so the window always holds min(n_seed + lam*t, capacity) solutions.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("window capacity must be positive")
        self.capacity = capacity
        self._items: list[EvaluatedSolution] = []

    def push_batch(self, batch: list[EvaluatedSolution]) -> None:
        self._items.extend(batch)
        if len(self._items) > self.capacity:
            del self._items[: len(self._items) - self.capacity]

    @property
    def solutions(self) -> list[EvaluatedSolution]:
        return list(self._items)

    def __len__(self) -> int:
        return len(self._items)


@dataclass(frozen=True)
class LipschitzState:
    """Per-constraint Lipschitz estimates and their correction coefficients."""

    L: np.ndarray            # corrected estimates, one per constraint
    rho: np.ndarray          # violation-driven multipliers, >= 1
    tau: float               # small-data multiplier, >= 1
    raw: np.ndarray          # last uncorrected surrogate estimates
    zeta_init: float = 10.0
    alpha: float = 10.0
    l_min: float = 100.0
    gamma: float = 0.9


@dataclass(frozen=True)
class SafeRegion:
    """Union of balls around safe solutions in standardized coordinates."""

    anchors_z: np.ndarray    # (n, d)
    radii: np.ndarray        # (n,)


def phi(x, state: DistributionState, isqrt_c: np.ndarray | None = None) -> np.ndarray:
    """Standardize a search-space point against the current distribution."""
    if isqrt_c is None:
        isqrt_c = inv_sqrt_spd(state.C)
    return isqrt_c @ ((np.asarray(x, dtype=float) - state.m) / state.sigma)


def safe_radius(s: np.ndarray, thresholds: np.ndarray, L: np.ndarray) -> float:
    """Radius of the safe ball around a solution with safety values ``s``."""
    slack = thresholds - np.asarray(s, dtype=float)
    if np.any(slack < 0):
        raise ValueError("safe radius requested for an unsafe solution")
    return float(np.min(slack / np.maximum(L, L_FLOOR)))


def delta(sol: EvaluatedSolution, thresholds: np.ndarray, lip: LipschitzState) -> float:
    if not sol.safe:
        raise ValueError("delta is only defined for safe solutions")
    return safe_radius(sol.s, thresholds, lip.L)


def build_safe_region(solutions: list[EvaluatedSolution], state: DistributionState,
                      thresholds: np.ndarray, lip: LipschitzState) -> SafeRegion:
    safe = [sol for sol in solutions if sol.safe]
    if not safe:
        raise EmptySafeRegion("no safe solution among the candidates")
    isq = inv_sqrt_spd(state.C)
    anchors = np.stack([phi(sol.x, state, isq) for sol in safe])
    radii = np.array([safe_radius(sol.s, thresholds, lip.L) for sol in safe])
    return SafeRegion(anchors_z=anchors, radii=radii)


def project(z_raw: np.ndarray, region: SafeRegion) -> tuple[np.ndarray, float, int]:
    """Pull a raw sample into the safe region.

    The anchor maximizing (radius - distance) is chosen; the sample is then
    blended toward it just far enough to land inside its ball.  Returns the
    projected sample, the blend factor, and the anchor index.
    """
    if region.anchors_z.shape[0] == 0:
        raise EmptySafeRegion("region has no anchors")
    z_raw = np.asarray(z_raw, dtype=float)
    dists = np.linalg.norm(region.anchors_z - z_raw, axis=1)
    idx = int(np.argmax(region.radii - dists))
    dist = dists[idx]
    if dist == 0.0:
        return z_raw.copy(), 1.0, idx
    xi = min(1.0, region.radii[idx] / dist)
    z_tilde = xi * z_raw + (1.0 - xi) * region.anchors_z[idx]
    return z_tilde, float(xi), idx


@dataclass
class ProjectedSample:
    z_raw: np.ndarray
    z: np.ndarray
    y: np.ndarray
    x: np.ndarray
    xi: float
    anchor_index: int


def ask_safe(state: DistributionState, params: StrategyParams, lip: LipschitzState,
             window: EvalWindow, rng: RngStream, thresholds: np.ndarray,
             seeds: list[EvaluatedSolution]) -> list[ProjectedSample]:
    """Sample a population and project every member into the safe region.

    If the window holds no safe solution the original seeds are re-used as
    anchors; they are safe by construction.
    """
    try:
        region = build_safe_region(window.solutions, state, thresholds, lip)
    except EmptySafeRegion:
        region = build_safe_region(seeds, state, thresholds, lip)

    from .mathkit import sqrt_spd

    sqrt_c = sqrt_spd(state.C)
    out = []
    for _ in range(params.lam):
        z_raw = rng.standard_normal(state.dim)
        z_tilde, xi, idx = project(z_raw, region)
        y = sqrt_c @ z_tilde
        x = state.m + state.sigma * y
        out.append(ProjectedSample(z_raw=z_raw, z=z_tilde, y=y, x=x,
                                   xi=xi, anchor_index=idx))
    return out


def violation_ratios(batch: list[EvaluatedSolution], thresholds: np.ndarray) -> np.ndarray:
    """Per-constraint fraction of the batch exceeding its threshold."""
    s = np.stack([sol.s for sol in batch])
    return np.mean(s > thresholds[None, :], axis=0)


def _grad_norm_objective(model: gpr.GprModel):
    """Norm of the surrogate mean gradient, with value and gradient.

    Near a zero gradient the norm is non-smooth, so the squared norm is
    used there instead; the argmax is unaffected.
    """
    h2 = model.length_scale**2

    def objective(z):
        z = np.asarray(z, dtype=float)
        diff = model.inputs - z
        kv = np.exp(-np.sum(diff**2, axis=1) / (2.0 * h2))
        g = (diff * (kv * model.alpha)[:, None]).sum(axis=0) / h2
        coeff = kv * model.alpha / h2
        hess = (diff.T * coeff) @ diff / h2 - np.diag(np.full(z.shape[0], coeff.sum()))
        norm = float(np.linalg.norm(g))
        if norm < 1e-12:
            return norm * norm, 2.0 * (hess @ g)
        return norm, hess @ g / norm

    return objective


def _max_grad_norm(model: gpr.GprModel, params: StrategyParams,
                   rng: RngStream, max_iters: int = 200) -> float:
    """Two-step search for the largest surrogate gradient norm.

    First stage scores standard-normal starts clipped into the box; second
    stage polishes the best start with the box quasi-Newton maximizer.
    """
    d = model.inputs.shape[1]
    bounds = BoxBounds.cube(GRAD_SEARCH_HALF_WIDTH, d)
    objective = _grad_norm_objective(model)

    starts = [bounds.clip(rng.standard_normal(d)) for _ in range(5 * params.lam)]
    values = [objective(z)[0] for z in starts]
    best = starts[int(np.argmax(values))]
    _, value = maximize(objective, best, bounds, max_iters=max_iters)
    return value


def estimate_raw(solutions: list[EvaluatedSolution], j: int, state: DistributionState,
                 params: StrategyParams, rng: RngStream) -> float | None:
    """Uncorrected Lipschitz estimate for constraint ``j``, or None if the
    window carries no usable signal (constant safety values or a degenerate
    surrogate fit)."""
    s_vals = np.array([sol.s[j] for sol in solutions], dtype=float)
    sd = float(np.std(s_vals))
    if sd < SD_FLOOR:
        return None
    omega = (s_vals - s_vals.mean()) / sd
    isq = inv_sqrt_spd(state.C)
    inputs = np.stack([phi(sol.x, state, isq) for sol in solutions])
    d = state.dim
    try:
        model = gpr.fit(inputs, omega, LENGTH_SCALE_PER_DIM * d)
    except gpr.DegenerateGram:
        return None
    return sd * _max_grad_norm(model, params, rng)


def estimate_lipschitz(window: EvalWindow, state_next: DistributionState,
                       lip: LipschitzState, nu: np.ndarray,
                       params: StrategyParams, rng: RngStream) -> LipschitzState:
    """End-of-iteration update of the Lipschitz estimates.

    Runs on the freshly updated distribution parameters.  ``nu`` carries the
    per-constraint violation ratios of the batch just evaluated.
    """
    n_data = len(window)
    if n_data < 2:
        raise ValueError("window must hold at least 2 solutions")
    p = lip.L.shape[0]
    d = state_next.dim

    tau = lip.zeta_init ** (1.0 / n_data) if n_data < window.capacity else 1.0
    rho = np.empty(p)
    for j in range(p):
        if nu[j] > 0:
            rho[j] = lip.rho[j] * lip.alpha ** nu[j]
        else:
            rho[j] = max(1.0, lip.rho[j] / lip.alpha ** (1.0 / d))

    raw = np.empty(p)
    solutions = window.solutions
    for j in range(p):
        est = estimate_raw(solutions, j, state_next, params, rng)
        raw[j] = lip.raw[j] if est is None else est

    return replace(lip, L=raw * tau * rho, rho=rho, tau=tau, raw=raw)


def init_lipschitz(seeds: list[EvaluatedSolution], state0: DistributionState,
                   lip: LipschitzState, params: StrategyParams,
                   rng: RngStream) -> LipschitzState:
    """Seed-based initial Lipschitz estimates.

    With a single seed the surrogate is unusable, so the configured lower
    bound is taken directly; otherwise the estimate is floored at it.
    """
    if not seeds:
        raise MissingSeeds("at least one safe seed is required")
    if any(not s.safe for s in seeds):
        raise ValueError("all seeds must be safe")
    n_seed = len(seeds)
    p = lip.L.shape[0]
    rho = np.ones(p)

    if n_seed == 1:
        l0 = np.full(p, lip.l_min)
        return replace(lip, L=l0, rho=rho, tau=lip.zeta_init, raw=l0.copy())

    tau0 = lip.zeta_init ** (1.0 / n_seed)
    L = np.empty(p)
    raw = np.empty(p)
    for j in range(p):
        est = estimate_raw(seeds, j, state0, params, rng)
        if est is None:
            L[j] = lip.l_min
            raw[j] = lip.l_min
        else:
            L[j] = max(lip.l_min, est * tau0)
            raw[j] = est
    return replace(lip, L=L, rho=rho, tau=tau0, raw=raw)


def init_mean(seeds: list[EvaluatedSolution]) -> EvaluatedSolution:
    """Seed with the best objective value; ties resolve to the first."""
    if not seeds:
        raise MissingSeeds("at least one safe seed is required")
    best = seeds[0]
    for s in seeds[1:]:
        if s.f < best.f:
            best = s
    return best


def init_stepsize(sigma0: float, m0_seed: EvaluatedSolution,
                  thresholds: np.ndarray, lip: LipschitzState, d: int) -> float:
    """Shrink the initial step-size so most samples land inside the safe
    ball around the initial mean; never enlarges it."""
    if not m0_seed.safe:
        raise ValueError("initial mean must be a safe solution")
    radius = safe_radius(m0_seed.s, thresholds, lip.L)
    divisor = math.sqrt(chi2_ppf(lip.gamma, d))
    return float(sigma0) * min(radius / divisor, 1.0)
