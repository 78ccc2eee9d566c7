"""Plain CMA-ES ask/tell engine.

The sampler is split into ``sample_raw`` (standard normal batch) and
``decode`` (affine map into the search space) so a safety layer can replace
the raw samples with projected ones before anything is evaluated.  ``tell``
consumes whatever z/y pair was actually evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mathkit import RngStream, sqrt_spd


class InvalidObjective(Exception):
    """A population member carried a non-finite objective value."""


@dataclass
class StrategyParams:
    """Static strategy constants (population size, weights, learning rates)."""

    lam: int
    mu: int
    weights: np.ndarray
    mu_eff: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    c_m: float
    chi_d: float
    dim: int

    @classmethod
    def defaults(cls, d: int, lam: int | None = None) -> "StrategyParams":
        if d < 2:
            raise ValueError(f"dimension must be >= 2, got {d}")
        if lam is None:
            lam = 4 + int(math.floor(3.0 * math.log(d)))
        if lam < 2:
            raise ValueError(f"population size must be >= 2, got {lam}")
        mu = lam // 2
        w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        w = w / w.sum()
        mu_eff = 1.0 / float(np.sum(w**2))
        c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0)
        d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c_sigma
        c_c = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d)
        c_1 = 2.0 / ((d + 1.3) ** 2 + mu_eff)
        c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) ** 2 + mu_eff))
        chi_d = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))
        return cls(
            lam=lam, mu=mu, weights=w, mu_eff=mu_eff,
            c_sigma=c_sigma, d_sigma=d_sigma, c_c=c_c,
            c_1=c_1, c_mu=c_mu, c_m=1.0, chi_d=chi_d, dim=d,
        )


@dataclass
class DistributionState:
    """Sampling distribution N(m, sigma^2 C) plus the two evolution paths."""

    m: np.ndarray
    C: np.ndarray
    sigma: float
    p_sigma: np.ndarray
    p_c: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, m0, sigma0: float, C0=None) -> "DistributionState":
        m0 = np.asarray(m0, dtype=float)
        d = m0.shape[0]
        if sigma0 <= 0:
            raise ValueError("step-size must be positive")
        C0 = np.eye(d) if C0 is None else np.asarray(C0, dtype=float)
        return cls(m=m0.copy(), C=C0.copy(), sigma=float(sigma0),
                   p_sigma=np.zeros(d), p_c=np.zeros(d), t=0)

    @property
    def dim(self) -> int:
        return self.m.shape[0]


@dataclass
class Member:
    """One evaluated population member; z/y/x are mutually consistent."""

    z: np.ndarray
    y: np.ndarray
    x: np.ndarray
    f: float = math.nan
    index: int = 0


def sample_raw(state: DistributionState, params: StrategyParams,
               rng: RngStream) -> list[np.ndarray]:
    """lam independent standard-normal d-vectors."""
    return [rng.standard_normal(state.dim) for _ in range(params.lam)]


def decode(state: DistributionState, z: np.ndarray,
           sqrt_c: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Map a standardized sample into the search space: y = sqrt(C) z, x = m + sigma y."""
    if sqrt_c is None:
        sqrt_c = sqrt_spd(state.C)
    y = sqrt_c @ np.asarray(z, dtype=float)
    x = state.m + state.sigma * y
    return y, x


def tell(state: DistributionState, params: StrategyParams,
         population: list[Member]) -> DistributionState:
    """One CMA-ES update from an evaluated population.

    The members must carry the z/y actually evaluated (after any projection).
    Ranking ties are broken by member index via a stable sort.
    """
    if len(population) != params.lam:
        raise ValueError(f"expected {params.lam} members, got {len(population)}")
    fs = np.array([mem.f for mem in population])
    if not np.all(np.isfinite(fs)):
        raise InvalidObjective("population contains non-finite objective values")

    order = sorted(range(len(population)), key=lambda i: (fs[i], population[i].index))
    best = [population[i] for i in order[: params.mu]]
    w = params.weights
    dz = np.sum([wi * mem.z for wi, mem in zip(w, best)], axis=0)
    dy = np.sum([wi * mem.y for wi, mem in zip(w, best)], axis=0)

    d = state.dim
    t_next = state.t + 1
    p_sigma = (1.0 - params.c_sigma) * state.p_sigma + math.sqrt(
        params.c_sigma * (2.0 - params.c_sigma) * params.mu_eff) * dz
    norm_ps = float(np.linalg.norm(p_sigma))
    denom = math.sqrt(1.0 - (1.0 - params.c_sigma) ** (2 * t_next))
    h_sigma = 1.0 if norm_ps / denom < (1.4 + 2.0 / (d + 1.0)) * params.chi_d else 0.0
    p_c = (1.0 - params.c_c) * state.p_c + h_sigma * math.sqrt(
        params.c_c * (2.0 - params.c_c) * params.mu_eff) * dy

    m_next = state.m + params.c_m * state.sigma * dy
    sigma_next = state.sigma * math.exp(
        (params.c_sigma / params.d_sigma) * (norm_ps / params.chi_d - 1.0))

    rank_mu = np.zeros_like(state.C)
    for wi, mem in zip(w, best):
        rank_mu += wi * (np.outer(mem.y, mem.y) - state.C)
    c_next = ((1.0 + (1.0 - h_sigma) * params.c_1 * params.c_c * (2.0 - params.c_c)) * state.C
              + params.c_1 * (np.outer(p_c, p_c) - state.C)
              + params.c_mu * rank_mu)
    c_next = 0.5 * (c_next + c_next.T)

    return DistributionState(m=m_next, C=c_next, sigma=sigma_next,
                             p_sigma=p_sigma, p_c=p_c, t=t_next)


TARGET_F = 1e-8
COLLAPSE_EIG = 1e-30


def should_terminate(state: DistributionState, best_f: float) -> str | None:
    """Stopping rule: target hit, or total collapse of the sampling ellipsoid."""
    if best_f <= TARGET_F:
        return "target_reached"
    eig_min = float(np.linalg.eigvalsh(state.C).min())
    if state.sigma**2 * eig_min < COLLAPSE_EIG:
        return "collapsed"
    return None
