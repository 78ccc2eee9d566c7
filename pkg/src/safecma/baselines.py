"""Comparative methods: naive CMA-ES needs nothing extra, and violation
avoidance regenerates candidates whose weighted nearest evaluated neighbor
is unsafe."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cmaes import DistributionState, StrategyParams
from .mathkit import RngStream, sqrt_spd


class AvoidanceExhausted(Exception):
    """Could not assemble a full population from the oversampled batch."""


@dataclass(frozen=True)
class AvoidanceConfig:
    w_safe: float = 1.0
    w_unsafe: float = 1.0
    oversample: int = 10

    def __post_init__(self):
        if self.w_safe <= 0 or self.w_unsafe <= 0:
            raise ValueError("avoidance weights must be positive")


def avoidance_ask(state: DistributionState, params: StrategyParams,
                  history_x: np.ndarray, history_safe: np.ndarray,
                  config: AvoidanceConfig, rng: RngStream):
    """Oversample, keep candidates whose weighted nearest neighbor is safe,
    and return a random lam-subset as (z, y, x) triples.

    Distances to safe history points are divided by w_safe, to unsafe points
    by w_unsafe.  Brute-force neighbor search; history stays desk-scale.
    """
    history_x = np.atleast_2d(np.asarray(history_x, dtype=float))
    history_safe = np.asarray(history_safe, dtype=bool)
    if history_x.shape[0] == 0:
        raise ValueError("history must contain at least the seeds")

    weights = np.where(history_safe, config.w_safe, config.w_unsafe)
    sqrt_c = sqrt_spd(state.C)
    n_cand = config.oversample * params.lam

    candidates = []
    for _ in range(n_cand):
        z = rng.standard_normal(state.dim)
        y = sqrt_c @ z
        x = state.m + state.sigma * y
        dists = np.linalg.norm(history_x - x, axis=1) / weights
        if history_safe[int(np.argmin(dists))]:
            candidates.append((z, y, x))

    if len(candidates) < params.lam:
        raise AvoidanceExhausted(
            f"only {len(candidates)} of {n_cand} candidates had a safe nearest neighbor")
    picked = rng.choice(len(candidates), size=params.lam, replace=False)
    return [candidates[i] for i in picked]
