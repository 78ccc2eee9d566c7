"""Benchmark objectives, safety-constraint families, and safe-seed sampling.

All four benchmarks have their unique optimum at the origin with value 0.
The box [-5, 5]^d is used only for seed sampling and threshold estimation;
the optimizer itself runs unconstrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mathkit import RngStream
from .safety import EvaluatedSolution, SafetyConstraint

SEARCH_HALF_WIDTH = 5.0
DEFAULT_N_SEED = 10
DEFAULT_THRESHOLD_SAMPLES = 10_000
MAX_SEED_REJECTIONS = 1_000_000


class SeedSamplingExhausted(Exception):
    """Rejection sampling failed to find enough safe seeds."""


def sphere(x: np.ndarray) -> float:
    return float(np.sum(x**2))


def ellipsoid(x: np.ndarray) -> float:
    d = x.shape[0]
    coeff = 1000.0 ** (np.arange(d) / (d - 1))
    return float(np.sum((coeff * x) ** 2))


def reversed_ellipsoid(x: np.ndarray) -> float:
    # Defined via coordinate reversal so the identity with the ellipsoid
    # holds exactly, not merely up to summation order.
    return ellipsoid(x[::-1])


def rosenbrock(x: np.ndarray) -> float:
    a = x[:-1] + 1.0
    b = x[1:] + 1.0
    return float(np.sum(100.0 * (b - a**2) ** 2 + x[:-1] ** 2))


BENCHMARKS = {
    "sphere": sphere,
    "ellipsoid": ellipsoid,
    "rev-ellipsoid": reversed_ellipsoid,
    "rosenbrock": rosenbrock,
}

SAFETY_KINDS = ("objective-median", "first-coordinate")


def eval_benchmark(name: str, x) -> float:
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; choose from {sorted(BENCHMARKS)}")
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("benchmarks require dimension >= 2")
    return BENCHMARKS[name](x)


def quantile_threshold(fn, d: int, q: float, rng: RngStream,
                       n_samples: int = DEFAULT_THRESHOLD_SAMPLES,
                       half_width: float = SEARCH_HALF_WIDTH) -> float:
    """Empirical q-quantile of ``fn`` under the uniform distribution on the box."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    xs = rng.uniform(-half_width, half_width, (n_samples, d))
    values = np.sort(np.array([fn(x) for x in xs]))
    idx = max(0, math.ceil(q * n_samples) - 1)
    return float(values[idx])


def make_safety(kind: str, fn, d: int, rng: RngStream | None = None,
                n_samples: int = DEFAULT_THRESHOLD_SAMPLES) -> list[SafetyConstraint]:
    """Build the constraint list for one of the two benchmark safety setups."""
    if kind == "first-coordinate":
        return [SafetyConstraint(fn=lambda x: float(x[0]), threshold=0.0)]
    if kind == "objective-median":
        if rng is None:
            raise ValueError("objective-median safety needs a threshold RNG")
        h = quantile_threshold(fn, d, 0.5, rng, n_samples)
        return [SafetyConstraint(fn=lambda x: float(fn(x)), threshold=h)]
    raise KeyError(f"unknown safety kind {kind!r}; choose from {SAFETY_KINDS}")


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    dim: int
    objective: object
    constraints: list[SafetyConstraint]
    seeds: list[EvaluatedSolution]


def sample_safe_seeds(fn, constraints: list[SafetyConstraint], d: int,
                      rng: RngStream, n_seed: int = DEFAULT_N_SEED,
                      half_width: float = SEARCH_HALF_WIDTH,
                      max_rejections: int = MAX_SEED_REJECTIONS) -> list[EvaluatedSolution]:
    """Rejection-sample uniform points in the box until enough are safe."""
    seeds: list[EvaluatedSolution] = []
    rejections = 0
    while len(seeds) < n_seed:
        x = rng.uniform(-half_width, half_width, d)
        sol = EvaluatedSolution.evaluate(x, fn, constraints)
        if sol.safe:
            seeds.append(sol)
        else:
            rejections += 1
            if rejections >= max_rejections:
                raise SeedSamplingExhausted(
                    f"{rejections} rejections before collecting {n_seed} safe seeds")
    return seeds


def build_instance(name: str, d: int, safety_kind: str,
                   threshold_rng: RngStream, seed_rng: RngStream,
                   n_seed: int = DEFAULT_N_SEED) -> ProblemInstance:
    fn = BENCHMARKS[name]
    constraints = make_safety(safety_kind, fn, d, threshold_rng)
    seeds = sample_safe_seeds(fn, constraints, d, seed_rng, n_seed)
    return ProblemInstance(name=name, dim=d, objective=fn,
                           constraints=constraints, seeds=seeds)
