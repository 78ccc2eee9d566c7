"""Experiment harness: seeded trials, per-iteration CSV logs, cross-trial
summaries, and the hyperparameter sweeps.

One trial owns its distribution state and RNG streams end to end; trials
are independent and may run in parallel workers, with every stream derived
from the master seed and the trial index so results never depend on
scheduling.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines, cmaes, problems, safety
from .mathkit import RNG_VERSION, RngStream, derive_seed

TRIAL_SCHEMA = "safecma-trial-v1"
SUMMARY_SCHEMA = "safecma-summary-v1"

ALGORITHMS = ("safe-cmaes", "cmaes", "avoidance")
SWEEPABLE = {
    "alpha": (1.0, 5.0, 10.0, 20.0, 40.0, 80.0, 160.0),
    "zeta_init": (1.0, 5.0, 10.0, 20.0, 40.0),
    "t_data": (1, 3, 5, 7, 9),
}


@dataclass
class ExperimentConfig:
    problem: str = "sphere"
    dim: int = 5
    safety: str = "objective-median"
    algo: str = "safe-cmaes"
    budget: int = 1000
    trials: int = 1
    seed: int = 1
    out_dir: str = "results"
    n_seed: int = problems.DEFAULT_N_SEED
    sigma0: float = 2.0
    lam: int | None = None
    alpha: float = 10.0
    zeta_init: float = 10.0
    t_data: int = 5
    l_min: float = 100.0
    gamma: float = 0.9
    w_safe: float = 1.0
    workers: int = 1
    label: str | None = None

    def validate(self) -> None:
        if self.problem not in problems.BENCHMARKS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.safety not in problems.SAFETY_KINDS:
            raise ValueError(f"unknown safety kind {self.safety!r}")
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        lam = self.population_size()
        if self.budget < lam:
            raise ValueError(f"budget {self.budget} is below one population ({lam})")
        if self.t_data < 1:
            raise ValueError("t_data must be >= 1")

    def population_size(self) -> int:
        if self.lam is not None:
            return self.lam
        return 4 + int(math.floor(3.0 * math.log(self.dim)))

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class TrialLog:
    trial_index: int
    rng_seed: int
    thresholds: list[float]
    termination: str
    n_evals: int
    unsafe_total: int
    best_f: float
    best_safe_f: float
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def write_csv(self, path: str | Path) -> None:
        meta = {
            "schema": TRIAL_SCHEMA, "rng": RNG_VERSION,
            "trial": self.trial_index, "seed": self.rng_seed,
            "thresholds": self.thresholds, "termination": self.termination,
            "n_evals": self.n_evals, "unsafe_total": self.unsafe_total,
            "best_f": self.best_f, "best_safe_f": self.best_safe_f,
        }
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(meta) + "\n")
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(v) for v in row])


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _log_columns(p: int) -> list[str]:
    cols = ["iter", "evals", "best_safe_f", "unsafe_count", "sigma", "eig_min", "eig_max"]
    cols += [f"L_{j + 1}" for j in range(p)]
    cols += [f"rho_{j + 1}" for j in range(p)]
    cols += ["tau", "best_f"]
    return cols


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialLog:
    """Execute one seeded trial of the configured algorithm."""
    config.validate()
    base = derive_seed(config.seed, trial_index)
    rng_threshold = RngStream(derive_seed(base, 1))
    rng_seeds = RngStream(derive_seed(base, 2))
    rng_opt = RngStream(derive_seed(base, 3))

    instance = problems.build_instance(
        config.problem, config.dim, config.safety,
        rng_threshold, rng_seeds, config.n_seed)
    params = cmaes.StrategyParams.defaults(config.dim, lam=config.lam)
    thresholds = safety.thresholds_of(instance.constraints)
    p = len(instance.constraints)

    seeds = instance.seeds
    best_seed = safety.init_mean(seeds)
    state = cmaes.DistributionState.initial(best_seed.x, config.sigma0)

    best_f = min(s.f for s in seeds)
    best_safe_f = min(s.f for s in seeds if s.safe)
    evals = 0
    unsafe_total = 0
    rows: list[list[float]] = []
    termination = "budget_exhausted"

    lip = safety.LipschitzState(
        L=np.ones(p), rho=np.ones(p), tau=1.0, raw=np.ones(p),
        zeta_init=config.zeta_init, alpha=config.alpha,
        l_min=config.l_min, gamma=config.gamma)
    window = safety.EvalWindow(capacity=params.lam * config.t_data)

    if config.algo == "safe-cmaes":
        lip = safety.init_lipschitz(seeds, state, lip, params, rng_opt)
        state.sigma = safety.init_stepsize(
            config.sigma0, best_seed, thresholds, lip, config.dim)
        window.push_batch(seeds)

    history_x = [s.x for s in seeds]
    history_safe = [True] * len(seeds)
    avoid_cfg = baselines.AvoidanceConfig(w_safe=config.w_safe)

    while evals + params.lam <= config.budget:
        try:
            if config.algo == "safe-cmaes":
                asked = safety.ask_safe(state, params, lip, window,
                                        rng_opt, thresholds, seeds)
                triples = [(s.z, s.y, s.x) for s in asked]
            elif config.algo == "cmaes":
                sqrt_c = cmaes.sqrt_spd(state.C)
                triples = []
                for _ in range(params.lam):
                    z = rng_opt.standard_normal(config.dim)
                    y, x = cmaes.decode(state, z, sqrt_c)
                    triples.append((z, y, x))
            else:
                triples = baselines.avoidance_ask(
                    state, params, np.stack(history_x),
                    np.array(history_safe), avoid_cfg, rng_opt)
        except baselines.AvoidanceExhausted:
            termination = "avoidance_exhausted"
            break

        batch = [safety.EvaluatedSolution.evaluate(x, instance.objective,
                                                   instance.constraints)
                 for _, _, x in triples]
        members = [cmaes.Member(z=z, y=y, x=x, f=sol.f, index=i)
                   for i, ((z, y, x), sol) in enumerate(zip(triples, batch))]

        evals += params.lam
        for sol in batch:
            if not sol.safe:
                unsafe_total += 1
            best_f = min(best_f, sol.f)
            if sol.safe:
                best_safe_f = min(best_safe_f, sol.f)
        if config.algo == "avoidance":
            history_x.extend(sol.x for sol in batch)
            history_safe.extend(sol.safe for sol in batch)

        state = cmaes.tell(state, params, members)

        if config.algo == "safe-cmaes":
            nu = safety.violation_ratios(batch, thresholds)
            window.push_batch(batch)
            lip = safety.estimate_lipschitz(window, state, lip, nu, params, rng_opt)

        eigs = np.linalg.eigvalsh(state.C)
        row = [state.t, evals, best_safe_f, unsafe_total, state.sigma,
               state.sigma**2 * eigs.min(), state.sigma**2 * eigs.max()]
        if config.algo == "safe-cmaes":
            row += list(lip.L) + list(lip.rho) + [lip.tau]
        else:
            row += [math.nan] * (2 * p) + [math.nan]
        row.append(best_f)
        rows.append(row)

        reason = cmaes.should_terminate(state, best_f)
        if reason is not None:
            termination = reason
            break

    return TrialLog(
        trial_index=trial_index, rng_seed=base,
        thresholds=[float(h) for h in thresholds],
        termination=termination, n_evals=evals, unsafe_total=unsafe_total,
        best_f=best_f, best_safe_f=best_safe_f,
        columns=_log_columns(p), rows=rows)


def _run_trial_star(args) -> TrialLog:
    return run_trial(*args)


def run_experiment(config: ExperimentConfig) -> Path:
    """Run all trials, write per-trial logs plus a median/IQR summary.

    Returns the path of the summary CSV.
    """
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs = [(config, i) for i in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            logs = list(pool.map(_run_trial_star, jobs))
    else:
        logs = [run_trial(config, i) for i in range(config.trials)]

    for log in logs:
        log.write_csv(out / f"trial_{log.trial_index:03d}.csv")

    summary_path = out / "summary.csv"
    label = config.label or config.algo
    write_summary(logs, config.population_size(), config.budget, label, summary_path)
    return summary_path


def write_summary(logs: list[TrialLog], lam: int, budget: int,
                  label: str, path: str | Path) -> None:
    """Align trials on the cumulative-evaluation axis and emit median/IQR
    of best safe objective and unsafe-evaluation count.

    Trials that terminated early are carried forward at their final values.
    """
    grid = np.arange(lam, budget + 1, lam)
    cols = {name: i for i, name in enumerate(logs[0].columns)}
    best = np.empty((len(logs), grid.size))
    unsafe = np.empty((len(logs), grid.size))
    for k, log in enumerate(logs):
        evals = np.array([row[cols["evals"]] for row in log.rows])
        bs = np.array([row[cols["best_safe_f"]] for row in log.rows])
        uc = np.array([row[cols["unsafe_count"]] for row in log.rows])
        idx = np.searchsorted(evals, grid, side="right") - 1
        idx = np.clip(idx, 0, len(evals) - 1)
        best[k] = bs[idx]
        unsafe[k] = uc[idx]

    q = np.percentile(best, [25, 50, 75], axis=0)
    u = np.percentile(unsafe, [25, 50, 75], axis=0)
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps({"schema": SUMMARY_SCHEMA, "label": label,
                                    "trials": len(logs)}) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["evals", "best_safe_f_q1", "best_safe_f_med", "best_safe_f_q3",
                         "unsafe_q1", "unsafe_med", "unsafe_q3", "label"])
        for i, e in enumerate(grid):
            writer.writerow([int(e), _fmt(q[0, i]), _fmt(q[1, i]), _fmt(q[2, i]),
                             _fmt(u[0, i]), _fmt(u[1, i]), _fmt(u[2, i]), label])


def sweep(config: ExperimentConfig, param: str, values=None) -> list[Path]:
    """Run one experiment per hyperparameter value, sharing the master seed."""
    if param not in SWEEPABLE:
        raise ValueError(f"cannot sweep {param!r}; choose from {sorted(SWEEPABLE)}")
    values = SWEEPABLE[param] if values is None else values
    paths = []
    base_out = Path(config.out_dir)
    for value in values:
        tag = f"{param}_{value:g}" if isinstance(value, float) else f"{param}_{value}"
        sub = replace(config,
                      out_dir=str(base_out / tag),
                      label=f"{param}={value}",
                      **{param: value})
        paths.append(run_experiment(sub))
    return paths
