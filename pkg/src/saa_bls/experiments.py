"""Seeded replication sweeps over a budget grid.

For every budget ``B`` and replication ``r`` the sample sequence is seeded
from ``(base_seed, B, r)`` alone, so adding budgets or replications leaves
existing cells unchanged and cells can be computed in any order.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import retrospective
from .problems import ConfigurationError, NoisyProblem
from .retrospective import RaConfig

__all__ = [
    "SweepConfig",
    "ReplicationRecord",
    "ReplicationSummary",
    "log_grid",
    "replication_seed",
    "run_replication",
    "sweep",
    "trimmed_mean",
    "pearson_corr",
    "loglog_slope",
    "rho_jb",
    "write_summary_csv",
    "write_replications_csv",
    "SUMMARY_COLUMNS",
    "REPLICATION_COLUMNS",
]

SUMMARY_COLUMNS = ("B", "mean_error", "trimmed_error", "sd_error", "mean_jb", "replications")
REPLICATION_COLUMNS = ("B", "rep", "seed", "error", "j_used", "consumed")


def log_grid(lo_exp: float, hi_exp: float, points: int) -> list:
    """``points`` log-spaced integer budgets from ``10**lo_exp`` to ``10**hi_exp``."""
    return [int(round(b)) for b in np.logspace(lo_exp, hi_exp, points)]


@dataclass(frozen=True)
class SweepConfig:
    """``method`` is ``"ra"`` (multi-stage) or ``"single"`` (one SAA run with
    ``n = c_n * B**((1 + alpha) / (1 + 3 alpha))``, ``alpha = ra.alpha_prime``).
    """

    problem: NoisyProblem
    budget_grid: tuple
    replications: int = 100
    ra: RaConfig = field(default_factory=RaConfig)
    trim_fraction: float = 0.1
    error_metric: str = "mean"
    base_seed: int = 0
    method: str = "ra"
    c_n: float = 1.0

    def __post_init__(self):
        grid = tuple(int(b) for b in self.budget_grid)
        object.__setattr__(self, "budget_grid", grid)
        if not grid:
            raise ConfigurationError("empty budget grid")
        if any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
            raise ConfigurationError(f"budget grid must be strictly increasing, got {grid}")
        if grid[0] < 1:
            raise ConfigurationError("budgets must be positive")
        if self.replications < 1:
            raise ConfigurationError("need at least one replication")
        if not 0.0 <= self.trim_fraction < 0.5:
            raise ConfigurationError(f"trim fraction must lie in [0, 0.5), got {self.trim_fraction}")
        if self.error_metric not in ("mean", "trimmed"):
            raise ConfigurationError(f"unknown error metric {self.error_metric!r}")
        if self.method not in ("ra", "single"):
            raise ConfigurationError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class ReplicationRecord:
    B: int
    rep: int
    seed: int
    error: float
    j_used: int
    consumed: int
    fn_monotone: bool = True


@dataclass
class ReplicationSummary:
    B: int
    mean_error: float
    trimmed_error: float
    sd_error: float
    mean_jb: float
    records: list

    @property
    def replications(self) -> int:
        return len(self.records)

    def error(self, metric: str = "mean") -> float:
        return self.trimmed_error if metric == "trimmed" else self.mean_error


def replication_seed(base_seed: int, B: int, rep: int) -> int:
    """64-bit seed derived by hashing ``(base_seed, B, rep)`` through ``SeedSequence``."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(B), int(rep)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _nonincreasing(trace) -> bool:
    return all(b <= a for a, b in zip(trace, trace[1:]))


def run_replication(cfg: SweepConfig, B: int, rep: int) -> ReplicationRecord:
    seed = replication_seed(cfg.base_seed, B, rep)
    star = cfg.problem.theta_star
    if cfg.method == "single":
        res = retrospective.single_stage_saa(
            cfg.problem,
            cfg.ra.theta0,
            B,
            cfg.ra.alpha_prime,
            beta=cfg.ra.beta,
            c_n=cfg.c_n,
            seed=seed,
            min_n=cfg.ra.min_n,
            c_eval=cfg.ra.c_eval,
            c_grad=cfg.ra.c_grad,
        )
        err = float(np.linalg.norm(res.theta - star))
        return ReplicationRecord(B, rep, seed, err, 1, res.consumed, _nonincreasing(res.fn_trace))
    res = retrospective.run(cfg.problem, replace(cfg.ra, budget=B), seed)
    err = float(np.linalg.norm(res.theta_hat - star))
    mono = all(_nonincreasing(r.fn_trace) for _, r in res.stage_records)
    return ReplicationRecord(B, rep, seed, err, res.j_used, res.total_consumed, mono)


def _run_cell(args):
    cfg, B, rep = args
    return run_replication(cfg, B, rep)


def summarize(B: int, records: list, trim_fraction: float) -> ReplicationSummary:
    errors = [r.error for r in records]
    sd = float(np.std(errors, ddof=1)) if len(errors) > 1 else math.nan
    return ReplicationSummary(
        B=B,
        mean_error=float(np.mean(errors)),
        trimmed_error=trimmed_mean(errors, trim_fraction),
        sd_error=sd,
        mean_jb=float(np.mean([r.j_used for r in records])),
        records=list(records),
    )


def sweep(cfg: SweepConfig, jobs: int = 1) -> list:
    """Run every ``(B, rep)`` cell and aggregate per budget, in grid order."""
    cells = [(cfg, B, r) for B in cfg.budget_grid for r in range(cfg.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    else:
        records = [_run_cell(c) for c in cells]
    out = []
    for i, B in enumerate(cfg.budget_grid):
        chunk = records[i * cfg.replications : (i + 1) * cfg.replications]
        out.append(summarize(B, chunk, cfg.trim_fraction))
    return out


def trimmed_mean(values, fraction: float) -> float:
    """Mean after dropping ``floor(fraction * m)`` values from each end."""
    vals = np.sort(np.asarray(values, dtype=float))
    m = vals.size
    if m == 0:
        raise ValueError("trimmed mean of an empty sequence")
    if not 0.0 <= fraction < 0.5:
        raise ValueError(f"fraction must lie in [0, 0.5), got {fraction}")
    k = int(math.floor(fraction * m))
    return float(np.mean(vals[k : m - k]))


def pearson_corr(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("need two sequences of equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation undefined: zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def loglog_slope(budgets, errors) -> float:
    """Least-squares slope of ``log10(error)`` on ``log10(B)``."""
    b = np.asarray(budgets, dtype=float)
    e = np.asarray(errors, dtype=float)
    if b.shape != e.shape or b.size < 2:
        raise ValueError("need two sequences of equal length >= 2")
    if np.any(e <= 0) or np.any(b <= 0):
        raise ValueError("budgets and errors must be strictly positive")
    slope, _ = np.polyfit(np.log10(b), np.log10(e), 1)
    return float(slope)


def rho_jb(summaries, per_replication: bool = False) -> float:
    """Correlation between average stage count and ``log B``.

    ``per_replication=True`` correlates the individual ``J_B`` values instead
    (diagnostic only).
    """
    if len(summaries) < 2:
        raise ValueError("need at least two budgets")
    if per_replication:
        xs = [r.j_used for s in summaries for r in s.records]
        ys = [math.log(s.B) for s in summaries for _ in s.records]
        return pearson_corr(xs, ys)
    return pearson_corr([s.mean_jb for s in summaries], [math.log(s.B) for s in summaries])


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float) and math.isnan(x):
        return ""
    return format(float(x), ".17g")


def write_summary_csv(path, summaries) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([_fmt(v) for v in (s.B, s.mean_error, s.trimmed_error, s.sd_error, s.mean_jb, s.replications)])


def write_replications_csv(path, summaries) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLICATION_COLUMNS)
        for s in summaries:
            for r in s.records:
                w.writerow([_fmt(v) for v in (r.B, r.rep, r.seed, r.error, r.j_used, r.consumed)])
