"""Property suites run by ``saa-bls check`` and by the test-suite.

Each suite returns a list of failure descriptions; an empty list means pass.
"""

from __future__ import annotations

import math

import numpy as np

from .gd_bls import LineSearchParams, run_budgeted, run_deterministic
from .problems import HeavyTailed1D, MeanEstimation1D, Poisson1D, make_problem
from .retrospective import delta_lower_bound, gamma_identity_residual
from .saa import AveragedObjective, BudgetMeter, SampleStream

__all__ = [
    "SUITES",
    "check_gradients",
    "check_descent",
    "check_budget",
    "check_gd_bounds",
    "check_gamma",
    "random_spd",
    "run_suites",
]


def _gradient_problems():
    return [
        Poisson1D(),
        HeavyTailed1D(1.501),
        MeanEstimation1D(("normal", 1.0, 2.0)),
        make_problem("poisson-multi", d=5, seed=1),
        make_problem("poisson-multi", d=20, seed=2),
    ]


def check_gradients(pairs: int = 200, seed: int = 0, h: float = 1e-6, rtol: float = 1e-4) -> list:
    """Central finite differences of ``f`` against the coded gradient, ``||theta|| <= 3``."""
    rng = np.random.default_rng(seed)
    failures = []
    for problem in _gradient_problems():
        d = problem.dim
        Z = problem.sample(rng, pairs)
        for i in range(pairs):
            u = rng.standard_normal(d)
            theta = u / np.linalg.norm(u) * 3.0 * rng.random() ** (1.0 / d)
            z = Z[i : i + 1]
            f0 = problem.values(theta, z)[0]
            if not math.isfinite(f0):
                continue
            g = problem.grads(theta, z)[0]
            for k in range(d):
                e = np.zeros(d)
                e[k] = h
                fp = problem.values(theta + e, z)[0]
                fm = problem.values(theta - e, z)[0]
                if not (math.isfinite(fp) and math.isfinite(fm)):
                    continue
                fd = (fp - fm) / (2.0 * h)
                if abs(fd - g[k]) > rtol * max(1.0, abs(g[k])):
                    failures.append(f"{problem.describe()}: theta={theta}, z={z[0]}, component {k}: fd={fd!r} grad={g[k]!r}")
    return failures


class _CountingObjective:
    """Proxy that tallies successful charged calls independently of the meter."""

    def __init__(self, obj):
        self.obj = obj
        self.n = obj.n
        self.values = 0
        self.grads = 0

    def value(self, theta, meter):
        out = self.obj.value(theta, meter)
        self.values += out is not None
        return out

    def grad(self, theta, meter):
        out = self.obj.grad(theta, meter)
        self.grads += out is not None
        return out


def check_budget(runs: int = 1000, seed: int = 0, meter_cls=BudgetMeter) -> list:
    """Randomised conservation and decomposition of the consumed budget."""
    rng = np.random.default_rng(seed)
    problems = [Poisson1D(), HeavyTailed1D(1.501), MeanEstimation1D(("normal", 2.0, 1.0))]
    failures = []
    for k in range(runs):
        problem = problems[k % len(problems)]
        B = int(rng.integers(0, 20_000))
        n = int(rng.integers(1, 300))
        c_eval = int(rng.integers(1, 4))
        c_grad = int(rng.integers(1, 4))
        tau = float(rng.choice([0.0, 10.0 ** rng.uniform(-4, 1)]))
        theta0 = rng.uniform(-2, 2, problem.dim)
        obj = _CountingObjective(AveragedObjective(SampleStream(problem, int(rng.integers(2**32))), n))
        meter = meter_cls(B, c_eval, c_grad)
        res = run_budgeted(obj, theta0, meter, LineSearchParams(0.5, tau))
        expected = n * (obj.grads * c_grad + obj.values * c_eval)
        tag = f"run {k}: B={B} n={n} c_eval={c_eval} c_grad={c_grad} tau={tau:g}"
        if meter.remaining + meter.consumed != B:
            failures.append(f"{tag}: remaining {meter.remaining} + consumed {meter.consumed} != B")
        if B - res.remaining != expected or res.consumed != expected:
            failures.append(f"{tag}: consumed {res.consumed} (B - remaining {B - res.remaining}) != {expected} from call counts")
        if res.remaining < 0:
            failures.append(f"{tag}: negative remaining budget")
    return failures


def check_descent(runs: int = 60, seed: int = 0) -> list:
    """Sufficient decrease on every accepted step and never-worse on the output."""
    rng = np.random.default_rng(seed)
    problems = [Poisson1D(), HeavyTailed1D(1.501), make_problem("poisson-multi", d=5, seed=3)]
    failures = []
    for k in range(runs):
        problem = problems[k % len(problems)]
        n = int(rng.integers(50, 2000))
        obj = AveragedObjective(SampleStream(problem, int(rng.integers(2**32))), n)
        theta0 = rng.uniform(-1.5, 1.5, problem.dim)
        meter = BudgetMeter(int(rng.integers(n, 200 * n)))
        res = run_budgeted(obj, theta0, meter, LineSearchParams(float(rng.choice([0.3, 0.5, 0.8])), 0.0))
        tr, vs, gn = res.fn_trace, res.step_sizes, res.grad_norms
        for t, v in enumerate(vs):
            if not tr[t + 1] <= tr[t] - 0.5 * v * gn[t] * gn[t]:
                failures.append(f"run {k}: step {t} violates sufficient decrease")
            if not 0.0 < v <= 1.0:
                failures.append(f"run {k}: step size {v} outside (0, 1]")
        if tr and not obj.value_uncharged(res.theta) <= obj.value_uncharged(theta0):
            failures.append(f"run {k}: returned point is worse than theta0")
    return failures


UNDERFLOW_GUARD = 1e-280


def random_spd(rng, d: int):
    """Random SPD matrix with largest eigenvalue in ``[1, 50]`` and condition number <= 100."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam_max = rng.uniform(1.0, 50.0)
    lam = rng.uniform(lam_max / 100.0, lam_max, d)
    lam[0] = lam_max
    return (q * lam) @ q.T, lam_max


def check_gd_bounds(matrices: int = 50, seed: int = 0, T: int = 200, betas=(0.3, 0.5, 0.8)) -> list:
    """Step-size floor ``beta / L`` and the ``||x0 - x*||^2 L / (2 beta T)`` gap bound on quadratics."""
    rng = np.random.default_rng(seed)
    failures = []
    for m in range(matrices):
        d = int(rng.integers(1, 11))
        A, L = random_spd(rng, d)
        x0 = rng.uniform(-5, 5, d)
        for beta in betas:
            xs, steps = run_deterministic(lambda x: 0.5 * x @ A @ x, lambda x: A @ x, x0, T, beta, return_steps=True)
            floor = beta / L
            # once g(x) sits in the double-precision underflow range the test is
            # decided by rounding, not by curvature
            bad = [v for t, v in enumerate(steps) if v < floor and 0.5 * xs[t] @ A @ xs[t] > UNDERFLOW_GUARD]
            if bad:
                failures.append(f"matrix {m} (d={d}, L={L:.4g}) beta={beta}: step {min(bad)} < {floor}")
            r0 = float(x0 @ x0)
            for t in range(1, T + 1):
                gap = 0.5 * xs[t] @ A @ xs[t]
                if gap > r0 * L / (2.0 * beta * t):
                    failures.append(f"matrix {m} beta={beta}: gap {gap} exceeds bound at T={t}")
                    break
    return failures


def check_gamma(tol: float = 1e-12, max_j: int = 50) -> list:
    failures = []
    for a in (0.25, 0.5, 0.75, 1.0):
        lo = delta_lower_bound(a)
        for delta in np.round(np.arange(0.41, 0.9901, 0.01), 2):
            if not lo < delta < 1.0:
                continue
            for j in range(2, max_j + 1):
                r = gamma_identity_residual(float(delta), a, j)
                if not r <= tol:
                    failures.append(f"delta={delta} alpha'={a} j={j}: residual {r:.3g}")
    return failures


class _LeakyMeter(BudgetMeter):
    """Deliberately broken meter: every third value charge is not recorded as consumed."""

    def charge_value(self, n):
        ok = super().charge_value(n)
        if ok and self.value_calls % 3 == 0:
            self.consumed -= n * self.c_eval
        return ok


SUITES = {
    "gradient": check_gradients,
    "descent": check_descent,
    "budget": check_budget,
    "gd": check_gd_bounds,
    "gamma": check_gamma,
}


def run_suites(only=None, inject_fault=None, out=print) -> bool:
    names = list(only) if only else list(SUITES)
    ok = True
    for name in names:
        if name == "budget" and inject_fault == "budget":
            failures = check_budget(runs=50, meter_cls=_LeakyMeter)
        else:
            failures = SUITES[name]()
        status = "PASS" if not failures else f"FAIL ({len(failures)})"
        out(f"{name:10s} {status}")
        for f in failures[:10]:
            out(f"  {f}")
        ok &= not failures
    return ok
