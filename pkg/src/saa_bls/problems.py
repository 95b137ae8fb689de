"""Noisy objectives ``F(theta) = E[f(theta, Z)]`` with hand-coded gradients.

Four problems are provided:

* :class:`Poisson1D` -- ``Z = (X, Y)`` with ``X, Y ~ Poisson(1)`` independent and
  ``f(theta, z) = -z2 z1 theta + exp(theta z1)``; the minimiser is ``0``.
* :class:`PoissonMulti` -- ``Z = (W, X, Y)`` with ``W ~ Poisson(1)``,
  ``X ~ U([-1, 1]^(d-1))`` and ``Y | (W, X) ~ Poisson(exp(a*' X))``; with
  ``u = (W, X)`` the loss is ``-y theta'u + exp(theta'u)`` and the minimiser is
  ``(0, a*)``.
* :class:`HeavyTailed1D` -- :class:`Poisson1D` plus a Student-t shift ``W theta``.
* :class:`MeanEstimation1D` -- ``f(theta, z) = theta^2 - 2 theta z``.

Sample points are rows of a float array whose column layout is fixed per
problem (see ``columns``).  All evaluations follow extended-real arithmetic:
an overflowing ``exp`` produces ``+inf`` rather than an exception.
"""

from __future__ import annotations

import math
import shlex
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ConfigurationError",
    "NoisyProblem",
    "Poisson1D",
    "PoissonMulti",
    "HeavyTailed1D",
    "MeanEstimation1D",
    "OracleValues",
    "sample",
    "eval_f",
    "eval_grad_f",
    "oracle_poisson1d",
    "make_problem",
    "parse_problem",
    "poisson_variates",
    "student_t_variates",
]

# Rates above this go to numpy's transformed-rejection sampler.
_INVERSION_MAX_RATE = 30.0


class ConfigurationError(ValueError):
    """Invalid problem, schedule or sweep parameters."""


def poisson_variates(rng: np.random.Generator, rate, size: int) -> np.ndarray:
    """Draw Poisson variates by sequential inversion of the CDF.

    ``rate`` may be a scalar or an array of length ``size``.  One uniform is
    consumed per variate.  Entries whose rate exceeds 30 are redrawn with
    ``Generator.poisson`` from the same generator.
    """
    lam = np.broadcast_to(np.asarray(rate, dtype=float), (size,))
    u = rng.random(size)
    k = np.zeros(size)
    p = np.exp(-np.minimum(lam, _INVERSION_MAX_RATE))
    cdf = p.copy()
    active = (u > cdf) & (lam <= _INVERSION_MAX_RATE)
    kk = 0
    while active.any() and kk < 1000:
        kk += 1
        k[active] += 1.0
        p = np.where(active, p * lam / kk, p)
        cdf = np.where(active, cdf + p, cdf)
        # p underflowing means the remaining tail is below double resolution
        active &= (u > cdf) & (p > 1e-300)
    large = lam > _INVERSION_MAX_RATE
    if large.any():
        k[large] = rng.poisson(lam[large])
    return k


def student_t_variates(rng: np.random.Generator, nu: float, size: int) -> np.ndarray:
    """Standard normal divided by ``sqrt(chi2_nu / nu)``."""
    normal = rng.standard_normal(size)
    chi2 = rng.chisquare(nu, size)
    return normal / np.sqrt(chi2 / nu)


class OracleValues(NamedTuple):
    value: float
    grad: float
    hess: float


def oracle_poisson1d(theta: float) -> OracleValues:
    """Exact ``F``, ``F'`` and ``F''`` for the one-dimensional Poisson problem.

    ``F(theta) = -theta + exp(exp(theta) - 1)``.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    with np.errstate(over="ignore"):
        inner = np.expm1(theta)
        value = -theta + float(np.exp(inner))
        grad = -1.0 + float(np.exp(inner + theta))
        hess = float(np.exp(inner + theta)) * (1.0 + math.exp(theta))
    return OracleValues(value, grad, hess)


@dataclass(frozen=True)
class NoisyProblem:
    """Base class.  Subclasses set ``dim``, ``sample_dim`` and ``theta_star``.

    ``theta_star`` is only used for error reporting; the optimiser never sees it.
    """

    name = "abstract"
    columns = ()

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def sample_dim(self) -> int:
        return len(self.columns)

    @property
    def theta_star(self) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Return ``size`` i.i.d. draws as an array of shape ``(size, sample_dim)``."""
        raise NotImplementedError

    def values(self, theta: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """Pointwise ``f(theta, z_i)`` for each row of ``Z``."""
        raise NotImplementedError

    def grads(self, theta: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """Pointwise gradients, shape ``(len(Z), dim)``."""
        raise NotImplementedError

    def mean_value(self, theta: np.ndarray, Z: np.ndarray) -> float:
        return float(np.sum(self.values(theta, Z)) / len(Z))

    def mean_grad(self, theta: np.ndarray, Z: np.ndarray) -> np.ndarray:
        return np.sum(self.grads(theta, Z), axis=0) / len(Z)

    def describe(self) -> str:
        return self.name


def _exp(x):
    with np.errstate(over="ignore"):
        return np.exp(x)


def _times_exp(a, e):
    # a * e with 0 * inf := 0, so zero covariates never poison the sum
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(a == 0.0, 0.0, a * e)


@dataclass(frozen=True)
class Poisson1D(NoisyProblem):
    name = "poisson1d"
    columns = ("x", "y")

    @property
    def dim(self) -> int:
        return 1

    @property
    def theta_star(self) -> np.ndarray:
        return np.zeros(1)

    def sample(self, rng, size):
        x = poisson_variates(rng, 1.0, size)
        y = poisson_variates(rng, 1.0, size)
        return np.column_stack([x, y])

    def values(self, theta, Z):
        t = theta[0]
        x, y = Z[:, 0], Z[:, 1]
        with np.errstate(invalid="ignore"):
            return -y * x * t + _exp(t * x)

    def grads(self, theta, Z):
        t = theta[0]
        x, y = Z[:, 0], Z[:, 1]
        with np.errstate(invalid="ignore"):
            g = -x * y + _times_exp(x, _exp(t * x))
        return g[:, None]


@dataclass(frozen=True)
class HeavyTailed1D(NoisyProblem):
    """Poisson example with an additive ``W theta`` term, ``W ~ t_nu``."""

    nu: float = 1.501
    name = "heavy"
    columns = ("w", "x", "y")

    def __post_init__(self):
        if not self.nu > 1:
            raise ConfigurationError(f"nu must exceed 1, got {self.nu!r}")

    @property
    def dim(self) -> int:
        return 1

    @property
    def theta_star(self) -> np.ndarray:
        return np.zeros(1)

    def sample(self, rng, size):
        w = student_t_variates(rng, self.nu, size)
        x = poisson_variates(rng, 1.0, size)
        y = poisson_variates(rng, 1.0, size)
        return np.column_stack([w, x, y])

    def values(self, theta, Z):
        t = theta[0]
        w, x, y = Z[:, 0], Z[:, 1], Z[:, 2]
        with np.errstate(invalid="ignore"):
            return -y * x * t + _exp(t * x) + w * t

    def grads(self, theta, Z):
        t = theta[0]
        w, x, y = Z[:, 0], Z[:, 1], Z[:, 2]
        with np.errstate(invalid="ignore"):
            g = -y * x + _times_exp(x, _exp(t * x)) + w
        return g[:, None]

    def describe(self) -> str:
        return f"heavy nu={self.nu!r}"


@dataclass(frozen=True)
class PoissonMulti(NoisyProblem):
    """Poisson regression in ``d`` dimensions; the first covariate is ``W ~ Poisson(1)``.

    The conditional rate of ``Y`` is ``exp(a*' X)`` so that ``(0, a*)`` is a
    stationary point of ``F``.
    """

    a_star: tuple = ()
    name = "poisson-multi"

    def __post_init__(self):
        if len(self.a_star) < 1:
            raise ConfigurationError("poisson-multi needs d >= 2")
        object.__setattr__(self, "a_star", tuple(float(a) for a in self.a_star))

    @property
    def columns(self) -> tuple:
        d = self.dim
        return ("w",) + tuple(f"x{i}" for i in range(1, d)) + ("y",)

    @property
    def dim(self) -> int:
        return len(self.a_star) + 1

    @property
    def theta_star(self) -> np.ndarray:
        return np.concatenate([[0.0], self.a_star])

    def sample(self, rng, size):
        d = self.dim
        w = poisson_variates(rng, 1.0, size)
        x = rng.uniform(-1.0, 1.0, size=(size, d - 1))
        rate = np.exp(x @ np.asarray(self.a_star))
        y = poisson_variates(rng, rate, size)
        return np.column_stack([w, x, y])

    def values(self, theta, Z):
        U, y = Z[:, :-1], Z[:, -1]
        eta = U @ theta
        with np.errstate(invalid="ignore"):
            return -y * eta + _exp(eta)

    def grads(self, theta, Z):
        U, y = Z[:, :-1], Z[:, -1]
        e = _exp(U @ theta)
        with np.errstate(invalid="ignore"):
            return -y[:, None] * U + _times_exp(U, e[:, None])

    def mean_grad(self, theta, Z):
        U, y = Z[:, :-1], Z[:, -1]
        e = _exp(U @ theta)
        with np.errstate(invalid="ignore", over="ignore"):
            r = e - y
            if np.isfinite(r).all():
                return (U.T @ r) / len(Z)
        return np.sum(self.grads(theta, Z), axis=0) / len(Z)

    def describe(self) -> str:
        return f"poisson-multi d={self.dim}"


@dataclass(frozen=True)
class MeanEstimation1D(NoisyProblem):
    """``f(theta, z) = theta^2 - 2 theta z``, minimised at ``E[Z]``.

    ``dist`` is ``("point", c)``, ``("normal", mu, sigma)`` or ``("t", mu, nu)``.
    """

    dist: tuple = ("normal", 0.0, 1.0)
    name = "mean"
    columns = ("z",)

    def __post_init__(self):
        kind = self.dist[0]
        if kind == "point" and len(self.dist) == 2:
            return
        if kind == "normal" and len(self.dist) == 3 and self.dist[2] >= 0:
            return
        if kind == "t" and len(self.dist) == 3 and self.dist[2] > 1:
            return
        raise ConfigurationError(f"unsupported distribution {self.dist!r}")

    @property
    def dim(self) -> int:
        return 1

    @property
    def theta_star(self) -> np.ndarray:
        return np.array([float(self.dist[1])])

    def sample(self, rng, size):
        kind = self.dist[0]
        if kind == "point":
            z = np.full(size, float(self.dist[1]))
        elif kind == "normal":
            z = self.dist[1] + self.dist[2] * rng.standard_normal(size)
        else:
            z = self.dist[1] + student_t_variates(rng, self.dist[2], size)
        return z[:, None]

    def values(self, theta, Z):
        t = theta[0]
        return t * t - 2.0 * t * Z[:, 0]

    def grads(self, theta, Z):
        return (2.0 * theta[0] - 2.0 * Z[:, 0])[:, None]

    def describe(self) -> str:
        return "mean dist=" + ":".join(str(v) for v in self.dist)


def _check_shapes(problem: NoisyProblem, theta, z):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=float).reshape(-1)
    if theta.shape != (problem.dim,):
        raise ValueError(f"theta has length {theta.size}, expected {problem.dim}")
    if z.shape != (problem.sample_dim,):
        raise ValueError(f"z has length {z.size}, expected {problem.sample_dim}")
    return theta, z


def sample(problem: NoisyProblem, rng: np.random.Generator) -> np.ndarray:
    """One draw of ``Z``."""
    return problem.sample(rng, 1)[0]


def eval_f(problem: NoisyProblem, theta, z) -> float:
    theta, z = _check_shapes(problem, theta, z)
    return float(problem.values(theta, z[None, :])[0])


def eval_grad_f(problem: NoisyProblem, theta, z) -> np.ndarray:
    theta, z = _check_shapes(problem, theta, z)
    return problem.grads(theta, z[None, :])[0]


def make_problem(kind: str, **params) -> NoisyProblem:
    """Build a problem from a kind name and keyword parameters.

    Recognised kinds and parameters::

        poisson1d
        poisson-multi  d=<int >= 2>  seed=<int>   (a* ~ N(0, I_{d-1}) from seed)
        heavy          nu=<float > 1>
        mean           dist=point:<c> | normal:<mu>:<sigma> | t:<mu>:<nu>
    """
    kind = kind.lower()
    try:
        if kind == "poisson1d":
            _no_extra(kind, params, set())
            return Poisson1D()
        if kind in ("poisson-multi", "poisson_multi", "poissonmulti"):
            _no_extra(kind, params, {"d", "seed"})
            d = int(params.get("d", 20))
            if d < 2:
                raise ConfigurationError(f"poisson-multi needs d >= 2, got {d}")
            rng = np.random.default_rng(int(params.get("seed", 0)))
            return PoissonMulti(a_star=tuple(rng.standard_normal(d - 1)))
        if kind in ("heavy", "heavytailed1d", "heavy-tailed"):
            _no_extra(kind, params, {"nu"})
            return HeavyTailed1D(nu=float(params.get("nu", 1.501)))
        if kind in ("mean", "mean1d", "meanestimation1d"):
            _no_extra(kind, params, {"dist"})
            return MeanEstimation1D(dist=_parse_dist(params.get("dist", "normal:0:1")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from exc
    raise ConfigurationError(f"unknown problem kind {kind!r}")


def _no_extra(kind, params, allowed):
    extra = set(params) - allowed
    if extra:
        raise ConfigurationError(f"{kind}: unexpected parameters {sorted(extra)}")


def _parse_dist(text) -> tuple:
    if isinstance(text, tuple):
        return text
    parts = str(text).split(":")
    return (parts[0],) + tuple(float(p) for p in parts[1:])


def parse_problem(text: str) -> NoisyProblem:
    """Parse a descriptor such as ``"poisson-multi d=20 seed=3"`` or ``"heavy nu=1.501"``."""
    tokens = shlex.split(text)
    if not tokens:
        raise ConfigurationError("empty problem descriptor")
    params = {}
    for tok in tokens[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise ConfigurationError(f"expected key=value, got {tok!r}")
        params[key.replace("ν", "nu")] = val
    return make_problem(tokens[0], **params)
