"""Sample-average objectives over a shared, growing sample prefix.

``F_n(theta) = (1/n) sum_{i<=n} f(theta, Z_i)``.  Every value or gradient of
``F_n`` is paid for through a :class:`BudgetMeter`: ``n * c_eval`` units for a
value and ``n * c_grad`` units for a gradient.  Drawing samples is free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problems import NoisyProblem

__all__ = ["BudgetMeter", "SampleStream", "AveragedObjective", "extend_prefix", "f_n_value", "f_n_grad"]

# Samples are generated in fixed-size blocks so that the i-th draw does not
# depend on how the prefix was grown.
BLOCK_SIZE = 1024


@dataclass
class BudgetMeter:
    """Integer budget ledger.  A charge either succeeds in full or is refused."""

    budget: int
    c_eval: int = 1
    c_grad: int = 1
    remaining: int = field(init=False)
    consumed: int = field(init=False, default=0)
    value_calls: int = field(init=False, default=0)
    grad_calls: int = field(init=False, default=0)

    def __post_init__(self):
        for name in ("budget", "c_eval", "c_grad"):
            v = getattr(self, name)
            if int(v) != v:
                raise ValueError(f"{name} must be an integer, got {v!r}")
            setattr(self, name, int(v))
        if self.budget < 0:
            raise ValueError(f"budget must be nonnegative, got {self.budget}")
        if self.c_eval < 1 or self.c_grad < 1:
            raise ValueError("unit costs must be positive integers")
        self.remaining = self.budget

    def can_afford(self, units: int) -> bool:
        return self.remaining >= units

    def charge(self, units: int) -> bool:
        if units < 0:
            raise ValueError("cannot charge a negative amount")
        if units > self.remaining:
            return False
        self.remaining -= units
        self.consumed += units
        return True

    def charge_value(self, n: int) -> bool:
        ok = self.charge(n * self.c_eval)
        self.value_calls += ok
        return ok

    def charge_grad(self, n: int) -> bool:
        ok = self.charge(n * self.c_grad)
        self.grad_calls += ok
        return ok


class SampleStream:
    """The i.i.d. sequence ``Z_1, Z_2, ...`` materialised on demand.

    Extending the prefix never changes entries that already exist, so stages
    using ``n_j < n_{j+1}`` samples share their first ``n_j`` draws.
    """

    def __init__(self, problem: NoisyProblem, rng):
        self.problem = problem
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self._data = np.empty((0, problem.sample_dim))
        self._length = 0

    def __len__(self) -> int:
        return self._length

    @property
    def prefix(self) -> np.ndarray:
        return self._data[: self._length]

    def extend(self, n: int) -> None:
        if n <= self._length:
            return
        blocks = []
        have = self._data.shape[0]
        while have < n:
            blocks.append(self.problem.sample(self.rng, BLOCK_SIZE))
            have += BLOCK_SIZE
        if blocks:
            self._data = np.concatenate([self._data] + blocks, axis=0)
        self._length = n

    def head(self, n: int) -> np.ndarray:
        if n > self._length:
            raise ValueError(f"prefix has {self._length} samples, {n} requested")
        return self._data[:n]


def extend_prefix(stream: SampleStream, n: int) -> None:
    stream.extend(n)


@dataclass
class AveragedObjective:
    """``F_n`` over the first ``n`` samples of ``stream``.  No caching: each call is charged."""

    stream: SampleStream
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        self.stream.extend(self.n)

    @property
    def problem(self) -> NoisyProblem:
        return self.stream.problem

    def value(self, theta, meter: BudgetMeter):
        """Charged ``F_n(theta)``, or ``None`` if the meter cannot pay ``n * c_eval``."""
        if not meter.charge_value(self.n):
            return None
        return self.problem.mean_value(np.asarray(theta, dtype=float), self.stream.head(self.n))

    def grad(self, theta, meter: BudgetMeter):
        """Charged gradient of ``F_n``, or ``None`` if unaffordable."""
        if not meter.charge_grad(self.n):
            return None
        return self.problem.mean_grad(np.asarray(theta, dtype=float), self.stream.head(self.n))

    def value_uncharged(self, theta) -> float:
        return self.problem.mean_value(np.asarray(theta, dtype=float), self.stream.head(self.n))


def f_n_value(obj: AveragedObjective, theta, meter: BudgetMeter):
    return obj.value(theta, meter)


def f_n_grad(obj: AveragedObjective, theta, meter: BudgetMeter):
    return obj.grad(theta, meter)
