"""Projected online gradient descent over the simplex or an interval.

Every loss an instance sees is linear, ``p -> p . c``, so a loss is just
its coefficient vector ``c`` (a scalar on an interval domain).  Step sizes
follow ``eta_t = D / (G sqrt(t))``, which gives regret at most
``1.5 G D sqrt(N)`` after ``N`` steps when every ``|c| <= G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .core import check_k
from .errors import DimensionError, InvalidConfigError, InvalidIntervalError
from .simplex import project_interval, project_simplex


@dataclass(frozen=True)
class SimplexDomain:
    k: int

    def __post_init__(self):
        check_k(self.k)

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0)

    @property
    def shape(self) -> tuple:
        return (self.k,)

    def center(self) -> np.ndarray:
        return np.full(self.k, 1.0 / self.k)

    def project(self, x):
        return project_simplex(x)

    def best_total(self, coeff_sum) -> np.ndarray:
        # min of a linear function over the simplex sits at a vertex
        return np.min(np.atleast_2d(coeff_sum), axis=1)


@dataclass(frozen=True)
class IntervalDomain:
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.lo > self.hi:
            raise InvalidIntervalError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    @property
    def shape(self) -> tuple:
        return ()

    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def project(self, x):
        return project_interval(x, self.lo, self.hi)

    def best_total(self, coeff_sum) -> np.ndarray:
        s = np.atleast_1d(np.asarray(coeff_sum, dtype=float))
        return np.minimum(self.lo * s, self.hi * s)


Domain = Union[SimplexDomain, IntervalDomain]


def agnostic_gradient_bound(gamma: float, k: int) -> float:
    """Safe L2 bound on the online-agnostic loss coefficients: ``2 (1/gamma + 1) sqrt(k)``."""
    return 2.0 * (1.0 / gamma + 1.0) * math.sqrt(k)


def realizable_gradient_bound(gamma: float) -> float:
    """Bound on the scalar realizable loss coefficients: ``1/gamma + 1``."""
    return 1.0 / gamma + 1.0


class OnlineGradientDescent:
    """Projected OGD; one instance plays one OCO game and can be reset.

    Besides the play/observe/reset protocol it keeps running totals so the
    realized regret of the current game is available in O(1).
    """

    def __init__(self, domain: Domain, gradient_bound: float, initial_point=None):
        if not gradient_bound > 0:
            raise InvalidConfigError(f"gradient bound must be positive, got {gradient_bound!r}")
        self.domain = domain
        self.gradient_bound = float(gradient_bound)
        self.diameter = domain.diameter
        self._initial = domain.center() if initial_point is None else initial_point
        self.reset()

    def reset(self) -> "OnlineGradientDescent":
        init = self._initial
        self.point = np.array(init, dtype=float) if np.ndim(init) else float(init)
        self.step_index = 1
        self.loss_total = 0.0
        self.coeff_total = np.zeros(self.domain.shape) if self.domain.shape else 0.0
        return self

    def play(self):
        return self.point.copy() if isinstance(self.point, np.ndarray) else self.point

    def step_size(self) -> float:
        return self.diameter / (self.gradient_bound * math.sqrt(self.step_index))

    def observe(self, coeffs, eta: Optional[float] = None) -> "OnlineGradientDescent":
        c = np.asarray(coeffs, dtype=float)
        if c.shape != self.domain.shape:
            raise DimensionError(f"loss of shape {c.shape}, domain expects {self.domain.shape}")
        self.loss_total += float(np.dot(self.point, c))
        self.coeff_total = self.coeff_total + c
        step = self.step_size() if eta is None else eta
        self.point = self.domain.project(self.point - step * c)
        self.step_index += 1
        return self

    def regret(self) -> float:
        """Realized regret of the losses observed since the last reset."""
        return self.loss_total - float(self.domain.best_total(self.coeff_total)[0])

    def regret_bound(self, n: Optional[int] = None) -> float:
        n = self.step_index - 1 if n is None else n
        return 1.5 * self.gradient_bound * self.diameter * math.sqrt(n)


class OGDPool:
    """``m`` independent OGD instances that all observe one loss per step.

    Row ``i`` of :attr:`points` is the play of instance ``i``.  All
    instances share the step counter since they advance in lock step.
    """

    def __init__(self, domain: Domain, m: int, gradient_bound: float, initial_point=None):
        if not gradient_bound > 0:
            raise InvalidConfigError(f"gradient bound must be positive, got {gradient_bound!r}")
        if m < 1:
            raise InvalidConfigError("pool needs at least one instance")
        self.domain = domain
        self.m = int(m)
        self.gradient_bound = float(gradient_bound)
        self.diameter = domain.diameter
        self._initial = domain.center() if initial_point is None else initial_point
        self.reset()

    def reset(self) -> "OGDPool":
        self.points = np.tile(np.asarray(self._initial, dtype=float), (self.m,) + (1,) * len(self.domain.shape))
        self.points = self.points.reshape((self.m,) + self.domain.shape)
        self.step_index = 1
        self.loss_totals = np.zeros(self.m)
        self.coeff_totals = np.zeros((self.m,) + self.domain.shape)
        return self

    def play(self) -> np.ndarray:
        return self.points.copy()

    def observe(self, coeffs) -> "OGDPool":
        C = np.asarray(coeffs, dtype=float)
        if C.shape != self.points.shape:
            raise DimensionError(f"losses of shape {C.shape}, pool expects {self.points.shape}")
        prod = self.points * C
        self.loss_totals += prod.reshape(self.m, -1).sum(axis=1)
        self.coeff_totals += C
        eta = self.diameter / (self.gradient_bound * math.sqrt(self.step_index))
        self.points = self.domain.project(self.points - eta * C)
        self.step_index += 1
        return self

    def regrets(self) -> np.ndarray:
        return self.loss_totals - self.domain.best_total(self.coeff_totals)

    def regret_bound(self) -> float:
        return 1.5 * self.gradient_bound * self.diameter * math.sqrt(self.step_index - 1)


def oco_new(domain: Domain, gradient_bound: float) -> OnlineGradientDescent:
    return OnlineGradientDescent(domain, gradient_bound)


def measure_regret(losses: Sequence, plays: Sequence, domain: Optional[Domain] = None) -> float:
    """``sum_i l_i(play_i) - min_x sum_i l_i(x)`` for linear losses.

    The minimizer of a linear function is a vertex of the domain, so the
    comparator is computed exactly.  Scalar losses default to ``[0, 1]``.
    """
    if len(losses) != len(plays):
        raise DimensionError("losses and plays differ in length")
    if len(losses) == 0:
        return 0.0
    C = np.asarray(losses, dtype=float)
    X = np.asarray(plays, dtype=float)
    if domain is None:
        domain = IntervalDomain() if C.ndim == 1 else SimplexDomain(C.shape[1])
    suffered = float(np.sum(C * X))
    return suffered - float(domain.best_total(C.sum(axis=0))[0])
