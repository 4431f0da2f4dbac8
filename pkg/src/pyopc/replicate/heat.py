# src/pyopc/replicate/heat.py
"""
후진 열방정식의 해

    ∂H/∂t + (R̄/2) x² ∂²H/∂x² = 0,   H(x, T) = f(x)

H(x, t) = E[f(x e^G)], G ~ Normal(−s/2, s), s = R̄ (T − t) 로 표현
모든 평가기는 남은 분산 형태 `value_at(x, s)` 도 제공하므로, 시간 변환된 시장은
s = ∫_t^T |θ|² 에서 H 를 바로 평가
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.stats import norm

from pyopc.errors import BadParameters, DegenerateTime, GrowthBoundViolated
from pyopc.numerics import PiecewiseFunction, QuadratureConfig, gaussian_expectation

logger = logging.getLogger(__name__)


class HeatSolution(ABC):
    """(0, inf) x [0, T] 위의 H(x, t), ∂H/∂x(x, t) 평가기"""

    rbar: float
    horizon: float

    @abstractmethod
    def payoff(self, x) -> np.ndarray:
        """만기 조건 f(x)"""
        raise NotImplementedError

    @abstractmethod
    def value_at(self, x, s: float) -> np.ndarray:
        """남은 분산 s 에서의 H"""
        raise NotImplementedError

    @abstractmethod
    def delta_at(self, x, s: float) -> np.ndarray:
        """남은 분산 s > 0 에서의 ∂H/∂x"""
        raise NotImplementedError

    @property
    def J(self) -> float:
        return self.rbar * self.horizon

    def variance(self, t: float) -> float:
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t = {t} outside [0, {self.horizon}]")
        return self.rbar * (self.horizon - t)

    def value(self, x, t: float) -> np.ndarray:
        if t == self.horizon:
            return self.payoff(x)
        return self.value_at(x, self.variance(t))

    def dx(self, x, t: float) -> np.ndarray:
        s = self.variance(t)
        if t == self.horizon or s == 0.0:
            raise DegenerateTime(f"dH/dx undefined at t = {t} (remaining variance 0)", payload=t)
        return self.delta_at(x, s)


# ------------ kernel quadrature ------------
@dataclass(frozen=True, eq=False)
class QuadratureHeatSolution(HeatSolution):
    """
    구간별 payoff 의 커널 구적
    ∂H/∂x 는 H 의 차분이 아니라 가우스 커널 미분 E[f(x e^G) u] / (x √s) 로 계산
    """
    claim: PiecewiseFunction
    rbar: float
    horizon: float
    quad: QuadratureConfig = QuadratureConfig()
    growth: Optional[Tuple[float, float]] = None

    def payoff(self, x) -> np.ndarray:
        return self.claim(x)

    def value_at(self, x, s: float) -> np.ndarray:
        if s == 0.0:
            return self.claim(x)
        return gaussian_expectation(self.claim, x, -0.5 * s, float(np.sqrt(s)), self.quad)

    def delta_at(self, x, s: float) -> np.ndarray:
        if s <= 0.0:
            raise DegenerateTime("dH/dx needs positive remaining variance", payload=s)
        x = np.asarray(x, dtype=float)
        sd = float(np.sqrt(s))
        return gaussian_expectation(self.claim, x, -0.5 * s, sd, self.quad, moment=1) / (x * sd)


def solve_heat(
    f: PiecewiseFunction,
    rbar: float,
    horizon: float,
    quad: QuadratureConfig = QuadratureConfig(),
    *,
    growth: Optional[Tuple[float, float]] = None,
) -> QuadratureHeatSolution:
    """
    payoff f 에 대한 구적 해 구성

    Args:
        f: (0, inf) 위의 구간별 payoff
        rbar: R / T
        horizon: T
        quad: 노드 수와 절단 폭
        growth: |f(z)| <= C z^{c0 log z} 인 (C, c0), c0 < 1/(2 R̄ T) 이어야 함

    Returns:
        QuadratureHeatSolution
    """
    if rbar < 0 or not horizon > 0:
        raise BadParameters("rbar must be >= 0 and horizon > 0", payload={"rbar": rbar, "horizon": horizon})
    J = rbar * horizon
    if growth is not None and J > 0:
        _, c0 = growth
        if c0 >= 1.0 / (2.0 * J):
            raise GrowthBoundViolated(f"c0 = {c0:g} >= 1/(2J) = {1.0 / (2.0 * J):g}", payload={"c0": c0, "J": J})
    logger.debug("heat quadrature: nodes=%d truncation=%g J=%.6g", quad.nodes, quad.truncation_sigmas, J)
    return QuadratureHeatSolution(claim=f, rbar=float(rbar), horizon=float(horizon), quad=quad, growth=growth)


# ------------ closed forms ------------
@dataclass(frozen=True, eq=False)
class PowerHeatSolution(HeatSolution):
    """H(x, t) = C1 (x/λ)^ν exp(½ν(ν−1)(T−t)R̄) + C0."""
    nu: float
    c0: float
    c1: float
    lam: float
    rbar: float
    horizon: float

    def payoff(self, x) -> np.ndarray:
        return self.value_at(x, 0.0)

    def value_at(self, x, s: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.c1 * (x / self.lam) ** self.nu * np.exp(0.5 * self.nu * (self.nu - 1.0) * s) + self.c0

    def delta_at(self, x, s: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.nu * (self.value_at(x, s) - self.c0) / x

    def dx(self, x, t: float) -> np.ndarray:
        return self.delta_at(x, self.variance(t))


def closed_form_H(nu: float, C0: float, C1: float, lam: float, rbar: float, horizon: float) -> PowerHeatSolution:
    if nu == 0 or C1 == 0:
        raise BadParameters("closed form needs nu != 0 and C1 != 0", payload={"nu": nu, "C1": C1})
    if lam == 0:
        raise BadParameters("lambda must be nonzero", payload="lambda")
    return PowerHeatSolution(nu=float(nu), c0=float(C0), c1=float(C1), lam=float(lam),
                             rbar=float(rbar), horizon=float(horizon))


@dataclass(frozen=True, eq=False)
class CompositeHeatSolution(HeatSolution):
    """상수 + Σ 거듭제곱 항"""
    constant: float
    terms: Tuple[PowerHeatSolution, ...]
    rbar: float
    horizon: float

    def payoff(self, x) -> np.ndarray:
        return self.value_at(x, 0.0)

    def value_at(self, x, s: float) -> np.ndarray:
        total = np.full(np.shape(x), self.constant, dtype=float)
        for term in self.terms:
            total = total + term.value_at(x, s)
        return total

    def delta_at(self, x, s: float) -> np.ndarray:
        total = np.zeros(np.shape(x), dtype=float)
        for term in self.terms:
            total = total + term.delta_at(x, s)
        return total

    def dx(self, x, t: float) -> np.ndarray:
        return self.delta_at(x, self.variance(t))


@dataclass(frozen=True, eq=False)
class GoalHeatSolution(HeatSolution):
    """payoff α 1{x >= λα} 에 대한 H(x, t) = α Φ((ln(x/(λα)) − s/2)/√s)"""
    alpha: float
    lam: float
    rbar: float
    horizon: float

    def payoff(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.lam * self.alpha, self.alpha, 0.0)

    def _d(self, x, s: float) -> np.ndarray:
        return (np.log(np.asarray(x, dtype=float) / (self.lam * self.alpha)) - 0.5 * s) / np.sqrt(s)

    def value_at(self, x, s: float) -> np.ndarray:
        if s == 0.0:
            return self.payoff(x)
        return self.alpha * norm.cdf(self._d(x, s))

    def delta_at(self, x, s: float) -> np.ndarray:
        if s <= 0.0:
            raise DegenerateTime("dH/dx needs positive remaining variance", payload=s)
        x = np.asarray(x, dtype=float)
        return self.alpha * norm.pdf(self._d(x, s)) / (x * np.sqrt(s))


def goal_heat(alpha: float, lam: float, rbar: float, horizon: float) -> GoalHeatSolution:
    if not alpha > 0 or not lam > 0:
        raise BadParameters("goal heat needs alpha > 0 and lambda > 0", payload={"alpha": alpha, "lambda": lam})
    return GoalHeatSolution(alpha=float(alpha), lam=float(lam), rbar=float(rbar), horizon=float(horizon))
