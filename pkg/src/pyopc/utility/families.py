# src/pyopc/utility/families.py
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import comb

from pyopc.errors import BadParameters
from pyopc.numerics import PiecewiseFunction


class Family(str, Enum):
    LOG = "log"
    POWER = "power"
    MEAN_VARIANCE = "mean_variance"
    POLYNOMIAL_GOAL = "polynomial_goal"
    GOAL_ACHIEVING = "goal_achieving"


@dataclass(frozen=True)
class UtilitySpec:
    """
    5가지 효용 계열 중 하나

    - Log: [0, inf) 에서 U = ln x
    - Power(delta): [0, inf) 에서 U = x^δ/δ, δ < 1, δ != 0
    - MeanVariance(k, c): 실수 전체에서 U = −k x² + c x, k > 0, c >= 0
    - PolynomialGoal(l): [0, inf) 에서 U = x − x^δ, δ = 1 + 1/l, l >= 1 정수
    - GoalAchieving(alpha): [0, inf) 에서 U = 1{x >= α}
    """
    family: Family
    delta: Optional[float] = None
    k: Optional[float] = None
    c: Optional[float] = None
    l: Optional[int] = None
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "family", Family(self.family))
        except ValueError:
            raise BadParameters(f"unknown utility family {self.family!r}", payload="family") from None
        f = self.family
        if f is Family.POWER:
            if self.delta is None or not np.isfinite(self.delta) or self.delta >= 1 or self.delta == 0:
                raise BadParameters("power utility needs delta < 1, delta != 0", payload="delta")
        elif f is Family.MEAN_VARIANCE:
            if self.k is None or not self.k > 0:
                raise BadParameters("mean-variance utility needs k > 0", payload="k")
            if self.c is None or not self.c >= 0:
                raise BadParameters("mean-variance utility needs c >= 0", payload="c")
        elif f is Family.POLYNOMIAL_GOAL:
            if self.l is None or int(self.l) != self.l or self.l < 1:
                raise BadParameters("polynomial-goal utility needs an integer l >= 1", payload="l")
            object.__setattr__(self, "l", int(self.l))
        elif f is Family.GOAL_ACHIEVING:
            if self.alpha is None or not self.alpha > 0:
                raise BadParameters("goal-achieving utility needs alpha > 0", payload="alpha")

    # ------------ constructors ------------
    @classmethod
    def log(cls) -> "UtilitySpec":
        return cls(Family.LOG)

    @classmethod
    def power(cls, delta: float) -> "UtilitySpec":
        return cls(Family.POWER, delta=delta)

    @classmethod
    def mean_variance(cls, k: float, c: float) -> "UtilitySpec":
        return cls(Family.MEAN_VARIANCE, k=k, c=c)

    @classmethod
    def polynomial_goal(cls, l: int) -> "UtilitySpec":
        return cls(Family.POLYNOMIAL_GOAL, l=l)

    @classmethod
    def goal_achieving(cls, alpha: float) -> "UtilitySpec":
        return cls(Family.GOAL_ACHIEVING, alpha=alpha)

    # ------------ properties ------------
    @property
    def poly_delta(self) -> float:
        """다항 목표 계열의 δ = 1 + 1/l"""
        return 1.0 + 1.0 / self.l

    @property
    def domain_lower(self) -> Optional[float]:
        """D̂ 의 왼쪽 끝 (실수 전체면 None)"""
        return None if self.family is Family.MEAN_VARIANCE else 0.0

    @property
    def exponent(self) -> Optional[float]:
        """거듭제곱형 청구권의 ν (단일 거듭제곱이 아니면 None)"""
        if self.family is Family.LOG:
            return 1.0
        if self.family is Family.POWER:
            return 1.0 / (1.0 - self.delta)
        if self.family is Family.MEAN_VARIANCE:
            return -1.0
        return None

    def check_x0(self, x0: float) -> None:
        f = self.family
        if not np.isfinite(x0):
            raise BadParameters("x0 must be finite", payload="x0")
        if f in (Family.LOG, Family.POWER) and not x0 > 0:
            raise BadParameters(f"{f.value} utility needs x0 > 0", payload="x0")
        if f is Family.GOAL_ACHIEVING and not 0 < x0 < self.alpha:
            raise BadParameters(f"goal-achieving utility needs 0 < x0 < alpha = {self.alpha}", payload="x0")
        if f is Family.POLYNOMIAL_GOAL and not x0 > self.poly_delta ** (-self.l):
            raise BadParameters(
                f"polynomial-goal utility needs x0 > delta^-l = {self.poly_delta ** (-self.l):.12g}", payload="x0",
            )

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"family": self.family.value}
        for name in ("delta", "k", "c", "l", "alpha"):
            value = getattr(self, name)
            if value is not None:
                d[name] = value
        return d


def utility_value(u: UtilitySpec, x) -> np.ndarray:
    """U(x), 정의역 밖은 −inf"""
    x = np.asarray(x, dtype=float)
    f = u.family
    with np.errstate(divide="ignore", invalid="ignore"):
        if f is Family.MEAN_VARIANCE:
            return -u.k * x * x + u.c * x
        inside = x >= 0
        safe = np.where(inside, x, 1.0)
        if f is Family.LOG:
            val = np.log(safe)
        elif f is Family.POWER:
            val = safe ** u.delta / u.delta
        elif f is Family.POLYNOMIAL_GOAL:
            val = safe - safe ** u.poly_delta
        else:
            val = np.where(safe >= u.alpha, 1.0, 0.0)
    return np.where(inside, val, -np.inf)


@dataclass(frozen=True, eq=False)
class ClaimFunction:
    """
    z U(x) − λ x 의 점별 최대화 함수 F(z, λ) 와 보정된 승수

    - lam: 보정 후 λ_J
    - growth: 인증 후 (C, c0)
    """
    spec: UtilitySpec
    lam: Optional[float] = None
    growth: Optional[Tuple[float, float]] = None

    @property
    def family(self) -> Family:
        return self.spec.family

    @property
    def calibrated(self) -> bool:
        return self.lam is not None

    def with_lambda(self, lam: float) -> "ClaimFunction":
        return replace(self, lam=float(lam))

    def with_growth(self, C: float, c0: float) -> "ClaimFunction":
        return replace(self, growth=(float(C), float(c0)))

    def _lam(self, lam: Optional[float]) -> float:
        lam = self.lam if lam is None else lam
        if lam is None:
            raise BadParameters("claim function is not calibrated", payload="lambda")
        return float(lam)

    def evaluate(self, z, lam: Optional[float] = None) -> np.ndarray:
        """z > 0 에서 F(z, λ)"""
        lam = self._lam(lam)
        z = np.asarray(z, dtype=float)
        u = self.spec
        f = u.family
        if f is Family.LOG:
            return z / lam
        if f is Family.POWER:
            return (z / lam) ** u.exponent
        if f is Family.MEAN_VARIANCE:
            return (u.c - lam / z) / (2.0 * u.k)
        if f is Family.POLYNOMIAL_GOAL:
            return (1.0 - lam / z) ** u.l * u.poly_delta ** (-u.l)
        # F = α at the jump z = λα
        return np.where(z >= lam * u.alpha, u.alpha, 0.0)

    def __call__(self, z) -> np.ndarray:
        return self.evaluate(z)

    def piecewise(self, lam: Optional[float] = None) -> PiecewiseFunction:
        """가우스 구적용 구간별 함수 F(·, λ)"""
        lam = self._lam(lam)
        if self.family is Family.GOAL_ACHIEVING:
            alpha = self.spec.alpha
            return PiecewiseFunction(
                func=lambda z: np.where(z >= lam * alpha, alpha, 0.0),
                breakpoints=(lam * alpha,),
                levels=(0.0, alpha),
            )
        return PiecewiseFunction(func=lambda z: self.evaluate(z, lam))

    def utility_of_claim(self, lam: Optional[float] = None) -> PiecewiseFunction:
        """구간별 함수 z -> U(F(z, λ))"""
        lam = self._lam(lam)
        spec = self.spec
        if self.family is Family.GOAL_ACHIEVING:
            return PiecewiseFunction(
                func=lambda z: np.where(z >= lam * spec.alpha, 1.0, 0.0),
                breakpoints=(lam * spec.alpha,),
                levels=(0.0, 1.0),
            )
        return PiecewiseFunction(func=lambda z: utility_value(spec, self.evaluate(z, lam)))

    def power_terms(self, lam: Optional[float] = None) -> Optional[Tuple[float, Tuple[Tuple[float, float, float], ...]]]:
        """
        F 를 C0 + Σ C1 (z/λ')^ν 로 분해

        Returns:
            (C0, ((ν, C1, λ'), ...)), 유한 거듭제곱 합이 아니면 None
        """
        lam = self._lam(lam)
        u = self.spec
        f = u.family
        if f is Family.LOG:
            return 0.0, ((1.0, 1.0, lam),)
        if f is Family.POWER:
            return 0.0, ((u.exponent, 1.0, lam),)
        if f is Family.MEAN_VARIANCE:
            c0 = u.c / (2.0 * u.k)
            c1 = -lam / (2.0 * u.k)
            return c0, (((-1.0, c1, 1.0),) if c1 != 0 else ())
        if f is Family.POLYNOMIAL_GOAL:
            scale = u.poly_delta ** (-u.l)
            terms = tuple(
                (-float(j), scale * float(comb(u.l, j, exact=True)) * (-lam) ** j, 1.0)
                for j in range(1, u.l + 1)
            )
            return scale, tuple(t for t in terms if t[1] != 0)
        return None


def pointwise_maximizer(u: UtilitySpec) -> ClaimFunction:
    """계열의 보정 전 청구권 함수"""
    return ClaimFunction(spec=u)


def as_callable(cf) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(cf, ClaimFunction):
        return cf.evaluate
    if isinstance(cf, PiecewiseFunction):
        return cf.__call__
    if callable(cf):
        return lambda z: np.asarray(cf(np.asarray(z, dtype=float)), dtype=float)
    raise TypeError(f"not a claim function: {cf!r}")
