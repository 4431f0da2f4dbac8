# src/pyopc/utility/calibrate.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb
from scipy.stats import norm

from pyopc.errors import (
    BadParameters,
    CalibrationFailed,
    EmptySample,
    GoalWithZeroRisk,
    GrowthBoundUnsatisfiable,
)
from pyopc.numerics import PiecewiseFunction, QuadratureConfig, lognormal_expectation
from pyopc.utility.families import ClaimFunction, Family, UtilitySpec, as_callable, pointwise_maximizer, utility_value

logger = logging.getLogger(__name__)

BUDGET_TOLERANCE = 1e-8
GROWTH_GRID = np.logspace(-6.0, 6.0, 2401)
# largest c0 tried, as a fraction of 1/J; c0 must stay below 1/(2J)
GROWTH_EDGE = 0.4995


# ------------ budget ------------
def budget_value(cf: ClaimFunction, R: float, quad: QuadratureConfig = QuadratureConfig(),
                 lam: Optional[float] = None) -> float:
    """log Z(T) ~ Normal(−R/2, R) 일 때 E_* F(Z(T), λ)"""
    return lognormal_expectation(cf.piecewise(lam), -0.5 * R, R, quad)


def calibrate_lambda(u: UtilitySpec, x0: float, R: float,
                     quad: QuadratureConfig = QuadratureConfig()) -> float:
    """
    예산 제약 E_* F(Z(T), λ) = x0 을 만족하는 승수 λ_J

    Log, Power, MeanVariance, GoalAchieving 은 닫힌 형태, PolynomialGoal 은 구간 근 찾기
    모든 결과에 구적 예산 검사 수행
    """
    if R < 0 or not np.isfinite(R):
        raise BadParameters("R must be finite and >= 0", payload="R")
    u.check_x0(x0)
    f = u.family
    if f is Family.LOG:
        lam = 1.0 / x0
    elif f is Family.POWER:
        d = u.delta
        lam = x0 ** (d - 1.0) * np.exp(d / (1.0 - d) * R / 2.0)
    elif f is Family.MEAN_VARIANCE:
        lam = (u.c - 2.0 * u.k * x0) * np.exp(-R)
    elif f is Family.POLYNOMIAL_GOAL:
        lam = _polynomial_goal_root(u, x0, R)
    else:
        if R == 0:
            raise GoalWithZeroRisk("goal-achieving calibration needs R > 0", payload="R")
        lam = float(np.exp(np.sqrt(R) * norm.ppf(1.0 - x0 / u.alpha) - np.log(u.alpha) - R / 2.0))

    lam = float(lam)
    budget = budget_value(pointwise_maximizer(u), R, quad, lam)
    gap = abs(budget - x0)
    tol = BUDGET_TOLERANCE * max(1.0, abs(x0))
    if not gap <= tol:
        raise CalibrationFailed(
            f"budget check failed for {f.value}: E_* F = {budget!r}, x0 = {x0!r}",
            payload={"lambda": lam, "budget": budget, "x0": x0},
        )
    if gap > 0.1 * tol:
        logger.warning("budget check for %s within %.2g of tolerance", f.value, gap)
    logger.info("calibrated %s multiplier lambda=%.12g (R=%.6g)", f.value, lam, R)
    return lam


def _polynomial_goal_root(u: UtilitySpec, x0: float, R: float) -> float:
    # Σ_j C(l,j)(−λ)^j e^{j(j+1)R/2} = x0 δ^l; strictly increasing in −λ on λ < 0
    l = u.l
    coeff = np.array([comb(l, j, exact=True) * np.exp(j * (j + 1) * R / 2.0) for j in range(l + 1)])
    target = x0 * u.poly_delta ** l

    def g(lam: float) -> float:
        return float(np.sum(coeff * (-lam) ** np.arange(l + 1)) - target)

    bound = 1.0
    for _ in range(200):
        if g(-bound) > 0:
            break
        bound *= 2.0
    else:
        raise CalibrationFailed("polynomial-goal root not bracketed", payload={"bound": bound})
    if not g(0.0) < 0:
        raise CalibrationFailed("polynomial-goal budget has no negative root", payload={"x0": x0})
    return brentq(g, -bound, 0.0, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500)


def calibrate(u: UtilitySpec, x0: float, R: float, quad: QuadratureConfig = QuadratureConfig(),
              *, certify_growth: bool = True) -> ClaimFunction:
    """보정된 청구권 함수 (R > 0 이면 증가 한계도 인증)"""
    cf = pointwise_maximizer(u).with_lambda(calibrate_lambda(u, x0, R, quad))
    if certify_growth and R > 0:
        C, c0 = check_growth_bound(cf, R)
        cf = cf.with_growth(C, c0)
    return cf


# ------------ growth ------------
def check_growth_bound(cf: Union[ClaimFunction, PiecewiseFunction, Callable], J: float) -> Tuple[float, float]:
    """
    z ∈ [1e-6, 1e6] 에서 |F(z)| <= C z^{c0 log z}, c0 < 1/(2J) 인 상수 (C, c0)

    후보 c0 는 비율 |F| / z^{c0 log z} 가 격자 양 끝에서 여전히 증가하지 않을 때만 채택
    """
    if not J > 0:
        raise BadParameters("growth bound needs J > 0", payload="J")
    limit = 1.0 / (2.0 * J)
    if isinstance(cf, ClaimFunction) and cf.family is Family.GOAL_ACHIEVING:
        return float(cf.spec.alpha), min(1e-3, 1.0 / (4.0 * J))

    F = as_callable(cf)
    y = np.log(GROWTH_GRID)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.abs(F(GROWTH_GRID))
    for c0 in (0.25 / J, 0.45 / J, GROWTH_EDGE / J):
        with np.errstate(over="ignore", invalid="ignore"):
            log_ratio = np.log(values) - c0 * y * y
        if not np.all(np.isfinite(log_ratio[values > 0])):
            continue
        lr = np.where(values > 0, log_ratio, -np.inf)
        rising = lr[-1] > lr[-2] or lr[0] > lr[1]
        if rising:
            logger.debug("growth bound: c0=%.4g still rising at the grid ends", c0)
            continue
        C = float(np.exp(lr.max())) * (1.0 + 1e-9)
        return C, float(c0)
    raise GrowthBoundUnsatisfiable(
        f"no c0 < 1/(2J) = {limit:g} bounds F on the test grid", payload={"J": J},
    )


# ------------ expected utility ------------
@dataclass(frozen=True)
class UtilityEstimate:
    value: float
    std_error: float
    samples: int
    excluded: int = 0
    method: str = "monte_carlo"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "samples": self.samples,
            "excluded": self.excluded,
            "method": self.method,
        }


def expected_utility(
    u: UtilitySpec,
    samples=None,
    *,
    weights=None,
    exclude=None,
    claim: Optional[ClaimFunction] = None,
    R: Optional[float] = None,
    quad: QuadratureConfig = QuadratureConfig(),
) -> UtilityEstimate:
    """
    만기 부 표본에 대한 몬테카를로 E U(X̃(T)), 또는 물리 측도
    log Z(T) ~ Normal(+R/2, R) 아래 E U(F(Z(T), λ_J)) 의 구적

    Args:
        samples: 경로별 만기 부
        weights: 경로별 가중치 (Z(T) 를 주면 마팅게일 측도 표본을 P 로 변환)
        exclude: 제외할 경로 마스크 (예: 정의역 이탈)
        claim/R: 구적 값에 쓰는 보정된 청구권 함수와 위험
    """
    if samples is None:
        if claim is None or R is None:
            raise BadParameters("expected_utility needs samples or (claim, R)")
        value = lognormal_expectation(claim.utility_of_claim(), 0.5 * R, R, quad)
        return UtilityEstimate(value=value, std_error=0.0, samples=0, method="quadrature")

    x = np.asarray(samples, dtype=float).reshape(-1)
    keep = np.ones(x.size, dtype=bool) if exclude is None else ~np.asarray(exclude, dtype=bool)
    excluded = int(x.size - keep.sum())
    x = x[keep]
    if x.size == 0:
        raise EmptySample("no samples left for the utility estimate", payload={"excluded": excluded})
    y = utility_value(u, x)
    if weights is not None:
        y = y * np.asarray(weights, dtype=float).reshape(-1)[keep]
    se = float(np.std(y, ddof=1) / np.sqrt(y.size)) if y.size > 1 else 0.0
    if excluded:
        logger.warning("expected utility: %d path(s) excluded", excluded)
    return UtilityEstimate(value=float(np.mean(y)), std_error=se, samples=int(y.size), excluded=excluded)
