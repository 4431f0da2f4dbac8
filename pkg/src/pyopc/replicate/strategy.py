# src/pyopc/replicate/strategy.py
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from pyopc.compress import SubsetPolicy, policy_from_subsets, select_subset
from pyopc.errors import BadMixture, BadParameters
from pyopc.market import MarketParams, compute_metrics
from pyopc.numerics import QuadratureConfig
from pyopc.replicate.heat import (
    CompositeHeatSolution,
    HeatSolution,
    PowerHeatSolution,
    closed_form_H,
    solve_heat,
)
from pyopc.simulate import PathEnsemble, ScenarioMixture, as_mixture
from pyopc.utility import ClaimFunction, Family, UtilitySpec, calibrate

logger = logging.getLogger(__name__)

MarketLike = Union[MarketParams, ScenarioMixture]


class StrategyKind(str, Enum):
    PDE_FEEDBACK = "pde_feedback"
    POWER_FEEDBACK = "power_feedback"
    TRIVIAL = "trivial"


@dataclass(frozen=True, eq=False)
class Strategy:
    """
    주식 포지션의 피드백 규칙

    - theta: (S, K, n) 규칙이 따르는 밀도 Z_f 의 인자
    - direction: (S, K, n) 포지션 방향 Q ã (압축 시 Q_I P_I ã)
    - PdeFeedback: π = B ∂H/∂x(Z_f, τ_f) Z_f d
    - PowerFeedback: π = B Σ ν_j X̃_j d, X̃ = C0 + Σ X̃_j
    - Trivial: π ≡ 0
    ε > 0 이면 t >= T − ε 에서 포지션은 0
    """
    kind: StrategyKind
    grid: np.ndarray
    theta: np.ndarray
    direction: np.ndarray
    epsilon: float = 0.0
    heat: Optional[HeatSolution] = None
    c0: float = 0.0
    exponents: Tuple[float, ...] = ()
    term_values: Tuple[float, ...] = ()
    domain_lower: Optional[float] = None
    label: str = "full"

    @property
    def is_trivial(self) -> bool:
        return self.kind is StrategyKind.TRIVIAL

    @property
    def is_power(self) -> bool:
        return self.kind is StrategyKind.POWER_FEEDBACK

    @property
    def n(self) -> int:
        return int(self.direction.shape[-1])

    @property
    def scenarios(self) -> int:
        return int(self.direction.shape[0])

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def risk(self) -> np.ndarray:
        """시나리오별 ∫|θ_f|² dt, (S,)"""
        sq = np.einsum("ski,ski->sk", self.theta, self.theta)
        return sq @ np.diff(self.grid)

    def remaining_variance(self, t: float, scenario: int = 0) -> float:
        sq = np.einsum("ki,ki->k", self.theta[scenario], self.theta[scenario])
        cum = np.concatenate([[0.0], np.cumsum(sq * np.diff(self.grid))])
        return float(max(cum[-1] - np.interp(t, self.grid, cum), 0.0))

    def direction_table(self, scenarios: int) -> np.ndarray:
        if self.scenarios != scenarios:
            raise ValueError(f"strategy has {self.scenarios} scenario(s), ensemble has {scenarios}")
        return self.direction

    def check_ensemble(self, ensemble: PathEnsemble) -> None:
        grid = ensemble.mixture.grid
        if ensemble.n != self.n:
            raise ValueError(f"strategy trades {self.n} stocks, ensemble has {ensemble.n}")
        if ensemble.mixture.size != self.scenarios:
            raise ValueError(f"strategy has {self.scenarios} scenario(s), ensemble has {ensemble.mixture.size}")
        if grid.shape != self.grid.shape or np.any(grid != self.grid):
            raise ValueError("strategy and ensemble grids differ")
        if self.epsilon > 0 and not np.any(np.isclose(ensemble.times, self.horizon - self.epsilon, rtol=0, atol=1e-14)):
            raise ValueError("ensemble grid does not contain T - epsilon; simulate with the same cutoff")

    def initial_weights(self, x0: float) -> Tuple[float, ...]:
        """거듭제곱 항의 초기값 (합은 x0 − C0)"""
        if len(self.term_values) <= 1:
            return (float(x0) - self.c0,)
        total = float(np.sum(self.term_values))
        scale = (float(x0) - self.c0) / total if total != 0 else 1.0
        return tuple(scale * v for v in self.term_values)

    def position(self, t: float, z: float = 1.0, *, wealth: Optional[float] = None,
                 bank: float = 1.0, scenario: int = 0, term_wealth: Optional[Tuple[float, ...]] = None) -> np.ndarray:
        """
        경로 하나의 π(t)

        Args:
            z: PdeFeedback 용 Z_f(t)
            wealth: 단일 항 PowerFeedback 용 X̃(t)
            term_wealth: 다항 PowerFeedback 용 항별 X̃_j(t)
            bank: B(t)
        """
        if self.is_trivial or (self.epsilon > 0 and t >= self.horizon - self.epsilon):
            return np.zeros(self.n)
        k = int(np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 2))
        d = self.direction[scenario, k]
        if self.is_power:
            if term_wealth is None:
                if wealth is None:
                    raise BadParameters("power feedback needs the current wealth", payload="wealth")
                term_wealth = (wealth - self.c0,) if len(self.exponents) == 1 else None
            if term_wealth is None:
                raise BadParameters("multi-term power feedback needs per-term wealth", payload="term_wealth")
            beta = float(np.dot(self.exponents, term_wealth))
            return bank * beta * d
        s = self.remaining_variance(t, scenario)
        if s <= 0:
            return np.zeros(self.n)
        beta = float(self.heat.delta_at(np.array([z]), s)[0]) * z
        return bank * beta * d

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"kind": self.kind.value, "label": self.label, "epsilon": self.epsilon}
        if self.is_power:
            d["c0"] = self.c0
            d["exponents"] = list(self.exponents)
        return d


# ------------ assembly ------------
def _common_risk(theta: np.ndarray, grid: np.ndarray) -> np.ndarray:
    sq = np.einsum("ski,ski->sk", theta, theta)
    return sq @ np.diff(grid)


def _assemble(
    H: HeatSolution,
    grid: np.ndarray,
    theta: np.ndarray,
    direction: np.ndarray,
    epsilon: float,
    *,
    prefer_pde: bool,
    domain_lower: Optional[float],
    label: str,
) -> Strategy:
    T = float(grid[-1])
    if not 0.0 <= epsilon < T:
        raise BadParameters(f"epsilon must lie in [0, {T})", payload="epsilon")
    for arr in (theta, direction):
        arr.setflags(write=False)
    base = dict(grid=grid, theta=theta, direction=direction, epsilon=float(epsilon),
                domain_lower=domain_lower, label=label)

    risks = _common_risk(theta, grid)
    if np.all(risks == 0.0):
        return Strategy(kind=StrategyKind.TRIVIAL, **base)
    common = bool(np.allclose(risks, risks[0], rtol=1e-12, atol=0.0))

    terms: Optional[Tuple[PowerHeatSolution, ...]] = None
    c0 = 0.0
    if isinstance(H, PowerHeatSolution):
        terms, c0 = (H,), H.c0
    elif isinstance(H, CompositeHeatSolution):
        terms, c0 = H.terms, H.constant
        if not terms:
            return Strategy(kind=StrategyKind.TRIVIAL, **base)

    if terms is None or len(terms) > 1 or prefer_pde:
        if not common:
            raise BadMixture("this strategy needs the same R in every scenario", payload=risks.tolist())
        if not np.isclose(H.J, risks[0], rtol=1e-9, atol=1e-14):
            raise BadParameters(
                f"heat solution built for J = {H.J!r}, strategy risk is {risks[0]!r}", payload="heat",
            )

    if terms is not None and not prefer_pde:
        values = tuple(float(t.value_at(np.array([1.0]), risks[0])[0]) for t in terms)
        return Strategy(
            kind=StrategyKind.POWER_FEEDBACK, heat=H, c0=float(c0),
            exponents=tuple(t.nu for t in terms), term_values=values, **base,
        )
    return Strategy(kind=StrategyKind.PDE_FEEDBACK, heat=H, **base)


def build_strategy(H: HeatSolution, market: MarketLike, epsilon: float = 0.0, *,
                   prefer_pde: bool = False, domain_lower: Optional[float] = None) -> Strategy:
    """
    전체 시장에서 H 에 해당하는 청구권의 복제 전략

    거듭제곱형 H 는 PowerFeedback (`prefer_pde` 이면 PdeFeedback), R = 0 이면 Trivial
    """
    mixture = as_mixture(market)
    metrics = [compute_metrics(p) for p in mixture.scenarios]
    theta = np.stack([m.theta for m in metrics])
    direction = np.stack([
        np.einsum("kij,kj->ki", m.Q, p.excess_drift) for m, p in zip(metrics, mixture.scenarios)
    ])
    strategy = _assemble(H, mixture.grid, theta, direction, epsilon,
                         prefer_pde=prefer_pde, domain_lower=domain_lower, label="full")
    logger.info("built %s strategy (epsilon=%g)", strategy.kind.value, strategy.epsilon)
    return strategy


def build_compressed_strategy(H: HeatSolution, subset: SubsetPolicy, market: MarketLike, epsilon: float = 0.0, *,
                              prefer_pde: bool = False, domain_lower: Optional[float] = None) -> Strategy:
    """
    Î-시장 전략: 밀도 Z_Î, 시간 변환 τ_Î, 방향 Q_Î P_Î ã
    Î 에 속한 주식만 포지션을 가짐
    """
    mixture = as_mixture(market)
    policies = [policy_from_subsets(p, subset.subsets) for p in mixture.scenarios]
    theta = np.stack([np.array(pol.theta) for pol in policies])
    direction = np.stack([np.array(pol.direction) for pol in policies])
    strategy = _assemble(H, mixture.grid, theta, direction, epsilon,
                         prefer_pde=prefer_pde, domain_lower=domain_lower, label=subset.label)
    logger.info("built compressed %s strategy on %s", strategy.kind.value, subset.label)
    return strategy


# ------------ claims ------------
def claim_heat(claim: ClaimFunction, rbar: float, horizon: float,
               quad: QuadratureConfig = QuadratureConfig()) -> HeatSolution:
    """
    거듭제곱형 청구권은 닫힌 형태, 다항 목표는 거듭제곱 항의 합, 그 외는 커널 구적
    """
    terms = claim.power_terms()
    if terms is None:
        return solve_heat(claim.piecewise(), rbar, horizon, quad, growth=claim.growth)
    c0, parts = terms
    if len(parts) == 1 and claim.family is not Family.POLYNOMIAL_GOAL:
        nu, c1, lam = parts[0]
        return closed_form_H(nu, c0, c1, lam, rbar, horizon)
    return CompositeHeatSolution(
        constant=float(c0),
        terms=tuple(closed_form_H(nu, 0.0, c1, lam, rbar, horizon) for nu, c1, lam in parts),
        rbar=float(rbar),
        horizon=float(horizon),
    )


def default_epsilon(claim: ClaimFunction, horizon: float) -> float:
    """불연속 청구권이면 1e-3 T, 아니면 0"""
    return 1e-3 * horizon if claim.power_terms() is None else 0.0


@dataclass(frozen=True, eq=False)
class OptimalPlan:
    """
    보정된 청구권(시나리오별), 열방정식 해, 전략
    """
    utility: UtilitySpec
    claims: Tuple[ClaimFunction, ...]
    risks: Tuple[float, ...]
    heat: HeatSolution
    strategy: Strategy
    subset: Optional[SubsetPolicy] = None

    @property
    def claim(self) -> ClaimFunction:
        return self.claims[0]

    @property
    def R(self) -> float:
        return self.risks[0]


def _plan(u: UtilitySpec, grid: np.ndarray, risks: np.ndarray, x0: float, quad: QuadratureConfig,
          epsilon: Optional[float]) -> Tuple[Tuple[ClaimFunction, ...], HeatSolution, float]:
    T = float(grid[-1])
    claims = tuple(calibrate(u, x0, float(R), quad) for R in risks)
    heat = claim_heat(claims[0], float(risks[0]) / T, T, quad)
    eps = default_epsilon(claims[0], T) if epsilon is None else float(epsilon)
    return claims, heat, eps


def optimal_strategy(u: UtilitySpec, market: MarketLike, x0: Optional[float] = None,
                     quad: QuadratureConfig = QuadratureConfig(), epsilon: Optional[float] = None,
                     *, prefer_pde: bool = False) -> OptimalPlan:
    """λ_J 보정 → H 구성 → 전체 시장 최적 전략"""
    mixture = as_mixture(market)
    x0 = mixture.x0 if x0 is None else float(x0)
    risks = np.array([compute_metrics(p).R for p in mixture.scenarios])
    claims, heat, eps = _plan(u, mixture.grid, risks, x0, quad, epsilon)
    strategy = build_strategy(heat, mixture, eps, prefer_pde=prefer_pde, domain_lower=u.domain_lower)
    return OptimalPlan(utility=u, claims=claims, risks=tuple(float(r) for r in risks), heat=heat, strategy=strategy)


def optimal_compressed_strategy(u: UtilitySpec, params: MarketLike, subset: Union[SubsetPolicy, int, Tuple[int, ...]],
                                x0: Optional[float] = None, quad: QuadratureConfig = QuadratureConfig(),
                                epsilon: Optional[float] = None, *, prefer_pde: bool = False) -> OptimalPlan:
    """
    부분집합 정책으로 제한한 최적 전략

    Args:
        subset: SubsetPolicy, 0 기준 부분집합, 또는 m (argmax 부분집합 선택)
    """
    mixture = as_mixture(params)
    x0 = mixture.x0 if x0 is None else float(x0)
    if isinstance(subset, (int, np.integer)):
        if mixture.size != 1:
            raise BadMixture("subset selection by m needs deterministic coefficients", payload="subset")
        subset = select_subset(mixture.scenarios[0], int(subset))
    elif not isinstance(subset, SubsetPolicy):
        subset = policy_from_subsets(mixture.scenarios[0], tuple(subset))
    risks = np.array([policy_from_subsets(p, subset.subsets).R for p in mixture.scenarios])
    claims, heat, eps = _plan(u, mixture.grid, risks, x0, quad, epsilon)
    strategy = build_compressed_strategy(heat, subset, mixture, eps, prefer_pde=prefer_pde,
                                         domain_lower=u.domain_lower)
    return OptimalPlan(utility=u, claims=claims, risks=tuple(float(r) for r in risks), heat=heat,
                       strategy=strategy, subset=subset)
