# src/pyopc/verify/checks.py
"""
오라클 검증
확률적 검사는 표준오차 3배 이내면 통과, 결정적 검사는 각자 허용오차를 명시
"""
from __future__ import annotations

import logging
from dataclasses import replace
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from pyopc.market import MarketParams
from pyopc.numerics import PiecewiseFunction, QuadratureConfig
from pyopc.replicate import (
    OptimalPlan,
    Strategy,
    StrategyKind,
    claim_heat,
    goal_heat,
    optimal_compressed_strategy,
    optimal_strategy,
    solve_heat,
)
from pyopc.simulate import (
    Measure,
    PathEnsemble,
    SimConfig,
    WealthPaths,
    density,
    evolve_wealth,
    factor_variance,
    moment_oracle,
    simulate_ensemble,
)
from pyopc.utility import (
    BUDGET_TOLERANCE,
    ClaimFunction,
    Family,
    UtilitySpec,
    budget_value,
    expected_utility,
    utility_value,
)
from pyopc.verify.augment import SubsetLike, as_policy, augmented_market, iplus_alpha
from pyopc.verify.types import CheckReport, stopwatch

logger = logging.getLogger(__name__)

EXACT_TOLERANCE = 1e-10
HEAT_TOLERANCE = 1e-6
REPLICATION_RMS_TOLERANCE = 0.05


def _mean_se(values: np.ndarray) -> tuple:
    values = np.asarray(values, dtype=float)
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return float(np.mean(values)), se


def _log(report: CheckReport) -> CheckReport:
    if report.passed:
        logger.info("check %s passed: %.10g vs %.10g", report.name, report.estimate, report.target)
    else:
        logger.warning(
            "check %s FAILED: estimate %.10g, target %.10g, tolerance %.3g",
            report.name, report.estimate, report.target, report.tolerance,
        )
    return report


# ==================== martingale identities ====================

def check_martingale(ensemble: PathEnsemble, wealth: Optional[WealthPaths] = None,
                     x0: Optional[float] = None) -> List[CheckReport]:
    """
    단순 표본평균으로 E_* Z(T) = 1, wealth 가 있으면 E_* X̃(T) = x0 검사

    물리 측도 앙상블은 재가중하지 않으므로 실패함
    """
    reports = []
    with stopwatch() as clock:
        est, se = _mean_se(ensemble.z[:, -1])
    reports.append(_log(CheckReport.three_sigma(
        "martingale_z", 1.0, est, se, runtime=clock[0],
        details={"measure": ensemble.measure.value, "paths": ensemble.paths},
    )))
    if wealth is not None:
        x0 = ensemble.mixture.x0 if x0 is None else x0
        with stopwatch() as clock:
            est, se = _mean_se(wealth.terminal)
        reports.append(_log(CheckReport.three_sigma(
            "martingale_wealth", x0, est, se, runtime=clock[0],
            details={"measure": ensemble.measure.value, "paths": ensemble.paths},
        )))
    return reports


def _expected_risk(ensemble: PathEnsemble) -> float:
    risks = np.array([m.R for m in ensemble.metrics])
    return float(risks @ ensemble.mixture.probabilities)


def check_log_moment(ensemble: PathEnsemble) -> CheckReport:
    """2 E_* log Z(T) = −E R."""
    with stopwatch() as clock:
        est, se = _mean_se(2.0 * ensemble.log_z[:, -1])
    return _log(CheckReport.three_sigma("log_moment", -_expected_risk(ensemble), est, se, runtime=clock[0]))


def check_moments(ensemble: PathEnsemble, q_values: Sequence[float] = (-2.0, -1.0, 0.5, 2.0)) -> List[CheckReport]:
    """E_* Z(T)^q 대 exp(q(q−1)R/2) (시나리오 확률 가중)"""
    reports = []
    log_zt = ensemble.log_z[:, -1]
    probs = ensemble.mixture.probabilities
    for q in q_values:
        with stopwatch() as clock:
            est, se = _mean_se(np.exp(q * log_zt))
            target = float(sum(p * moment_oracle(q, m.R) for p, m in zip(probs, ensemble.metrics)))
        reports.append(_log(CheckReport.three_sigma(
            f"moment_q={q:g}", target, est, se, runtime=clock[0], details={"q": float(q)},
        )))
    return reports


# ==================== deterministic identities ====================

def check_budget(u: UtilitySpec, claim: ClaimFunction, R: float, x0: float,
                 quad: QuadratureConfig = QuadratureConfig()) -> CheckReport:
    """구적으로 E_* F(Z(T), λ_J) = x0 검사"""
    with stopwatch() as clock:
        est = budget_value(claim, R, quad)
    return _log(CheckReport.compare(
        f"budget_{u.family.value}", x0, est, BUDGET_TOLERANCE * max(1.0, abs(x0)),
        runtime=clock[0], details={"lambda": claim.lam, "R": float(R)},
    ))


def check_heat_closed_form(claim: ClaimFunction, rbar: float, horizon: float,
                           quad: QuadratureConfig = QuadratureConfig(),
                           x_grid: Optional[np.ndarray] = None) -> CheckReport:
    """
    같은 청구권의 커널 구적 대 닫힌 형태:
    x 와 t ∈ {0, T/2, 0.9T} 에 대한 sup |H_quad − H_closed| / (1 + |H_closed|)
    """
    x = np.logspace(-1.0, 1.0, 41) if x_grid is None else np.asarray(x_grid, dtype=float)
    with stopwatch() as clock:
        quadrature = solve_heat(claim.piecewise(), rbar, horizon, quad)
        if claim.family is Family.GOAL_ACHIEVING:
            closed = goal_heat(claim.spec.alpha, claim.lam, rbar, horizon)
        else:
            closed = claim_heat(claim, rbar, horizon, quad)
        worst = 0.0
        for t in (0.0, 0.5 * horizon, 0.9 * horizon):
            hc = closed.value(x, t)
            hq = quadrature.value(x, t)
            worst = max(worst, float(np.max(np.abs(hq - hc) / (1.0 + np.abs(hc)))))
    return _log(CheckReport.compare(
        f"heat_closed_form_{claim.family.value}", 0.0, worst, HEAT_TOLERANCE,
        runtime=clock[0], details={"nodes": quad.nodes, "truncation_sigmas": quad.truncation_sigmas},
    ))


# ==================== replication ====================

ClaimLike = Union[ClaimFunction, PiecewiseFunction]


def _claim_values(claim: Union[ClaimLike, Sequence[ClaimLike]], z: np.ndarray, scenario: np.ndarray) -> np.ndarray:
    """F(z), 시퀀스가 주어지면 시나리오별 청구권 적용"""
    if isinstance(claim, (ClaimFunction, PiecewiseFunction)):
        return np.asarray(claim(z), dtype=float)
    out = np.empty(z.size)
    for s, c in enumerate(claim):
        idx = scenario == s
        if np.any(idx):
            out[idx] = c(z[idx])
    return out


def check_replication(
    strategy: Strategy,
    claim: Union[ClaimLike, Sequence[ClaimLike]],
    ensemble: PathEnsemble,
    wealth: Optional[WealthPaths] = None,
    x0: Optional[float] = None,
    *,
    tolerance: float = REPLICATION_RMS_TOLERANCE,
) -> CheckReport:
    """
    만기 부 대 청구권

    - 부 피드백/trivial 전략, ε = 0: X̃(T) 대 F(Z_f(T)) 최대 상대오차, 허용오차 1e-10
    - pde 피드백, ε = 0: F(Z_f(T)) 대비 RMS 상대오차
    - ε > 0: X̃(T − ε) 대 H(Z_f(T − ε), τ_f(T − ε)) 의 RMS 상대 차이

    Args:
        claim: 청구권 하나, 또는 시나리오별 보정된 청구권
    """
    x0 = ensemble.mixture.x0 if x0 is None else x0
    with stopwatch() as clock:
        if wealth is None:
            wealth = evolve_wealth(strategy, ensemble, x0)
        log_zf = density(ensemble, strategy.theta)
        exact = strategy.epsilon == 0.0 and strategy.kind is not StrategyKind.PDE_FEEDBACK
        if strategy.epsilon == 0.0:
            j = ensemble.steps
            target = _claim_values(claim, np.exp(log_zf[:, j]), ensemble.scenario)
        else:
            j = int(np.argmin(np.abs(ensemble.times - (ensemble.horizon - strategy.epsilon))))
            var_f = factor_variance(ensemble, strategy.theta)
            remaining = var_f[:, -1] - var_f[:, j]
            z = np.exp(log_zf[:, j])
            target = np.empty(ensemble.paths)
            for s in range(ensemble.mixture.size):
                idx = ensemble.scenario == s
                if np.any(idx):
                    target[idx] = strategy.heat.value_at(z[idx], float(remaining[s]))
        gap = (wealth.values[:, j] - target) / np.maximum(np.abs(target), 1.0)
        if exact:
            estimate, tol, mode = float(np.max(np.abs(gap))), EXACT_TOLERANCE, "max"
        else:
            estimate, tol, mode = float(np.sqrt(np.mean(gap * gap))), tolerance, "rms"
    return _log(CheckReport.compare(
        "replication", 0.0, estimate, tol, runtime=clock[0],
        details={"kind": strategy.kind.value, "mode": mode, "time": float(ensemble.times[j]),
                 "label": strategy.label},
    ))


# ==================== utility ====================

def _utility_target(plan: OptimalPlan, probabilities: np.ndarray, quad: QuadratureConfig) -> float:
    return float(sum(
        p * expected_utility(plan.utility, claim=c, R=r, quad=quad).value
        for p, c, r in zip(probabilities, plan.claims, plan.risks)
    ))


def _physical_utility(plan: OptimalPlan, ensemble: PathEnsemble, wealth: WealthPaths) -> np.ndarray:
    """
    물리 측도로 가중한 경로별 U(X̃(T)), 정의역 이탈은 NaN
    목표 달성 부는 T − ε 에서 멈추므로 X̃ > α/2 를 성공으로 셈
    """
    u = plan.utility
    if u.family is Family.GOAL_ACHIEVING:
        values = (wealth.terminal > 0.5 * u.alpha).astype(float)
    else:
        values = utility_value(u, wealth.terminal)
    if ensemble.measure is Measure.MARTINGALE:
        values = values * ensemble.z[:, -1]
    values = np.where(wealth.exit_mask(), np.nan, values)
    return values


def check_expected_utility(plan: OptimalPlan, ensemble: PathEnsemble, wealth: Optional[WealthPaths] = None,
                           quad: QuadratureConfig = QuadratureConfig()) -> CheckReport:
    """몬테카를로 E U(X̃(T)) 대 최적 청구권의 구적 값"""
    x0 = ensemble.mixture.x0
    with stopwatch() as clock:
        if wealth is None:
            wealth = evolve_wealth(plan.strategy, ensemble, x0)
        weights = ensemble.z[:, -1] if ensemble.measure is Measure.MARTINGALE else None
        est = expected_utility(plan.utility, wealth.terminal, weights=weights, exclude=wealth.exit_mask())
        target = _utility_target(plan, ensemble.mixture.probabilities, quad)
    return _log(CheckReport.three_sigma(
        f"expected_utility_{plan.utility.family.value}", target, est.value, est.std_error,
        runtime=clock[0], details={"excluded": est.excluded, "label": plan.strategy.label},
    ))


def _physical_config(cfg: SimConfig, epsilon: float, stream: Optional[int] = None) -> SimConfig:
    return replace(cfg, measure=Measure.PHYSICAL, cutoff_epsilon=epsilon,
                   stream=cfg.stream if stream is None else stream)


def check_dominance_gap(u: UtilitySpec, params: MarketParams, I: SubsetLike, I_hat: SubsetLike,
                        cfg: SimConfig, quad: QuadratureConfig = QuadratureConfig()) -> CheckReport:
    """
    하나의 물리 앙상블(쌍체)에서 E U(X̃_Î(T)) − E U(X̃_I(T)) 를
    로그 효용이면 (R_Î − R_I)/2, 그 외는 구적 차이와 비교
    """
    policy, policy_hat = as_policy(params, I), as_policy(params, I_hat)
    with stopwatch() as clock:
        plan = optimal_compressed_strategy(u, params, policy, quad=quad)
        plan_hat = optimal_compressed_strategy(u, params, policy_hat, quad=quad)
        if policy.subsets == policy_hat.subsets:
            return _log(CheckReport.compare(
                "dominance_gap", 0.0, 0.0, 0.0, std_error=0.0,
                details={"I": policy.label, "I_hat": policy_hat.label, "strict": False},
            ))
        eps = max(plan.strategy.epsilon, plan_hat.strategy.epsilon)
        plan = optimal_compressed_strategy(u, params, policy, quad=quad, epsilon=eps)
        plan_hat = optimal_compressed_strategy(u, params, policy_hat, quad=quad, epsilon=eps)
        ensemble = simulate_ensemble(params, _physical_config(cfg, eps))
        w = evolve_wealth(plan.strategy, ensemble, params.x0)
        w_hat = evolve_wealth(plan_hat.strategy, ensemble, params.x0)
        diff = _physical_utility(plan_hat, ensemble, w_hat) - _physical_utility(plan, ensemble, w)
        diff = diff[np.isfinite(diff)]
        est, se = _mean_se(diff)
        if u.family is Family.LOG:
            target = 0.5 * (plan_hat.R - plan.R)
        else:
            probs = ensemble.mixture.probabilities
            target = _utility_target(plan_hat, probs, quad) - _utility_target(plan, probs, quad)
    return _log(CheckReport.three_sigma(
        "dominance_gap", target, est, se, runtime=clock[0],
        details={"I": policy.label, "I_hat": policy_hat.label, "strict": True, "paths": int(diff.size)},
    ))


def check_iplus_equality(u: UtilitySpec, params: MarketParams, I: SubsetLike, I_hat: SubsetLike,
                         cfg: SimConfig, quad: QuadratureConfig = QuadratureConfig()) -> List[CheckReport]:
    """
    독립 물리 앙상블에서 I⁺-시장 최적과 Î-시장 최적의 E U 비교,
    추가 주식의 포지션 방향 검사 포함
    """
    policy, policy_hat = as_policy(params, I), as_policy(params, I_hat)
    with stopwatch() as clock:
        alpha = iplus_alpha(params, policy, policy_hat)
        aug = augmented_market(params, policy, policy_hat)
        plan_hat = optimal_compressed_strategy(u, params, policy_hat, quad=quad)
        plan_plus = optimal_strategy(u, aug, quad=quad)
        eps = max(plan_hat.strategy.epsilon, plan_plus.strategy.epsilon)
        if eps != plan_hat.strategy.epsilon:
            plan_hat = optimal_compressed_strategy(u, params, policy_hat, quad=quad, epsilon=eps)
        if eps != plan_plus.strategy.epsilon:
            plan_plus = optimal_strategy(u, aug, quad=quad, epsilon=eps)

        ens_hat = simulate_ensemble(params, _physical_config(cfg, eps))
        ens_plus = simulate_ensemble(aug, _physical_config(cfg, eps, stream=cfg.stream + 1))
        u_hat = _physical_utility(plan_hat, ens_hat, evolve_wealth(plan_hat.strategy, ens_hat, params.x0))
        u_plus = _physical_utility(plan_plus, ens_plus, evolve_wealth(plan_plus.strategy, ens_plus, params.x0))
        m_hat, se_hat = _mean_se(u_hat[np.isfinite(u_hat)])
        m_plus, se_plus = _mean_se(u_plus[np.isfinite(u_plus)])
    combined = float(np.hypot(se_hat, se_plus))
    details = {"I": policy.label, "I_hat": policy_hat.label, "alpha": alpha,
               "utility_hat": m_hat, "utility_plus": m_plus}
    equality = _log(CheckReport.three_sigma(
        "iplus_equality", 0.0, m_plus - m_hat, combined, runtime=clock[0], details=details,
    ))

    n = params.n
    strategy = plan_plus.strategy
    extra = float(strategy.direction[0, 0, n])
    position = strategy.position(0.0, 1.0, wealth=params.x0, term_wealth=strategy.initial_weights(params.x0))
    nonzero = bool(position[n] != 0.0)
    position_check = CheckReport.compare(
        "iplus_extra_position", alpha, extra, EXACT_TOLERANCE * max(1.0, alpha),
        details={"alpha": alpha, "position_t0": float(position[n]), "nonzero": nonzero},
    )
    # the extra stock is traded iff Î strictly dominates I
    if nonzero != (alpha > 0.0):
        position_check = replace(position_check, passed=False)
    _log(position_check)
    return [equality, position_check]


# ==================== goal achieving ====================

GOAL_PROBABILITY_FLOOR = 0.01


def goal_probability(claim: ClaimFunction, R: float) -> float:
    """물리 측도 log Z(T) ~ Normal(R/2, R) 아래 P(Z(T) >= λα)"""
    threshold = np.log(claim.lam * claim.spec.alpha)
    if R == 0.0:
        return float(threshold <= 0.0)
    return float(norm.cdf(0.5 * np.sqrt(R) - threshold / np.sqrt(R)))


def check_goal_success(plan: OptimalPlan, ensemble: PathEnsemble, wealth: Optional[WealthPaths] = None) -> CheckReport:
    """
    물리 측도에서 X̃(T) > α/2 빈도 대 목표 확률
    ε 절단이 작은 편향을 남기므로 허용오차는 max(3 SE, 0.01)
    """
    if plan.utility.family is not Family.GOAL_ACHIEVING:
        raise ValueError("goal success applies to goal-achieving utility only")
    alpha = plan.utility.alpha
    with stopwatch() as clock:
        if wealth is None:
            wealth = evolve_wealth(plan.strategy, ensemble, ensemble.mixture.x0)
        hits = (wealth.terminal > 0.5 * alpha).astype(float)
        if ensemble.measure is Measure.MARTINGALE:
            hits = hits * ensemble.z[:, -1]
        est, se = _mean_se(hits)
        target = float(sum(
            p * goal_probability(c, r)
            for p, c, r in zip(ensemble.mixture.probabilities, plan.claims, plan.risks)
        ))
    return _log(CheckReport.compare(
        "goal_success", target, est, max(3.0 * se, GOAL_PROBABILITY_FLOOR), std_error=se,
        runtime=clock[0], details={"alpha": alpha, "epsilon": plan.strategy.epsilon},
    ))
