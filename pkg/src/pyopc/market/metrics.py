# src/pyopc/market/metrics.py
from __future__ import annotations

import logging

import numpy as np

from pyopc.errors import BadGrid, EllipticityViolated, NonFiniteCoefficient, NonPositivePrice, ValidationError
from pyopc.market.types import MarketParams, RiskMetrics

logger = logging.getLogger(__name__)

DEFAULT_C1 = 1e-6


def validate_market(params: MarketParams, c1: float = DEFAULT_C1) -> bool:
    """
    MarketParams 불변조건 검사 (첫 위반에서 예외)

    Args:
        params: 검사할 시장
        c1: 타원성 상수, σσᵀ 의 최소 고유값 하한 (양수)

    Returns:
        유효하면 True
    """
    if not c1 > 0:
        raise ValidationError(f"c1 must be positive, got {c1!r}", payload="c1")
    for name in ("grid", "rate", "drift", "vol", "s0"):
        arr = getattr(params, name)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteCoefficient(f"{name} has non-finite entries", payload=name)
    if not np.isfinite(params.x0):
        raise NonFiniteCoefficient("x0 is not finite", payload="x0")

    if params.grid[0] != 0.0:
        raise BadGrid("grid must start at 0", payload="grid[0]")
    steps = np.diff(params.grid)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        raise BadGrid(f"grid not strictly increasing at index {int(bad[0]) + 1}", payload=f"grid[{int(bad[0]) + 1}]")

    nonpos = np.flatnonzero(params.s0 <= 0)
    if nonpos.size:
        raise NonPositivePrice(f"s0[{int(nonpos[0])}] must be positive", payload=f"s0[{int(nonpos[0])}]")

    V = np.einsum("kij,klj->kil", params.vol, params.vol)
    eig = np.linalg.eigvalsh(V)[:, 0]
    low = np.flatnonzero(eig < c1)
    if low.size:
        k = int(low[0])
        raise EllipticityViolated(
            f"sigma sigma^T on interval {k} has eigenvalue {eig[k]:.3e} < c1 = {c1:g}",
            payload={"interval": k, "min_eigenvalue": float(eig[k])},
        )
    return True


def compute_metrics(params: MarketParams) -> RiskMetrics:
    """구간별 V, Q, θ 와 누적 위험 R, 시간 변환 계산"""
    V = np.einsum("kij,klj->kil", params.vol, params.vol)
    Q = np.linalg.inv(V)
    excess = params.excess_drift
    theta = np.linalg.solve(params.vol, excess[..., None])[..., 0]
    theta_sq = np.einsum("ki,ki->k", theta, theta)
    cumulative = np.concatenate([[0.0], np.cumsum(theta_sq * params.dt)])
    R = float(cumulative[-1])
    Rbar = R / params.horizon
    logger.debug("metrics: |theta|^2 per interval %s, R=%.6g", theta_sq.tolist(), R)
    for arr in (V, Q, theta, theta_sq, cumulative):
        arr.setflags(write=False)
    return RiskMetrics(
        grid=params.grid,
        V=V,
        Q=Q,
        theta=theta,
        theta_sq=theta_sq,
        cumulative=cumulative,
        R=R,
        Rbar=Rbar,
    )


def refine(params: MarketParams, factor: int) -> MarketParams:
    """각 구간을 같은 계수의 `factor` 등분으로 분할"""
    if factor < 1:
        raise BadGrid("refinement factor must be >= 1", payload="factor")
    g = params.grid
    pieces = [np.linspace(g[k], g[k + 1], factor + 1)[:-1] for k in range(params.intervals)]
    grid = np.concatenate(pieces + [g[-1:]])
    return MarketParams(
        grid=grid,
        rate=np.repeat(params.rate, factor),
        drift=np.repeat(params.drift, factor, axis=0),
        vol=np.repeat(params.vol, factor, axis=0),
        s0=params.s0,
        x0=params.x0,
    )


def bank_account(params: MarketParams, t) -> np.ndarray:
    """은행 계좌 B(t) = exp(∫_0^t r ds), B(0) = 1"""
    cum = np.concatenate([[0.0], np.cumsum(params.rate * params.dt)])
    return np.exp(np.interp(t, params.grid, cum))


def discount(params: MarketParams, t) -> np.ndarray:
    """할인 인자 p(t) = 1 / B(t)"""
    return 1.0 / bank_account(params, t)
