# src/pyopc/simulate/mixture.py
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from pyopc.errors import BadMixture
from pyopc.market import MarketParams
from pyopc.simulate.types import ScenarioMixture

logger = logging.getLogger(__name__)


def _on_grid(params: MarketParams, grid: np.ndarray) -> MarketParams:
    """같은 구간별 상수 계수를 더 세밀한 격자 위에서 표현"""
    k = np.clip(np.searchsorted(params.grid, grid[:-1], side="right") - 1, 0, params.intervals - 1)
    return MarketParams(
        grid=grid,
        rate=params.rate[k],
        drift=params.drift[k],
        vol=params.vol[k],
        s0=params.s0,
        x0=params.x0,
    )


def switching_mixture(
    base: MarketParams,
    sigma_alt,
    window: float,
    starts: Sequence[float],
    probabilities: Sequence[float],
) -> ScenarioMixture:
    """
    변동성 전환 시장: [s, s + window) 에서 σ 가 `sigma_alt` 로 바뀜
    시작점 s 는 잡음과 독립적으로 `starts` 에서 `probabilities` 에 따라 추출

    Args:
        base: 창 밖의 계수
        sigma_alt: 창 안의 (n, n) 변동성
        window: 창 길이, 0 < window <= T
        starts: 창 시작 후보, 각각 [0, T - window] 안
        probabilities: 시작점 분포

    Returns:
        기본 격자점과 창 끝점의 합집합 격자 위의 ScenarioMixture
    """
    T = base.horizon
    sigma_alt = np.asarray(sigma_alt, dtype=float).reshape(base.n, base.n)
    starts = [float(s) for s in starts]
    if not 0 < window <= T:
        raise BadMixture(f"window {window} must lie in (0, {T}]", payload="window")
    for i, s in enumerate(starts):
        if s < 0 or s + window > T + 1e-12:
            raise BadMixture(f"window start {s} leaves [0, {T}]", payload=f"starts[{i}]")

    points = set(base.grid.tolist())
    for s in starts:
        points.update((s, min(s + window, T)))
    grid = np.array(sorted(points))
    common = _on_grid(base, grid)

    scenarios = []
    for s in starts:
        vol = np.array(common.vol)
        inside = (grid[:-1] >= s) & (grid[:-1] < s + window)
        vol[inside] = sigma_alt
        scenarios.append(MarketParams(
            grid=grid, rate=common.rate, drift=common.drift, vol=vol, s0=common.s0, x0=common.x0,
        ))
    logger.debug("switching mixture: %d scenario(s) on %d intervals", len(scenarios), grid.size - 1)
    return ScenarioMixture(tuple(scenarios), np.asarray(probabilities, dtype=float))
