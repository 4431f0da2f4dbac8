# src/pyopc/simulate/engine.py
"""
상태가격 밀도, 할인 주가, 전략 기반 부의 정확한 로그 증분 몬테카를로
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING, List, Optional, Tuple, Union

import numpy as np

from pyopc.errors import BadParameters
from pyopc.market import MarketParams, compute_metrics
from pyopc.numerics import BlockStreams, iter_blocks
from pyopc.simulate.types import (
    DomainExit,
    Measure,
    PathEnsemble,
    ScenarioMixture,
    SimConfig,
    WealthPaths,
)

if TYPE_CHECKING:
    from pyopc.replicate.strategy import Strategy

logger = logging.getLogger(__name__)

_Block = Tuple[np.ndarray, np.ndarray, np.ndarray, Optional[np.ndarray]]


def as_mixture(market: Union[MarketParams, ScenarioMixture]) -> ScenarioMixture:
    if isinstance(market, ScenarioMixture):
        return market
    return ScenarioMixture.single(market)


def fine_grid(grid: np.ndarray, steps: int, epsilon: float = 0.0, cutoff_steps: int = 0) -> np.ndarray:
    """
    구간당 균등 `steps` 점, ε > 0 이면 T − ε 추가

    ε > 0, cutoff_steps > 0 이면 T − ε 쪽으로 조밀한 `cutoff_steps` 점도 포함:
    만기까지 남은 시간 u = T − t 를 u^(1/4) 기준 T 에서 ε 까지 균등 배치하여,
    PDE 델타가 가팔라지는 구간에서 스텝 길이가 u^(3/4) 로 줄어듦
    """
    pieces = [np.linspace(grid[k], grid[k + 1], steps + 1)[:-1] for k in range(grid.size - 1)]
    times = np.concatenate(pieces + [grid[-1:]])
    if epsilon > 0:
        T = float(grid[-1])
        extra = np.array([T - epsilon])
        if cutoff_steps > 0:
            q = np.linspace(epsilon ** 0.25, (T - float(grid[0])) ** 0.25, cutoff_steps + 1)[1:-1]
            extra = np.concatenate([T - q ** 4, extra])
        times = np.union1d(times, extra)
    return times


def log_density_increments(theta: np.ndarray, dw_star: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """경로/스텝별 θ·dw_* − ½|θ|² dt"""
    return (np.einsum("pmi,pmi->pm", theta, dw_star)
            - 0.5 * np.einsum("pmi,pmi->pm", theta, theta) * dt[None, :])


def _cumulate(increments: np.ndarray) -> np.ndarray:
    out = np.zeros((increments.shape[0], increments.shape[1] + 1) + increments.shape[2:])
    np.cumsum(increments, axis=1, out=out[:, 1:])
    return out


# ------------ ensemble ------------
def simulate_ensemble(market: Union[MarketParams, ScenarioMixture], cfg: SimConfig) -> PathEnsemble:
    """
    cfg.measure 아래 세밀 격자에서 N 개 경로 시뮬레이션

    경로 블록마다 고유 하위 스트림을 쓰므로 cfg.threads 와 무관하게 비트 단위 동일
    """
    mixture = as_mixture(market)
    cfg.check_horizon(mixture.horizon)
    metrics = tuple(compute_metrics(p) for p in mixture.scenarios)
    times = fine_grid(mixture.grid, cfg.steps, cfg.cutoff_epsilon, cfg.cutoff_steps)
    dt = np.diff(times)
    interval = np.clip(np.searchsorted(mixture.grid, times[:-1], side="right") - 1, 0, mixture.grid.size - 2)

    theta_tab = np.stack([m.theta for m in metrics])
    vol_tab = np.stack([p.vol for p in mixture.scenarios])
    half_var_tab = 0.5 * np.stack([np.einsum("kii->ki", m.V) for m in metrics])
    log_s0 = np.stack([np.log(p.s0) for p in mixture.scenarios])

    def run(bs: BlockStreams) -> _Block:
        scen = bs.scenario.choice(mixture.size, size=bs.size, p=mixture.probabilities)
        inc = bs.gauss.standard_normal((bs.size, dt.size, mixture.n)) * np.sqrt(dt)[None, :, None]
        theta = theta_tab[scen][:, interval, :]
        if cfg.measure is Measure.MARTINGALE:
            dw_star = inc
        else:
            dw_star = inc + theta * dt[None, :, None]
        log_z = _cumulate(log_density_increments(theta, dw_star, dt))

        log_prices = None
        if cfg.store_prices:
            dlog_s = np.empty_like(dw_star)
            for s in range(mixture.size):
                idx = scen == s
                if not np.any(idx):
                    continue
                dlog_s[idx] = (np.einsum("mij,pmj->pmi", vol_tab[s][interval], dw_star[idx])
                               - half_var_tab[s][interval][None, :, :] * dt[None, :, None])
            log_prices = _cumulate(dlog_s) + log_s0[scen][:, None, :]
        return scen, inc, log_z, log_prices

    blocks = list(iter_blocks(cfg.seed, cfg.stream, cfg.paths))
    if cfg.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results: List[_Block] = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]

    ensemble = PathEnsemble(
        times=times,
        interval=interval,
        increments=np.concatenate([r[1] for r in results]),
        log_z=np.concatenate([r[2] for r in results]),
        scenario=np.concatenate([r[0] for r in results]),
        mixture=mixture,
        metrics=metrics,
        config=cfg,
        log_prices=np.concatenate([r[3] for r in results]) if cfg.store_prices else None,
    )
    logger.info(
        "simulated %d paths x %d steps under %s measure (%d scenario(s))",
        ensemble.paths, ensemble.steps, cfg.measure.value, mixture.size,
    )
    return ensemble


def density(ensemble: PathEnsemble, theta_factor: np.ndarray) -> np.ndarray:
    """
    앙상블 잡음으로 임의의 인자 θ_f 에 대한 log Z_f 계산

    Args:
        theta_factor: 구간별 (K, n) 또는 시나리오/구간별 (S, K, n) 인자

    Returns:
        log Z_f(0) = 0 인 (N, M + 1) 배열
    """
    table = _scenario_table(theta_factor, ensemble.mixture.size)
    theta = table[ensemble.scenario][:, ensemble.interval, :]
    return _cumulate(log_density_increments(theta, ensemble.martingale_increments(), ensemble.dt))


def factor_variance(ensemble: PathEnsemble, theta_factor: np.ndarray) -> np.ndarray:
    """시나리오별 앙상블 시점의 ∫_0^t |θ_f|² ds, (S, M + 1)"""
    table = _scenario_table(theta_factor, ensemble.mixture.size)
    grid = ensemble.mixture.grid
    sq = np.einsum("ski,ski->sk", table, table)
    cum = np.concatenate([np.zeros((sq.shape[0], 1)), np.cumsum(sq * np.diff(grid)[None, :], axis=1)], axis=1)
    return np.stack([np.interp(ensemble.times, grid, c) for c in cum])


def _scenario_table(theta_factor: np.ndarray, scenarios: int) -> np.ndarray:
    table = np.asarray(theta_factor, dtype=float)
    if table.ndim == 2:
        table = np.broadcast_to(table, (scenarios,) + table.shape)
    if table.shape[0] != scenarios:
        raise ValueError(f"factor table has {table.shape[0]} scenario(s), ensemble has {scenarios}")
    return table


# ------------ wealth ------------
def evolve_wealth(strategy: "Strategy", ensemble: PathEnsemble, x0: float) -> WealthPaths:
    """
    앙상블 자체 증분 위에서 `strategy` 로 정규화 부 X̃ 를 진행

    - PowerFeedback: X̃ − C0 는 밀도 증분의 정확한 지수
    - PdeFeedback: Z_f-델타 ∂H/∂x 를 스텝 동안 유지
    - Trivial: X̃ ≡ x0
    t ≥ T − ε 에서 시작하는 스텝의 포지션은 0
    """
    strategy.check_ensemble(ensemble)
    times = ensemble.times
    N, M = ensemble.paths, ensemble.steps
    cutoff = ensemble.horizon - strategy.epsilon
    active = times[:-1] < cutoff if strategy.epsilon > 0 else np.ones(M, dtype=bool)
    # steps at or after T − ε hold the state of the cutoff index
    stop = int(np.argmin(active)) if not active.all() else M
    hold = np.minimum(np.arange(M + 1), stop)

    values = np.full((N, M + 1), float(x0))
    beta = np.zeros((N, M))

    if strategy.is_trivial:
        pass
    elif strategy.is_power:
        log_zf = density(ensemble, strategy.theta)[:, hold]
        var_f = factor_variance(ensemble, strategy.theta)[ensemble.scenario][:, hold]
        weights = strategy.initial_weights(x0)
        values = np.full((N, M + 1), strategy.c0)
        for (nu, w) in zip(strategy.exponents, weights):
            y = w * np.exp(nu * log_zf + 0.5 * nu * (1.0 - nu) * var_f)
            values = values + y
            beta = beta + nu * y[:, :-1]
        beta[:, ~active] = 0.0
    else:
        z_f = np.exp(density(ensemble, strategy.theta))
        var_f = factor_variance(ensemble, strategy.theta)
        remaining = var_f[:, -1:] - var_f
        heat = strategy.heat
        for j in range(M):
            if not active[j]:
                values[:, j + 1] = values[:, j]
                continue
            delta = np.zeros(N)
            for s in range(ensemble.mixture.size):
                idx = ensemble.scenario == s
                if remaining[s, j] > 0 and np.any(idx):
                    delta[idx] = heat.delta_at(z_f[idx, j], remaining[s, j])
            beta[:, j] = delta * z_f[:, j]
            values[:, j + 1] = values[:, j] + delta * (z_f[:, j + 1] - z_f[:, j])

    exits = _domain_exits(values, times, strategy.domain_lower)
    if exits:
        logger.warning("%d of %d wealth paths left the utility domain", len(exits), N)
    return WealthPaths(values=values, beta=beta, direction=strategy.direction_table(ensemble.mixture.size), exits=exits)


def _domain_exits(values: np.ndarray, times: np.ndarray, lower: Optional[float]) -> Tuple[DomainExit, ...]:
    if lower is None:
        return ()
    below = values < lower
    rows = np.flatnonzero(below.any(axis=1))
    first = below[rows].argmax(axis=1)
    return tuple(
        DomainExit(path=int(p), time=float(times[j]), value=float(values[p, j]))
        for p, j in zip(rows, first)
    )


def moment_oracle(q: float, R: float) -> float:
    """결정적 θ 에 대한 E_* Z(T)^q = exp(q(q − 1)R/2)"""
    if R < 0:
        raise BadParameters("R must be nonnegative", payload="R")
    return float(np.exp(q * (q - 1.0) * R / 2.0))
