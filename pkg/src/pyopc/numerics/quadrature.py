# src/pyopc/numerics/quadrature.py
"""
로그정규 인자에 대한 구간별 함수의 가우스 기댓값

pyopc 의 모든 기댓값은 다음 형태

    E[ f(x * exp(mean + sd * u)) * u**moment ],   u ~ Normal(0, 1)

f 는 (0, inf) 에서 구간별 연속. 상수 구간은 정규분포 cdf/pdf 로 정확히 적분하고,
나머지 구간은 Gauss-Hermite(전 구간) 또는 Gauss-Legendre(유계 구간) 노드 사용
(둘 다 `truncation_sigmas` 에서 절단)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special
from scipy.stats import norm

logger = logging.getLogger(__name__)

_CHUNK = 4096


@dataclass(frozen=True)
class QuadratureConfig:
    """구적 노드 수와 절단 폭(표준편차 단위)"""
    nodes: int = 256
    truncation_sigmas: float = 10.0

    def __post_init__(self) -> None:
        if self.nodes < 2:
            raise ValueError("quadrature needs at least 2 nodes")
        if not self.truncation_sigmas > 0:
            raise ValueError("truncation_sigmas must be positive")


@dataclass(frozen=True)
class PiecewiseFunction:
    """
    `breakpoints`(양수, 순증가) 에서 불연속인 (0, inf) 위의 함수

    - levels: 구간마다 하나. 실수면 상수 구간으로 정확 적분, None 이면 `func` 평가
    - func 는 numpy 배열에 대해 벡터화되어 있어야 함
    """
    func: Callable[[np.ndarray], np.ndarray]
    breakpoints: Tuple[float, ...] = ()
    levels: Optional[Tuple[Optional[float], ...]] = None

    def __post_init__(self) -> None:
        b = np.asarray(self.breakpoints, dtype=float)
        if b.size and (np.any(b <= 0) or np.any(np.diff(b) <= 0)):
            raise ValueError("breakpoints must be positive and strictly increasing")
        if self.levels is not None and len(self.levels) != len(self.breakpoints) + 1:
            raise ValueError("levels needs one entry per piece")

    def piece_levels(self) -> Tuple[Optional[float], ...]:
        if self.levels is None:
            return (None,) * (len(self.breakpoints) + 1)
        return self.levels

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)


@lru_cache(maxsize=32)
def hermite_table(nodes: int, truncation: float) -> Tuple[np.ndarray, np.ndarray]:
    """N(0,1) 기준 정규화된 확률론자 Hermite 노드/가중치 (|u| <= truncation)"""
    u, w = special.roots_hermitenorm(nodes)
    w = w / np.sqrt(2.0 * np.pi)
    keep = np.abs(u) <= truncation
    u, w = u[keep].copy(), w[keep].copy()
    u.setflags(write=False)
    w.setflags(write=False)
    logger.debug("hermite table: %d of %d nodes inside +-%g", u.size, nodes, truncation)
    return u, w


@lru_cache(maxsize=32)
def legendre_table(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """[-1, 1] 위의 Gauss-Legendre 노드/가중치"""
    xi, w = special.roots_legendre(nodes)
    xi.setflags(write=False)
    w.setflags(write=False)
    return xi, w


def gaussian_expectation(
    f: PiecewiseFunction,
    x,
    mean: float,
    sd: float,
    quad: QuadratureConfig = QuadratureConfig(),
    *,
    moment: int = 0,
) -> np.ndarray:
    """
    x 의 각 원소에 대해 E[f(x e^{mean + sd u}) u^moment] (moment 는 0 또는 1)

    sd = 0 은 퇴화 분포: moment 0 이면 f(x e^mean), moment 1 이면 0
    """
    if moment not in (0, 1):
        raise ValueError("moment must be 0 or 1")
    x = np.asarray(x, dtype=float)
    shape = x.shape
    flat = x.reshape(-1)
    if sd == 0.0:
        out = f(flat * np.exp(mean)) if moment == 0 else np.zeros_like(flat)
        return np.asarray(out, dtype=float).reshape(shape)

    out = np.empty_like(flat)
    for start in range(0, flat.size, _CHUNK):
        xs = flat[start:start + _CHUNK]
        out[start:start + _CHUNK] = _expect_chunk(f, xs, mean, sd, quad, moment)
    return out.reshape(shape)


def _expect_chunk(f: PiecewiseFunction, xs: np.ndarray, mean: float, sd: float,
                  quad: QuadratureConfig, moment: int) -> np.ndarray:
    levels = f.piece_levels()
    if not f.breakpoints and levels[0] is None:
        u, w = hermite_table(quad.nodes, float(quad.truncation_sigmas))
        vals = f(xs[:, None] * np.exp(mean + sd * u)[None, :])
        weights = w * u if moment else w
        return vals @ weights

    # piece bounds in the standardized variable, one row per x
    log_x = np.log(xs)[:, None]
    b = np.log(np.asarray(f.breakpoints, dtype=float))[None, :]
    cuts = (b - log_x - mean) / sd
    inf = np.full((xs.size, 1), np.inf)
    lows = np.hstack([-inf, cuts])
    highs = np.hstack([cuts, inf])

    total = np.zeros(xs.size)
    for i, level in enumerate(levels):
        lo, hi = lows[:, i], highs[:, i]
        if level is not None:
            if level == 0.0:
                continue
            if moment == 0:
                total += level * (norm.cdf(hi) - norm.cdf(lo))
            else:
                total += level * (norm.pdf(lo) - norm.pdf(hi))
            continue
        total += _legendre_piece(f, xs, lo, hi, mean, sd, quad, moment)
    return total


def _legendre_piece(f: PiecewiseFunction, xs: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                    mean: float, sd: float, quad: QuadratureConfig, moment: int) -> np.ndarray:
    t = float(quad.truncation_sigmas)
    a = np.clip(lo, -t, t)
    b = np.clip(hi, -t, t)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    xi, w = legendre_table(quad.nodes)
    u = mid[:, None] + half[:, None] * xi[None, :]
    vals = f(xs[:, None] * np.exp(mean + sd * u)) * norm.pdf(u)
    if moment:
        vals = vals * u
    # empty pieces (a == b) contribute zero through half == 0
    return half * (vals @ w)


def lognormal_expectation(
    f: PiecewiseFunction,
    mean: float,
    var: float,
    quad: QuadratureConfig = QuadratureConfig(),
) -> float:
    """Y ~ Normal(mean, var) 일 때 E[f(e^Y)]"""
    if var < 0:
        raise ValueError("variance must be non-negative")
    return float(gaussian_expectation(f, np.array([1.0]), mean, float(np.sqrt(var)), quad)[0])

