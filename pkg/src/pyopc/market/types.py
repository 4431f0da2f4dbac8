# src/pyopc/market/types.py
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence

import numpy as np

from pyopc.errors import BadGrid, ValidationError


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must have {ndim} dimension(s), got shape {arr.shape}", payload=name)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MarketParams:
    """
    시간 격자 위의 구간별 상수 시장 계수

    - grid: 0 = t_0 < ... < t_K = T
    - rate: (K,) 구간별 은행 이자율
    - drift: (K, n) 구간별 주가 상승률
    - vol: (K, n, n) 구간별 변동성 행렬, i 행이 주식 i 를 움직임
    - s0: (n,) 초기 주가, x0: 초기 부; B(0) = 1
    """
    grid: np.ndarray
    rate: np.ndarray
    drift: np.ndarray
    vol: np.ndarray
    s0: np.ndarray
    x0: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid", _frozen(self.grid, 1, "grid"))
        object.__setattr__(self, "rate", _frozen(self.rate, 1, "rate"))
        object.__setattr__(self, "drift", _frozen(self.drift, 2, "drift"))
        object.__setattr__(self, "vol", _frozen(self.vol, 3, "vol"))
        object.__setattr__(self, "s0", _frozen(self.s0, 1, "s0"))
        object.__setattr__(self, "x0", float(self.x0))

        k = self.grid.size - 1
        if k < 1:
            raise BadGrid("grid needs at least two points", payload="grid")
        n = self.s0.size
        if n < 1:
            raise ValidationError("market needs at least one stock", payload="s0")
        if self.rate.shape != (k,):
            raise ValidationError(f"rate must have shape ({k},), got {self.rate.shape}", payload="rate")
        if self.drift.shape != (k, n):
            raise ValidationError(f"drift must have shape ({k}, {n}), got {self.drift.shape}", payload="drift")
        if self.vol.shape != (k, n, n):
            raise ValidationError(f"vol must have shape ({k}, {n}, {n}), got {self.vol.shape}", payload="vol")

    # ------------ shape ------------
    @property
    def n(self) -> int:
        return int(self.s0.size)

    @property
    def intervals(self) -> int:
        return int(self.grid.size - 1)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.grid)

    @property
    def excess_drift(self) -> np.ndarray:
        """초과 상승률 ã_k = a_k − r_k 1, shape (K, n)"""
        return self.drift - self.rate[:, None]

    # ------------ constructors ------------
    @classmethod
    def constant(
        cls,
        drift: Sequence[float],
        vol,
        *,
        rate: float = 0.0,
        horizon: float = 1.0,
        s0: Optional[Sequence[float]] = None,
        x0: float = 1.0,
    ) -> "MarketParams":
        """[0, horizon] 단일 구간 시장"""
        drift = np.atleast_1d(np.asarray(drift, dtype=float))
        n = drift.size
        vol = np.asarray(vol, dtype=float).reshape(n, n)
        return cls(
            grid=np.array([0.0, float(horizon)]),
            rate=np.array([float(rate)]),
            drift=drift[None, :],
            vol=vol[None, :, :],
            s0=np.ones(n) if s0 is None else np.asarray(s0, dtype=float),
            x0=x0,
        )

    def with_drift(self, drift) -> "MarketParams":
        drift = np.asarray(drift, dtype=float)
        if drift.ndim == 1:
            drift = np.broadcast_to(drift, (self.intervals, self.n))
        return replace(self, drift=drift)

    def with_x0(self, x0: float) -> "MarketParams":
        return replace(self, x0=x0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": self.grid.tolist(),
            "rate": self.rate.tolist(),
            "drift": self.drift.tolist(),
            "vol": self.vol.tolist(),
            "s0": self.s0.tolist(),
            "x0": self.x0,
        }


@dataclass(frozen=True, eq=False)
class RiskMetrics:
    """
    MarketParams 에서 유도되는 위험 지표

    - 구간별 V = σσᵀ, Q = V⁻¹, theta = σ⁻¹ã
    - R = ∫|θ|² dt, Rbar = R / T, J = R (결정적 계수)
    - cumulative: 격자점별 ∫_0^{t_k} |θ|² ds
    """
    grid: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    theta: np.ndarray
    theta_sq: np.ndarray
    cumulative: np.ndarray
    R: float
    Rbar: float
    J: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "J", self.R)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def integral(self, t) -> np.ndarray:
        """∫_0^t |θ|² ds (구간별 상수 θ 에 대해 정확)"""
        return np.interp(t, self.grid, self.cumulative)

    def remaining(self, t) -> np.ndarray:
        """남은 위험 ∫_t^T |θ|² ds = R̄ (T − τ(t))"""
        return np.maximum(self.R - self.integral(t), 0.0)

    def tau(self, t) -> np.ndarray:
        """기울기 |θ_k|²/R̄ 의 시간 변환. R = 0 이면 항등"""
        t = np.asarray(t, dtype=float)
        if self.R == 0.0:
            return t.copy()
        return self.integral(t) / self.Rbar

    def interval_index(self, t) -> np.ndarray:
        k = np.searchsorted(self.grid, t, side="right") - 1
        return np.clip(k, 0, self.grid.size - 2)
