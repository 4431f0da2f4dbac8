# src/pyopc/simulate/types.py
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from pyopc.errors import BadMixture, BadSimConfig
from pyopc.market import MarketParams, RiskMetrics, bank_account

# graded points toward T − ε; hedging error near the cutoff falls like 1/sqrt(cutoff_steps)
CUTOFF_STEPS = 640


class Measure(str, Enum):
    PHYSICAL = "physical"
    MARTINGALE = "martingale"


@dataclass(frozen=True)
class SimConfig:
    """
    몬테카를로 설정

    - steps: 격자 구간당 균등 하위 스텝 수
    - cutoff_steps: T − ε 쪽으로 조밀해지는 추가 점 수 (cutoff_epsilon > 0 일 때만 사용)
    - stream: 하위 스트림 계열. 한 실행의 독립 앙상블은 서로 다른 스트림 사용
    - threads: 워커 수 (결과에 영향 없음)
    """
    paths: int = 10_000
    steps: int = 50
    seed: int = 0
    measure: Measure = Measure.MARTINGALE
    cutoff_epsilon: float = 0.0
    cutoff_steps: int = CUTOFF_STEPS
    threads: int = 1
    stream: int = 0
    store_prices: bool = True

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "measure", Measure(self.measure))
        except ValueError:
            raise BadSimConfig(f"unknown measure {self.measure!r}", payload="measure") from None
        if self.paths < 1:
            raise BadSimConfig("paths must be >= 1", payload="paths")
        if self.steps < 1:
            raise BadSimConfig("steps must be >= 1", payload="steps")
        if self.threads < 1:
            raise BadSimConfig("threads must be >= 1", payload="threads")
        if self.seed < 0 or self.seed >= 2**64:
            raise BadSimConfig("seed must be a 64-bit unsigned integer", payload="seed")
        if self.stream < 0:
            raise BadSimConfig("stream must be >= 0", payload="stream")
        if self.cutoff_epsilon < 0:
            raise BadSimConfig("cutoff_epsilon must be >= 0", payload="cutoff_epsilon")
        if self.cutoff_steps < 0:
            raise BadSimConfig("cutoff_steps must be >= 0", payload="cutoff_steps")

    def check_horizon(self, horizon: float) -> None:
        if not self.cutoff_epsilon < horizon:
            raise BadSimConfig(
                f"cutoff_epsilon {self.cutoff_epsilon} must be < horizon {horizon}",
                payload="cutoff_epsilon",
            )


@dataclass(frozen=True, eq=False)
class ScenarioMixture:
    """
    시장 계수의 유한 혼합 분포 (경로마다 잡음과 독립적으로 한 번 추출)
    모든 시나리오는 n, 격자, x0 를 공유
    """
    scenarios: Tuple[MarketParams, ...]
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        scenarios = tuple(self.scenarios)
        probs = np.array(self.probabilities, dtype=float)
        object.__setattr__(self, "scenarios", scenarios)
        if not scenarios:
            raise BadMixture("mixture needs at least one scenario", payload="scenarios")
        if probs.shape != (len(scenarios),):
            raise BadMixture("one probability per scenario", payload="probabilities")
        if np.any(~np.isfinite(probs)) or np.any(probs < 0):
            raise BadMixture("probabilities must be finite and nonnegative", payload="probabilities")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise BadMixture(f"probabilities sum to {probs.sum()!r}, not 1", payload="probabilities")
        base = scenarios[0]
        for i, s in enumerate(scenarios[1:], start=1):
            if s.n != base.n:
                raise BadMixture(f"scenario {i} has {s.n} stocks, expected {base.n}", payload=f"scenarios[{i}]")
            if s.grid.shape != base.grid.shape or np.any(s.grid != base.grid):
                raise BadMixture(f"scenario {i} grid differs from scenario 0", payload=f"scenarios[{i}].grid")
            if s.x0 != base.x0:
                raise BadMixture(f"scenario {i} x0 differs from scenario 0", payload=f"scenarios[{i}].x0")
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def single(cls, params: MarketParams) -> "ScenarioMixture":
        return cls((params,), np.array([1.0]))

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[MarketParams, float]]) -> "ScenarioMixture":
        return cls(tuple(p for p, _ in pairs), np.array([w for _, w in pairs], dtype=float))

    @property
    def size(self) -> int:
        return len(self.scenarios)

    @property
    def n(self) -> int:
        return self.scenarios[0].n

    @property
    def grid(self) -> np.ndarray:
        return self.scenarios[0].grid

    @property
    def horizon(self) -> float:
        return self.scenarios[0].horizon

    @property
    def x0(self) -> float:
        return self.scenarios[0].x0


@dataclass(frozen=True)
class DomainExit:
    """부 경로가 효용 정의역을 처음 벗어난 스텝"""
    path: int
    time: float
    value: float

    def to_dict(self) -> Dict[str, Any]:
        return {"path": self.path, "time": self.time, "value": self.value}


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """
    세밀 시간 격자 `times` (M + 1 점) 위의 시뮬레이션 경로

    - increments: (N, M, n) 시뮬레이션 측도의 브라운 증분
    - log_z: (N, M + 1) 상태가격 밀도 Z 의 로그, Z_* = 1 / Z
    - scenario: (N,) 경로별 시나리오 번호
    - log_prices: (N, M + 1, n) 할인 로그 주가 (저장한 경우)
    """
    times: np.ndarray
    interval: np.ndarray
    increments: np.ndarray
    log_z: np.ndarray
    scenario: np.ndarray
    mixture: ScenarioMixture
    metrics: Tuple[RiskMetrics, ...]
    config: SimConfig
    log_prices: Optional[np.ndarray] = None

    @property
    def measure(self) -> Measure:
        return self.config.measure

    @property
    def paths(self) -> int:
        return int(self.log_z.shape[0])

    @property
    def steps(self) -> int:
        return int(self.times.size - 1)

    @property
    def n(self) -> int:
        return int(self.increments.shape[2])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def z(self) -> np.ndarray:
        return np.exp(self.log_z)

    @property
    def z_star(self) -> np.ndarray:
        return np.exp(-self.log_z)

    def theta_table(self) -> np.ndarray:
        """시나리오/구간별 위험의 시장가격 θ, (S, K, n)"""
        return np.stack([m.theta for m in self.metrics])

    def risk(self) -> np.ndarray:
        """경로별 R"""
        return np.array([m.R for m in self.metrics])[self.scenario]

    def bank(self) -> np.ndarray:
        """경로별 은행 계좌 B(t), (N, M + 1)"""
        table = np.stack([bank_account(p, self.times) for p in self.mixture.scenarios])
        return table[self.scenario]

    def discounted_prices(self) -> np.ndarray:
        if self.log_prices is None:
            raise ValueError("ensemble was simulated without prices")
        return np.exp(self.log_prices)

    def martingale_increments(self) -> np.ndarray:
        """w_* 의 증분 (마팅게일 측도에서는 `increments` 와 같음)"""
        if self.measure is Measure.MARTINGALE:
            return self.increments
        theta = self.theta_table()[self.scenario][:, self.interval, :]
        return self.increments + theta * self.dt[None, :, None]


@dataclass(frozen=True, eq=False)
class WealthPaths:
    """
    앙상블 격자 위의 정규화 부 X̃

    - values: (N, M + 1)
    - beta: (N, M) 스텝 시작 시점의 방향 벡터 배율
    - direction: (S, K, n) 시나리오/구간별 포지션 방향
    - exits: 효용 정의역을 벗어난 경로 (절단하지 않음)
    """
    values: np.ndarray
    beta: np.ndarray
    direction: np.ndarray
    exits: Tuple[DomainExit, ...] = field(default_factory=tuple)

    @property
    def terminal(self) -> np.ndarray:
        return self.values[:, -1]

    def exit_mask(self) -> np.ndarray:
        mask = np.zeros(self.values.shape[0], dtype=bool)
        mask[[e.path for e in self.exits]] = True
        return mask

    def positions(self, ensemble: PathEnsemble, step: int) -> np.ndarray:
        """스텝 시점의 주식 포지션 π = B β d, (N, n)"""
        bank = ensemble.bank()[:, step]
        d = self.direction[ensemble.scenario, ensemble.interval[step]]
        return (bank * self.beta[:, step])[:, None] * d

    def undiscounted(self, ensemble: PathEnsemble) -> np.ndarray:
        """할인 전 부 X(t) = B(t) X̃(t)"""
        return ensemble.bank() * self.values
