# src/pyopc/compress/selection.py
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.special import comb

from pyopc.compress.projection import compressed_drift, compressed_factor, projection, restricted_inverse
from pyopc.errors import BadParameters, SubsetSpaceTooLarge
from pyopc.market import MarketParams, compute_metrics
from pyopc.simulate import ScenarioMixture

logger = logging.getLogger(__name__)

DEFAULT_CAP = 1_000_000
TIE_TOLERANCE = 1e-12
_CHUNK = 4096

Subset = Tuple[int, ...]


def subset_label(I: Sequence[int]) -> str:
    """1 기준 집합 표기, 예: (0, 2) -> "{1,3}" """
    return "{" + ",".join(str(i + 1) for i in sorted(I)) + "}"


@dataclass(frozen=True, eq=False)
class SubsetPolicy:
    """
    격자 구간별 결정적 부분집합과 압축 시장 값

    - subsets: 구간별 0 기준 정렬 인덱스 튜플
    - projection, Q: (K, n, n); drift: (K, n) 압축 상승률 a_I
    - theta: (K, n) 압축 인자 σᵀ Q_I P_I ã; direction: (K, n) Q_I P_I ã
    - values: (K,) ãᵀ Q_I ã; R: Σ values Δt
    """
    subsets: Tuple[Subset, ...]
    projection: np.ndarray
    Q: np.ndarray
    drift: np.ndarray
    theta: np.ndarray
    direction: np.ndarray
    values: np.ndarray
    R: float

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(subset_label(I) for I in self.subsets)

    @property
    def label(self) -> str:
        """모든 구간이 같은 부분집합이면 단일 라벨"""
        labels = self.labels
        return labels[0] if len(set(labels)) == 1 else "|".join(labels)

    @property
    def max_size(self) -> int:
        return max(len(I) for I in self.subsets)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subsets": list(self.labels),
            "values": self.values.tolist(),
            "R": self.R,
        }


def _normalize_subsets(subsets, intervals: int) -> Tuple[Subset, ...]:
    if subsets and isinstance(next(iter(subsets)), (int, np.integer)):
        subsets = [subsets] * intervals
    out = tuple(tuple(sorted(int(i) for i in I)) for I in subsets)
    if len(out) != intervals:
        raise BadParameters(f"need one subset per interval ({intervals}), got {len(out)}", payload="subsets")
    return out


def policy_from_subsets(params: MarketParams, subsets) -> SubsetPolicy:
    """
    명시적 부분집합의 압축 시장 값 구성

    Args:
        params: 시장 계수
        subsets: 전 구간 공통 0 기준 부분집합 하나, 또는 구간별 하나씩
    """
    subsets = _normalize_subsets(subsets, params.intervals)
    metrics = compute_metrics(params)
    n, K = params.n, params.intervals
    P = np.zeros((K, n, n))
    Q = np.zeros((K, n, n))
    drift = np.zeros((K, n))
    theta = np.zeros((K, n))
    direction = np.zeros((K, n))
    values = np.zeros(K)
    for k, I in enumerate(subsets):
        excess = params.excess_drift[k]
        P[k] = projection(I, n)
        Q[k] = restricted_inverse(metrics.V[k], I)
        drift[k] = compressed_drift(params.drift[k], params.rate[k], metrics.V[k], I)
        direction[k] = Q[k] @ (P[k] @ excess)
        theta[k] = compressed_factor(params.vol[k], Q[k], P[k], excess)
        values[k] = float(excess @ Q[k] @ excess)
    for arr in (P, Q, drift, theta, direction, values):
        arr.setflags(write=False)
    return SubsetPolicy(
        subsets=subsets, projection=P, Q=Q, drift=drift, theta=theta, direction=direction,
        values=values, R=float(np.sum(values * params.dt)),
    )


def compressed_market(params: MarketParams, policy: SubsetPolicy) -> MarketParams:
    """I-시장: r, σ 는 같고 상승률만 a_I 로 교체"""
    return params.with_drift(policy.drift)


# ------------ enumeration ------------
@dataclass(frozen=True, eq=False)
class SubsetTable:
    """크기 1..m 인 모든 부분집합과 구간별 ãᵀ Q_I ã (행 × K)"""
    subsets: Tuple[Subset, ...]
    values: np.ndarray
    dt: np.ndarray

    @property
    def risks(self) -> np.ndarray:
        return self.values @ self.dt

    def rows(self) -> List[Dict[str, Any]]:
        out = []
        for I, vals, R in zip(self.subsets, self.values, self.risks):
            row: Dict[str, Any] = {"subset": subset_label(I), "size": len(I)}
            for k, v in enumerate(vals):
                row[f"value_{k}"] = float(v)
            row["R_I"] = float(R)
            out.append(row)
        return out


def subset_count(n: int, m: int) -> int:
    return int(sum(comb(n, j, exact=True) for j in range(1, m + 1)))


def _chunk_values(V: np.ndarray, excess: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # (K, c) quadratic forms ã_Iᵀ V_II⁻¹ ã_I for a chunk of equal-size subsets
    sub_v = V[:, idx[:, :, None], idx[:, None, :]]
    sub_a = excess[:, idx]
    sol = np.linalg.solve(sub_v, sub_a[..., None])[..., 0]
    return np.einsum("kcj,kcj->kc", sub_a, sol)


def enumerate_subsets(params: MarketParams, m: int, cap: int = DEFAULT_CAP, *, threads: int = 1) -> SubsetTable:
    """
    1 <= |I| <= m 인 모든 부분집합의 구간별 값

    크기순, 같은 크기는 사전순으로 나열. 결과는 `threads` 와 무관
    """
    n = params.n
    if not 1 <= m <= n:
        raise BadParameters(f"m must satisfy 1 <= m <= n = {n}", payload="m")
    total = subset_count(n, m)
    if total > cap:
        raise SubsetSpaceTooLarge(f"{total} subsets exceed the enumeration cap {cap}", payload={"count": total, "cap": cap})

    metrics = compute_metrics(params)
    excess = params.excess_drift
    jobs = []
    for size in range(1, m + 1):
        combos = itertools.combinations(range(n), size)
        while True:
            chunk = list(itertools.islice(combos, _CHUNK))
            if not chunk:
                break
            jobs.append(chunk)

    def run(chunk: List[Subset]) -> np.ndarray:
        return _chunk_values(metrics.V, excess, np.asarray(chunk, dtype=int)).T

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(c) for c in jobs]

    subsets = tuple(tuple(I) for chunk in jobs for I in chunk)
    values = np.concatenate(parts, axis=0)
    logger.debug("enumerated %d subsets of %d stocks (m=%d)", total, n, m)
    return SubsetTable(subsets=subsets, values=values, dt=params.dt)


def argmax_subset(subsets: Sequence[Subset], values: np.ndarray) -> int:
    """최댓값의 행 (근사 동률이면 사전순 가장 작은 부분집합)"""
    best = float(np.max(values))
    tied = np.flatnonzero(np.abs(values - best) <= TIE_TOLERANCE * abs(best))
    return int(min(tied, key=lambda i: subsets[i]))


def select_subset(params: MarketParams, m: int, cap: int = DEFAULT_CAP, *, threads: int = 1,
                  table: SubsetTable | None = None) -> SubsetPolicy:
    """|I| <= m 에서 구간별 ãᵀ Q_I ã 의 argmax"""
    table = table or enumerate_subsets(params, m, cap, threads=threads)
    rows = [i for i, I in enumerate(table.subsets) if len(I) <= m]
    chosen = []
    for k in range(params.intervals):
        col = table.values[rows, k]
        chosen.append(table.subsets[rows[argmax_subset([table.subsets[i] for i in rows], col)]])
    policy = policy_from_subsets(params, chosen)
    logger.info("selected %s for m=%d (R_I=%.6g)", policy.label, m, policy.R)
    return policy


def subset_risk(params: MarketParams, policy: SubsetPolicy) -> float:
    """정책의 부분집합에 대해 시장에서 다시 계산한 R_I"""
    metrics = compute_metrics(params)
    excess = params.excess_drift
    total = 0.0
    for k, I in enumerate(policy.subsets):
        Q = restricted_inverse(metrics.V[k], I)
        total += float(excess[k] @ Q @ excess[k]) * float(params.dt[k])
    return total


def dominates(policy1: SubsetPolicy, policy2: SubsetPolicy, market: Union[MarketParams, ScenarioMixture]) -> bool:
    """
    Î 가 I 를 지배: 결정적 시장이면 R_1 > R_2, 혼합이면 모든 시나리오에서 R_1 >= R_2
    이고 양의 확률을 가진 시나리오 하나에서 엄격히 큼
    """
    if isinstance(market, MarketParams):
        return subset_risk(market, policy1) > subset_risk(market, policy2)
    r1 = np.array([subset_risk(p, policy1) for p in market.scenarios])
    r2 = np.array([subset_risk(p, policy2) for p in market.scenarios])
    positive = market.probabilities > 0
    return bool(np.all(r1[positive] >= r2[positive]) and np.any(r1[positive] > r2[positive]))
