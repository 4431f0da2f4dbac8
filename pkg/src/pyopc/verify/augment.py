# src/pyopc/verify/augment.py
from __future__ import annotations

import logging
from typing import Sequence, Union

import numpy as np

from pyopc.compress import SubsetPolicy, policy_from_subsets, subset_risk
from pyopc.errors import NegativeGap
from pyopc.market import MarketParams

logger = logging.getLogger(__name__)

SubsetLike = Union[SubsetPolicy, Sequence[int]]


def as_policy(params: MarketParams, subset: SubsetLike) -> SubsetPolicy:
    if isinstance(subset, SubsetPolicy):
        return subset
    return policy_from_subsets(params, tuple(subset))


def iplus_alpha(params: MarketParams, I: SubsetLike, I_hat: SubsetLike) -> float:
    """α = √((R_Î − R_I)/T)."""
    r_i = subset_risk(params, as_policy(params, I))
    r_hat = subset_risk(params, as_policy(params, I_hat))
    gap = r_hat - r_i
    if gap < -1e-14 * max(1.0, abs(r_hat)):
        raise NegativeGap(f"R_hat = {r_hat!r} < R_I = {r_i!r}", payload={"R_I": r_i, "R_hat": r_hat})
    return float(np.sqrt(max(gap, 0.0) / params.horizon))


def augmented_market(params: MarketParams, I: SubsetLike, I_hat: SubsetLike) -> MarketParams:
    """
    I⁺-시장: I-시장에 자체 잡음의 단위 변동성, 초과 상승률 α 인 주식 n+1 추가
    R_{I⁺} = R_I + α²T = R_Î 가 되도록 구성
    """
    policy = as_policy(params, I)
    alpha = iplus_alpha(params, policy, I_hat)
    K, n = params.intervals, params.n
    drift = np.hstack([policy.drift, (params.rate + alpha)[:, None]])
    vol = np.zeros((K, n + 1, n + 1))
    vol[:, :n, :n] = params.vol
    vol[:, n, n] = 1.0
    logger.info("augmented market for %s: alpha=%.6g", policy.label, alpha)
    return MarketParams(
        grid=params.grid,
        rate=params.rate,
        drift=drift,
        vol=vol,
        s0=np.append(params.s0, 1.0),
        x0=params.x0,
    )
