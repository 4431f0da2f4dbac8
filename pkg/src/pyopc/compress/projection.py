# src/pyopc/compress/projection.py
from __future__ import annotations

from typing import Sequence

import numpy as np

from pyopc.errors import SingularSubmatrix

_COND_LIMIT = 1e14


def _index(I: Sequence[int], n: int) -> np.ndarray:
    idx = np.asarray(sorted(int(i) for i in I), dtype=int)
    if idx.size == 0 or idx[0] < 0 or idx[-1] >= n or np.unique(idx).size != idx.size:
        raise ValueError(f"subset {tuple(I)} is not a non-empty subset of range({n})")
    return idx


def projection(I: Sequence[int], n: int) -> np.ndarray:
    """P_I: I 의 좌표로의 0/1 대각 사영"""
    P = np.zeros((n, n))
    idx = _index(I, n)
    P[idx, idx] = 1.0
    return P


def restricted_inverse(V: np.ndarray, I: Sequence[int]) -> np.ndarray:
    """
    Q_I: 주 부분행렬 V[I, I] 의 역행렬을 n×n 에 다시 배치 (I 밖은 0)
    """
    V = np.asarray(V, dtype=float)
    n = V.shape[0]
    idx = _index(I, n)
    block = V[np.ix_(idx, idx)]
    if np.linalg.cond(block) > _COND_LIMIT:
        raise SingularSubmatrix(f"principal submatrix on {tuple(idx.tolist())} is singular", payload=idx.tolist())
    Q = np.zeros_like(V)
    Q[np.ix_(idx, idx)] = np.linalg.inv(block)
    return Q


def compressed_drift(a: np.ndarray, r: float, V: np.ndarray, I: Sequence[int]) -> np.ndarray:
    """
    압축 상승률 a_I = r̂ + V Q_I P_I (a − r̂)

    I 의 성분은 a 와 정확히 같고, 나머지는 보유 주식이 V 를 통해 유도하는 상승률
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    idx = _index(I, n)
    Q = restricted_inverse(V, idx)
    excess = a - r
    a_I = r + V @ Q @ (projection(idx, n) @ excess)
    drift = np.abs(a_I[idx] - a[idx])
    if np.any(drift > 1e-8 * (1.0 + np.abs(a[idx]))):
        raise SingularSubmatrix("compressed drift does not reproduce a on I", payload=idx.tolist())
    a_I[idx] = a[idx]
    return a_I


def compressed_factor(vol: np.ndarray, Q_I: np.ndarray, P: np.ndarray, excess: np.ndarray) -> np.ndarray:
    """θ_I = σᵀ Q_I P_I ã, |θ_I|² = ãᵀ Q_I ã"""
    return vol.T @ (Q_I @ (P @ excess))
