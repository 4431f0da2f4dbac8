# src/pyopc/verify/types.py
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional


@dataclass(frozen=True)
class CheckReport:
    """
    검증 항목 하나의 결과

    - passed ⇔ |estimate − target| <= tolerance
    - 확률적 검사는 tolerance = 3 · std_error
    - runtime 은 참고용이며 직렬화하지 않음
    """
    name: str
    target: float
    estimate: float
    std_error: Optional[float]
    tolerance: float
    passed: bool
    runtime: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def compare(
        cls,
        name: str,
        target: float,
        estimate: float,
        tolerance: float,
        *,
        std_error: Optional[float] = None,
        runtime: float = 0.0,
        details: Optional[Dict[str, Any]] = None,
    ) -> "CheckReport":
        target, estimate, tolerance = float(target), float(estimate), float(tolerance)
        passed = bool(abs(estimate - target) <= tolerance)
        return cls(
            name=name,
            target=target,
            estimate=estimate,
            std_error=None if std_error is None else float(std_error),
            tolerance=tolerance,
            passed=passed,
            runtime=runtime,
            details=dict(details or {}),
        )

    @classmethod
    def three_sigma(cls, name: str, target: float, estimate: float, std_error: float, **kw) -> "CheckReport":
        return cls.compare(name, target, estimate, 3.0 * float(std_error), std_error=std_error, **kw)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "target": self.target,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }


@contextmanager
def stopwatch() -> Iterator[List[float]]:
    """원소 하나짜리 리스트를 내주고, 종료 시 경과 시간(초)을 채움"""
    box = [0.0]
    start = time.perf_counter()
    try:
        yield box
    finally:
        box[0] = time.perf_counter() - start
