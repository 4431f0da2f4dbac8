# src/pyopc/errors.py
from __future__ import annotations

from typing import Any


class OPCError(RuntimeError):
    """
    pyopc 공통 에러 베이스

    - exit_code: CLI 종료 코드 (1 설정/검증, 2 보정, 3 검증 실패)
    - payload: 진단용 문제 필드, 인덱스 또는 값
    """

    exit_code: int = 1

    def __init__(self, message: str, payload: Any | None = None, *, exit_code: int | None = None):
        if exit_code is not None:
            self.exit_code = exit_code
        super().__init__(f"[{self.exit_code}] {message}")
        self.message = message
        self.payload = payload


# ---------------- families ----------------
class ConfigError(OPCError):
    exit_code = 1


class ValidationError(OPCError):
    exit_code = 1


class NumericsError(OPCError):
    exit_code = 1


class CalibrationError(OPCError):
    exit_code = 2


class VerificationFailed(OPCError):
    exit_code = 3


# ---------------- market ----------------
class EllipticityViolated(ValidationError):
    pass


class BadGrid(ValidationError):
    pass


class NonPositivePrice(ValidationError):
    pass


class NonFiniteCoefficient(ValidationError):
    pass


# ---------------- simulate ----------------
class BadMixture(ValidationError):
    pass


class BadSimConfig(ValidationError):
    pass


# ---------------- replicate ----------------
class GrowthBoundViolated(NumericsError):
    pass


class DegenerateTime(NumericsError):
    pass


# ---------------- utility ----------------
class BadParameters(ValidationError):
    pass


class CalibrationFailed(CalibrationError):
    pass


class GoalWithZeroRisk(CalibrationFailed):
    pass


class GrowthBoundUnsatisfiable(CalibrationError):
    pass


class EmptySample(NumericsError):
    pass


# ---------------- compress / verify ----------------
class SingularSubmatrix(NumericsError):
    pass


class SubsetSpaceTooLarge(ValidationError):
    pass


class NegativeGap(ValidationError):
    pass
