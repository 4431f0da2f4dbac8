# src/pyopc/utility/__init__.py
from .calibrate import (
    BUDGET_TOLERANCE,
    UtilityEstimate,
    budget_value,
    calibrate,
    calibrate_lambda,
    check_growth_bound,
    expected_utility,
)
from .families import ClaimFunction, Family, UtilitySpec, pointwise_maximizer, utility_value

__all__ = [
    "Family",
    "UtilitySpec",
    "ClaimFunction",
    "UtilityEstimate",
    "BUDGET_TOLERANCE",
    "pointwise_maximizer",
    "utility_value",
    "budget_value",
    "calibrate_lambda",
    "calibrate",
    "check_growth_bound",
    "expected_utility",
]
