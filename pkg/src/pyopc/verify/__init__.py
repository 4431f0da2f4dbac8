# src/pyopc/verify/__init__.py
from .augment import as_policy, augmented_market, iplus_alpha
from .checks import (
    check_budget,
    check_dominance_gap,
    check_expected_utility,
    check_goal_success,
    check_heat_closed_form,
    check_iplus_equality,
    check_log_moment,
    check_martingale,
    check_moments,
    check_replication,
    goal_probability,
)
from .types import CheckReport, stopwatch

__all__ = [
    "CheckReport",
    "stopwatch",
    "as_policy",
    "iplus_alpha",
    "augmented_market",
    "check_martingale",
    "check_log_moment",
    "check_moments",
    "check_budget",
    "check_heat_closed_form",
    "check_replication",
    "check_expected_utility",
    "check_dominance_gap",
    "check_iplus_equality",
    "check_goal_success",
    "goal_probability",
]
