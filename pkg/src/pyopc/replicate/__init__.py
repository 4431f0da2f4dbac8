# src/pyopc/replicate/__init__.py
from .heat import (
    CompositeHeatSolution,
    GoalHeatSolution,
    HeatSolution,
    PowerHeatSolution,
    QuadratureHeatSolution,
    closed_form_H,
    goal_heat,
    solve_heat,
)
from .strategy import (
    OptimalPlan,
    Strategy,
    StrategyKind,
    build_compressed_strategy,
    build_strategy,
    claim_heat,
    default_epsilon,
    optimal_compressed_strategy,
    optimal_strategy,
)

__all__ = [
    "HeatSolution",
    "QuadratureHeatSolution",
    "PowerHeatSolution",
    "CompositeHeatSolution",
    "GoalHeatSolution",
    "solve_heat",
    "closed_form_H",
    "goal_heat",
    "Strategy",
    "StrategyKind",
    "OptimalPlan",
    "build_strategy",
    "build_compressed_strategy",
    "claim_heat",
    "default_epsilon",
    "optimal_strategy",
    "optimal_compressed_strategy",
]
