# src/pyopc/simulate/__init__.py
from .engine import (
    as_mixture,
    density,
    evolve_wealth,
    factor_variance,
    fine_grid,
    moment_oracle,
    simulate_ensemble,
)
from .mixture import switching_mixture
from .types import CUTOFF_STEPS, DomainExit, Measure, PathEnsemble, ScenarioMixture, SimConfig, WealthPaths

__all__ = [
    "CUTOFF_STEPS",
    "Measure",
    "SimConfig",
    "ScenarioMixture",
    "PathEnsemble",
    "WealthPaths",
    "DomainExit",
    "as_mixture",
    "fine_grid",
    "simulate_ensemble",
    "density",
    "factor_variance",
    "evolve_wealth",
    "moment_oracle",
    "switching_mixture",
]
