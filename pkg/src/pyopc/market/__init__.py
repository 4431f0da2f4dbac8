# src/pyopc/market/__init__.py
from .metrics import DEFAULT_C1, bank_account, compute_metrics, discount, refine, validate_market
from .types import MarketParams, RiskMetrics

__all__ = [
    "MarketParams",
    "RiskMetrics",
    "DEFAULT_C1",
    "validate_market",
    "compute_metrics",
    "refine",
    "bank_account",
    "discount",
]
