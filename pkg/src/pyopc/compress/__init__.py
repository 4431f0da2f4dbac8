# src/pyopc/compress/__init__.py
from .projection import compressed_drift, compressed_factor, projection, restricted_inverse
from .selection import (
    DEFAULT_CAP,
    SubsetPolicy,
    SubsetTable,
    argmax_subset,
    compressed_market,
    dominates,
    enumerate_subsets,
    policy_from_subsets,
    select_subset,
    subset_count,
    subset_label,
    subset_risk,
)

__all__ = [
    "projection",
    "restricted_inverse",
    "compressed_drift",
    "compressed_factor",
    "DEFAULT_CAP",
    "SubsetPolicy",
    "SubsetTable",
    "subset_label",
    "subset_count",
    "policy_from_subsets",
    "compressed_market",
    "enumerate_subsets",
    "argmax_subset",
    "select_subset",
    "subset_risk",
    "dominates",
]
