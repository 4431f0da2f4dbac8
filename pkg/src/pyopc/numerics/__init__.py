# src/pyopc/numerics/__init__.py
from .quadrature import (
    PiecewiseFunction,
    QuadratureConfig,
    gaussian_expectation,
    hermite_table,
    legendre_table,
    lognormal_expectation,
)
from .streams import PATH_BLOCK, BlockStreams, block_ranges, block_streams, iter_blocks

__all__ = [
    "PiecewiseFunction",
    "QuadratureConfig",
    "gaussian_expectation",
    "hermite_table",
    "legendre_table",
    "lognormal_expectation",
    "PATH_BLOCK",
    "BlockStreams",
    "block_ranges",
    "block_streams",
    "iter_blocks",
]
