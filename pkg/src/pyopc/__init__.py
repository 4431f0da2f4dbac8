# src/pyopc/__init__.py
__version__ = "0.1.0"

from . import cli, compress, errors, market, numerics, replicate, simulate, utility, verify  # noqa: E402

__all__ = [
    "__version__",
    "cli",
    "compress",
    "errors",
    "market",
    "numerics",
    "replicate",
    "simulate",
    "utility",
    "verify",
]
