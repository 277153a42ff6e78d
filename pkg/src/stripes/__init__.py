"""Numerics for stripe formation in local/nonlocal isoperimetric functionals."""

from .kernel import (
    IntervalPair,
    KernelParams,
    PoleError,
    hat_kernel,
    interval_interaction,
    jc_diagnostic,
    make_params,
    phi,
)
from .lattice import SeriesResult, lattice_sum

__version__ = "0.1.0"

__all__ = [
    "IntervalPair",
    "KernelParams",
    "PoleError",
    "SeriesResult",
    "__version__",
    "hat_kernel",
    "interval_interaction",
    "jc_diagnostic",
    "lattice_sum",
    "make_params",
    "phi",
]
