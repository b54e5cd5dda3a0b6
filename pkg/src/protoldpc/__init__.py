"""Protograph LDPC codes on the binary erasure channel.

Density-evolution thresholds, differential-evolution search over base
matrices, structured liftings from regular graphs, and Monte Carlo
decoding.
"""

from .density import DEResult, ThresholdResult, de_run, threshold, verify_decay
from .erasure import ChannelConfig, ErrorStats, peel_decode, simulate
from .optimize import OptimizerConfig, OptimizeResult
from .protograph import (
    BaseMatrix,
    Protograph,
    check_chain_constraint,
    design_rate,
    protograph_from_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "BaseMatrix",
    "ChannelConfig",
    "DEResult",
    "ErrorStats",
    "OptimizeResult",
    "OptimizerConfig",
    "Protograph",
    "ThresholdResult",
    "check_chain_constraint",
    "de_run",
    "design_rate",
    "peel_decode",
    "protograph_from_matrix",
    "simulate",
    "threshold",
    "verify_decay",
]
