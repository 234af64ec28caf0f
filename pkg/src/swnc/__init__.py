"""Sliding-window network coding laboratory for lossy, high-RTT-variance links."""
__version__ = "0.1.0"

from ._accel import HAS_NUMBA, backend  # noqa: E402
from .channel import ChannelProfile, GEParams, fit_ge, ge_generate, ge_stationary  # noqa: E402
from .engine import SimConfig, run_datapoint, run_experience, sweep  # noqa: E402
from .gf import CoeffVector, EliminationState, gf_add, gf_inv, gf_mul  # noqa: E402

__all__ = [
    "HAS_NUMBA", "backend", "ChannelProfile", "GEParams", "fit_ge", "ge_generate",
    "ge_stationary", "SimConfig", "run_datapoint", "run_experience", "sweep", "CoeffVector",
    "EliminationState", "gf_add", "gf_inv", "gf_mul",
]
