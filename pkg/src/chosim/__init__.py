"""System-level simulator of conditional handover with CFRA resource updating."""

from .config import SimConfig, SweepGrid, load_config, preset
from .engine import run_simulation, simulate
from .kernels import BACKEND

__all__ = ["SimConfig", "SweepGrid", "load_config", "preset", "run_simulation", "simulate", "BACKEND"]
__version__ = "0.1.0"
