"""Transient functionals of reflected Levy queues with phase-type jumps."""

from ._backend import COMPILED
from .levy_model import JumpSide, LevyModel, load_model, parse_model, validate
from .wiener_hopf import factorize, kbar, kund

BACKEND = "cython" if COMPILED else "python"
__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "JumpSide",
    "LevyModel",
    "factorize",
    "kbar",
    "kund",
    "load_model",
    "parse_model",
    "validate",
]
