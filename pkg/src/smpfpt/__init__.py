"""Exact first-passage moments of finite semi-Markov processes."""

from smpfpt._backend import BACKEND
from smpfpt.errors import SmpError, UAViolationError
from smpfpt.model import SmpModel, SojournDist, validate
from smpfpt.passage import PassageMoments, first_moment, higher_moments, verify_first_step

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "PassageMoments",
    "SmpError",
    "SmpModel",
    "SojournDist",
    "UAViolationError",
    "first_moment",
    "higher_moments",
    "validate",
    "verify_first_step",
]
