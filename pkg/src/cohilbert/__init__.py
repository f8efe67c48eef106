"""Cofinite Hilbert transform calculus and a Fredholm pipeline for the unsteady
subsonic wing boundary value problem."""
from .errors import (
    CharacteristicValueError,
    CohilbertError,
    ConfigError,
    DomainError,
    OutputError,
    TailError,
)
from .special_functions import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CharacteristicValueError",
    "CohilbertError",
    "ConfigError",
    "DomainError",
    "OutputError",
    "TailError",
]
