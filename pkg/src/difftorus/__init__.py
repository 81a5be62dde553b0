"""Spectral calculus on the torus and cocycles of its diffeomorphism group."""

from .config import Tolerances
from .spectral import FourierScalar, GridSpec

__all__ = ["FourierScalar", "GridSpec", "Tolerances"]

__version__ = "0.1.0"
