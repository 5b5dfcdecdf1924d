"""Numerical laboratory for the two-weight inequality for the Hilbert transform."""

from .measure import DensityPiece, FunctionPiece, Interval, Weight, mass
from .transforms import TruncationSpec

__version__ = "0.1.0"

__all__ = ["DensityPiece", "FunctionPiece", "Interval", "Weight", "mass", "TruncationSpec"]
