"""Embedded magnetic inclusion sensors: forward models, calibration and damage detection."""

from .errors import MagsenseError

__version__ = "0.1.0"

__all__ = ["MagsenseError", "__version__"]
