"""Concentration-of-measure bounds and Monte Carlo checks for adversarial stability."""

__version__ = "0.1.0"
