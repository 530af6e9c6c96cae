"""Identification of Gaussian vector autoregressions from one-bit measurements."""
__version__ = "0.1.0"
