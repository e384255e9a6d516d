"""Numerical toolkit for variable-exponent Lebesgue spaces on grids."""

__version__ = "0.1.0"
