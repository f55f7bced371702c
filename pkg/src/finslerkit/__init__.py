"""Numerical Finsler geometry on truncated Taylor jets."""

__version__ = "0.1.0"
