"""Numerical laboratory for entropic inequalities on small quantum systems."""

__version__ = "0.1.0"
