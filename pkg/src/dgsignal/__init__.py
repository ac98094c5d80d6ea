"""Numerical laboratory for nonlocal signaling in two-particle Doebner-Goldin dynamics."""

__version__ = "0.1.0"
