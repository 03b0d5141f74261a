"""Cubic weakly nonlinear Schroedinger toolkit for randomized quasi-periodic data."""

__version__ = "0.1.0"
