"""Quasi-exactly-solvable BC1 elliptic model: algebraic spectra and x-space checks."""

__version__ = "0.1.0"
