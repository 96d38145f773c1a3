"""Pseudo-Hermitian harmonic maps: Tanaka-Webster geometry, energies and the subelliptic heat flow."""

__version__ = "0.1.0"
