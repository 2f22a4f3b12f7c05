"""Desk-scale numerical laboratory for harmonic-gauge gravity coupled to
nonlinear electrodynamics."""

__version__ = "0.1.0"
