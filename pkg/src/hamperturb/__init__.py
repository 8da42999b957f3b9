"""Numerical toolkit for potential perturbations of periodic orbits of
not necessarily convex Hamiltonian systems."""

__version__ = "0.1.0"
