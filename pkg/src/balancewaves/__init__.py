"""Exact wave solutions and rarefaction Riemann problems for the 1-D Euler equations with a source term."""
__version__ = "0.1.0"
