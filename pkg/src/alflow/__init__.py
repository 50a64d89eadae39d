"""Augmented Lagrangian solvers for implicitly constituted non-Newtonian flow in 2D."""

__version__ = "0.1.0"
