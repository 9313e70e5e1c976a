"""Theta functions, line-bundle multipliers, L2 metrics and adiabatic curvature on a complex torus."""

from .torus import TorusModulus

__all__ = ["TorusModulus"]
__version__ = "0.1.0"
