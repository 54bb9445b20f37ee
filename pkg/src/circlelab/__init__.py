"""Numerical toolkit for the L2 -> L6 extension problem on the unit circle."""

from circlelab.circle import Cap, CircleFunction, cap_class_distance, cap_distance, pullback, symmetrize

__all__ = [
    "Cap",
    "CircleFunction",
    "cap_class_distance",
    "cap_distance",
    "pullback",
    "symmetrize",
]

__version__ = "0.1.0"
