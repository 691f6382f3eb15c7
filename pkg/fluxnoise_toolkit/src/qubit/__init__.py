"""Transmon dispersion and Ramsey dephasing."""

from .ramsey import DephasingParams, Gamma1Source, coherence_factor, t2_star, t2_star_curve, total_envelope
from .transmon import TransmonDispersion, d1_d2, omega

__all__ = [
    "DephasingParams",
    "Gamma1Source",
    "TransmonDispersion",
    "coherence_factor",
    "d1_d2",
    "omega",
    "t2_star",
    "t2_star_curve",
    "total_envelope",
]
