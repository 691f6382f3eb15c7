"""Frequency–flux dispersion of a symmetric-SQUID transmon.

Flux arguments are in units of Φ₀; derivatives are per Φ₀ and per Φ₀².
"""

import logging
import math
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.constants import physical_constants

from ..utils import ParameterDomainError

logger = logging.getLogger(__name__)

FLUX_QUANTUM = physical_constants["mag. flux quantum"][0]
MIN_EJ_EC_RATIO = 20.0
DEGENERACY_GUARD = 1e-6


class TransmonDispersion(BaseModel):
    """ω(Φ) = 2π(√(8·E_J·|cos(πΦ/Φ₀)|·E_C) − E_C), energies given as frequencies in Hz."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ej_over_h: float = Field(20e9, gt=0, description="Total Josephson energy E_J/h in Hz")
    ec_over_h: float = Field(0.25e9, gt=0, description="Charging energy E_C/h in Hz")

    @model_validator(mode="after")
    def _check_transmon_regime(self) -> "TransmonDispersion":
        ratio = self.ej_over_h / self.ec_over_h
        if ratio < MIN_EJ_EC_RATIO:
            raise ParameterDomainError(
                f"ej_over_h / ec_over_h = {ratio:.3g} is below {MIN_EJ_EC_RATIO:g}; "
                "the transmon dispersion is not valid there"
            )
        return self

    @property
    def flux_quantum(self) -> float:
        return FLUX_QUANTUM

    @property
    def plasma_scale(self) -> float:
        """√(8·E_J·E_C) in Hz."""
        return math.sqrt(8 * self.ej_over_h * self.ec_over_h)

    def frequency_ghz(self, phi) -> np.ndarray:
        """f₀₁ in GHz at bias ``phi`` (Φ₀ units)."""
        return omega(self, phi) / (2 * math.pi * 1e9)


def _cosine(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    cos = np.cos(math.pi * phi)
    if np.any(np.abs(cos) <= DEGENERACY_GUARD):
        raise ParameterDomainError("bias too close to the half-flux-quantum degeneracy (|cos(πΦ/Φ₀)| ≤ 1e-6)")
    return cos


def omega(disp: TransmonDispersion, phi) -> np.ndarray:
    """Angular transition frequency in rad/s."""
    g = np.abs(_cosine(phi))
    return 2 * math.pi * (disp.plasma_scale * np.sqrt(g) - disp.ec_over_h)


def d1_d2(disp: TransmonDispersion, phi) -> Tuple[np.ndarray, np.ndarray]:
    """Analytic ∂ω/∂Φ and ∂²ω/∂Φ² at ``phi`` (rad/s per Φ₀, per Φ₀²)."""
    phi = np.asarray(phi, dtype=float)
    cos = _cosine(phi)
    sign = np.sign(cos)
    g = np.abs(cos)
    # g = |cos(πφ)|: g' = −π·sign·sin(πφ), g'' = −π²·g
    dg = -math.pi * sign * np.sin(math.pi * phi)
    d2g = -math.pi ** 2 * g
    scale = 2 * math.pi * disp.plasma_scale
    sqrt_g = np.sqrt(g)
    d1 = scale * dg / (2 * sqrt_g)
    d2 = scale * (d2g / (2 * sqrt_g) - dg * dg / (4 * g * sqrt_g))
    return d1, d2


def per_weber(d1, d2) -> Tuple[np.ndarray, np.ndarray]:
    """Convert per-Φ₀ derivatives to per-Wb derivatives."""
    return np.asarray(d1) / FLUX_QUANTUM, np.asarray(d2) / FLUX_QUANTUM ** 2
