"""Spatial magnetization-noise spectra and their real-space correlations."""

import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from ..utils import ParameterDomainError, UnsupportedSpectrumError
from .quadrature import adaptive_radial_integral, find_upper_limit

logger = logging.getLogger(__name__)


class SpectrumKind(str, Enum):
    """Spatial noise model."""

    GAUSSIAN_CORRELATED = "gaussian_correlated"
    WHITE = "white"


class NoiseSpectrum(BaseModel):
    """Isotropic magnetization noise spectrum S_m(k; ξ).

    GaussianCorrelated: S_m = amplitude·ξ²·exp(−k²ξ²), the proportionality
    constant absorbed into ``amplitude``. White: S_m = amplitude (S₀).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SpectrumKind = SpectrumKind.GAUSSIAN_CORRELATED
    correlation_length: Optional[float] = Field(1e-6, gt=0, description="ξ in metres")
    amplitude: float = Field(1.0, ge=0)

    @model_validator(mode="after")
    def _check_length(self) -> "NoiseSpectrum":
        if self.kind == SpectrumKind.GAUSSIAN_CORRELATED and self.correlation_length is None:
            raise ParameterDomainError("correlation_length is required for gaussian_correlated spectra")
        return self

    @property
    def is_white(self) -> bool:
        return self.kind == SpectrumKind.WHITE

    def with_correlation_length(self, xi: float) -> "NoiseSpectrum":
        return NoiseSpectrum(kind=self.kind, correlation_length=xi, amplitude=self.amplitude)

    def with_amplitude(self, amplitude: float) -> "NoiseSpectrum":
        return NoiseSpectrum(kind=self.kind, correlation_length=self.correlation_length, amplitude=amplitude)


def _checked_length(spec: NoiseSpectrum) -> float:
    xi = spec.correlation_length
    if xi is None or not xi > 0:
        raise ParameterDomainError(f"correlation_length must be positive, got {xi!r}")
    return float(xi)


def peak_wavenumber_scale(spec: NoiseSpectrum) -> float:
    """1/ξ, the wavenumber scale carrying the spectral weight."""
    if spec.is_white:
        raise UnsupportedSpectrumError("white spectrum has no characteristic wavenumber")
    return 1.0 / _checked_length(spec)


def spectrum_at(spec: NoiseSpectrum, k) -> np.ndarray:
    """Spectral density at radial wavenumber ``k``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ParameterDomainError("radial wavenumber must be non-negative")
    if spec.is_white:
        return np.full_like(k, spec.amplitude)

    xi = _checked_length(spec)
    return spec.amplitude * xi * xi * np.exp(-(k * xi) ** 2)


def correlation_real(spec: NoiseSpectrum, r) -> np.ndarray:
    """Real-space correlation C_m(r), the inverse 2D transform of S_m."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterDomainError("separation must be non-negative")
    if spec.is_white:
        if np.any(r == 0):
            raise UnsupportedSpectrumError("white-noise correlation is a delta function with no value at r = 0")
        return np.zeros_like(r)

    xi = _checked_length(spec)
    return spec.amplitude * np.exp(-r * r / (4 * xi * xi)) / (4 * math.pi)


def hankel_inverse(spec: NoiseSpectrum, r: float, rtol: float = 1e-9) -> float:
    """Numerical (2π)⁻¹∫S_m(k)J₀(kr)k dk, the radial inverse transform."""
    if spec.is_white:
        raise UnsupportedSpectrumError("white spectrum has no convergent radial inverse transform")
    xi = _checked_length(spec)

    def integrand(k: np.ndarray) -> np.ndarray:
        return spectrum_at(spec, k) * special.j0(k * r) * k / (2 * math.pi)

    upper = find_upper_limit(integrand, math.sqrt(math.log(1e12)) / xi)
    width = min(0.5 / xi, math.pi / r) if r > 0 else 0.5 / xi
    return adaptive_radial_integral(integrand, upper, width, rtol=rtol).value
