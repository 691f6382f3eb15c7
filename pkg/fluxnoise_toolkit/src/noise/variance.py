"""Momentum-space flux variance and the gradiometric suppression factor.

⟨Φ²⟩ = (2π)⁻² ∫ |K̃(k)|² S_m(k; ξ) d²k, reduced to a radial integral
through the angular average of the filter.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ..utils import ConvergenceError, DivisionDegeneracyError, FluxNoiseError, ParameterDomainError
from .geometry import LoopGeometry, angular_average_filter, kernel_fourier, kernel_square_integral, one_minus_j0
from .quadrature import adaptive_radial_integral, find_upper_limit
from .spectrum import NoiseSpectrum, SpectrumKind, spectrum_at

logger = logging.getLogger(__name__)

SHORT_REGIME_RATIO = 0.1
LONG_REGIME_RATIO = 10.0
DEFAULT_RTOL = 1e-6
_TAIL_START = math.sqrt(math.log(1e12))

T = TypeVar("T")
R = TypeVar("R")


class Regime(str, Enum):
    """Diagnostic label for where ξ sits relative to the loop scale."""

    SHORT_WAVELENGTH = "short_wavelength"
    CROSSOVER = "crossover"
    LONG_WAVELENGTH = "long_wavelength"


@dataclass(frozen=True)
class VarianceResult:
    """Flux variance in Wb² with its quadrature error estimate."""

    value: float
    estimated_quadrature_error: float
    regime_tag: Regime
    failure: Optional[str] = None


@dataclass(frozen=True)
class SuppressionPoint:
    """One point of an S(ξ) sweep."""

    correlation_length: float
    s_factor: float
    variance_single: float
    variance_pair: float
    regime_tag: Regime
    failure: Optional[str] = None


def regime_for(geometry: LoopGeometry, spec: NoiseSpectrum) -> Regime:
    """Classify ξ against the separation (pair) or ring diameter (single ring)."""
    if spec.is_white:
        return Regime.SHORT_WAVELENGTH
    ratio = spec.correlation_length / geometry.reference_length
    if ratio < SHORT_REGIME_RATIO:
        return Regime.SHORT_WAVELENGTH
    if ratio > LONG_REGIME_RATIO:
        return Regime.LONG_WAVELENGTH
    return Regime.CROSSOVER


def _panel_width(geometry: LoopGeometry, xi: float) -> float:
    # half an oscillation of the ring Bessel factor or of J0(kd), and half a spectral width
    oscillation = math.pi / (geometry.outer_radius + geometry.effective_separation)
    return min(oscillation, 0.5 / xi)


def _radial_integral(geometry: LoopGeometry, spec: NoiseSpectrum,
                     weight: Callable[[np.ndarray], np.ndarray], rtol: float,
                     panel_geometry: Optional[LoopGeometry] = None) -> Tuple[float, float]:
    xi = spec.correlation_length

    def integrand(k: np.ndarray) -> np.ndarray:
        return weight(k) * spectrum_at(spec, k) * k / (2 * math.pi)

    upper = find_upper_limit(integrand, _TAIL_START / xi)
    width = _panel_width(panel_geometry or geometry, xi)
    result = adaptive_radial_integral(integrand, upper, width, rtol=rtol)
    return result.value, result.error


def flux_variance(geometry: LoopGeometry, spec: NoiseSpectrum, rtol: float = DEFAULT_RTOL) -> VarianceResult:
    """⟨Φ²⟩ for ``geometry`` threaded by noise with spectrum ``spec``."""
    regime = regime_for(geometry, spec)
    if spec.amplitude == 0:
        return VarianceResult(value=0.0, estimated_quadrature_error=0.0, regime_tag=regime)

    if spec.is_white:
        # Parseval: ∫|K̃|² S₀ d²k/(2π)² = S₀ ∫K² d²r, exact in real space
        value = spec.amplitude * kernel_square_integral(geometry)
        return VarianceResult(value=value, estimated_quadrature_error=0.0, regime_tag=regime)

    value, error = _radial_integral(geometry, spec, lambda k: angular_average_filter(geometry, k), rtol)
    logger.debug(f"flux_variance({geometry.kind.value}, xi={spec.correlation_length:.3e}) = {value:.6e} ± {error:.1e}")
    return VarianceResult(value=value, estimated_quadrature_error=error, regime_tag=regime)


def _as_pair(geometry: LoopGeometry) -> LoopGeometry:
    pair = geometry if geometry.is_pair else geometry.as_pair(geometry.separation)
    if pair.separation <= 0:
        raise ParameterDomainError("suppression factor needs a gradiometric pair with separation > 0")
    return pair


def weighted_sin2_average(geometry: LoopGeometry, spec: NoiseSpectrum, rtol: float = DEFAULT_RTOL) -> float:
    """⟨sin²(k·d/2)⟩_ξ weighted by W(k)·S_m(k; ξ), W = |K̃_X|²."""
    pair = _as_pair(geometry)
    ring = pair.single_ring()
    if spec.is_white:
        return kernel_square_integral(pair) / (4 * kernel_square_integral(ring))

    def weight(k: np.ndarray) -> np.ndarray:
        return kernel_fourier(ring, k) ** 2

    def weighted_sin2(k: np.ndarray) -> np.ndarray:
        return weight(k) * 0.5 * one_minus_j0(k * pair.separation)

    # both integrals on the pair's panels so their ratio shares one discretisation
    numerator, _ = _radial_integral(ring, spec, weighted_sin2, rtol, panel_geometry=pair)
    denominator, _ = _radial_integral(ring, spec, weight, rtol, panel_geometry=pair)
    if denominator == 0:
        raise DivisionDegeneracyError("weighted average undefined for zero spectral weight",
                                      xi=spec.correlation_length, separation=pair.separation)
    return numerator / denominator


def suppression_factor(geometry: LoopGeometry, spec: NoiseSpectrum, rtol: float = DEFAULT_RTOL) -> float:
    """S(ξ) = ⟨Φ_X²⟩ / ⟨Φ₈²⟩ for rings sharing R, w and coupling."""
    return suppression_point(geometry, spec, rtol).s_factor


def suppression_point(geometry: LoopGeometry, spec: NoiseSpectrum, rtol: float = DEFAULT_RTOL) -> SuppressionPoint:
    """S together with both variances; white spectra report ``correlation_length`` as nan."""
    pair = _as_pair(geometry)
    single = flux_variance(pair.single_ring(), spec, rtol)
    gradiometric = flux_variance(pair, spec, rtol)
    if gradiometric.value <= 0:
        raise DivisionDegeneracyError(
            f"gradiometric variance vanished (xi={spec.correlation_length!r}, d={pair.separation!r})",
            xi=spec.correlation_length, separation=pair.separation,
        )
    return SuppressionPoint(
        correlation_length=math.nan if spec.is_white else spec.correlation_length,
        s_factor=single.value / gradiometric.value,
        variance_single=single.value,
        variance_pair=gradiometric.value,
        regime_tag=gradiometric.regime_tag,
    )


def _check_grid(xi_grid: Sequence[float]) -> List[float]:
    grid = [float(x) for x in xi_grid]
    if not grid:
        raise ParameterDomainError("correlation-length grid is empty")
    if any(x <= 0 for x in grid):
        raise ParameterDomainError("correlation lengths must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterDomainError("correlation-length grid must be strictly increasing")
    return grid


def _ordered_map(func: Callable[[T], R], items: Iterable[T], max_workers: Optional[int]) -> List[R]:
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def variance_sweep(geometry: LoopGeometry, xi_grid: Sequence[float], amplitude: float = 1.0,
                   rtol: float = DEFAULT_RTOL,
                   max_workers: Optional[int] = None) -> List[Tuple[float, VarianceResult]]:
    """⟨Φ²⟩ over a grid of correlation lengths (Gaussian-correlated spectra)."""
    grid = _check_grid(xi_grid)
    logger.info(f"Variance sweep: {geometry.kind.value}, {len(grid)} points, xi in [{grid[0]:.3e}, {grid[-1]:.3e}] m")

    def evaluate(xi: float) -> Tuple[float, VarianceResult]:
        spec = NoiseSpectrum(kind=SpectrumKind.GAUSSIAN_CORRELATED, correlation_length=xi, amplitude=amplitude)
        try:
            return xi, flux_variance(geometry, spec, rtol)
        except ConvergenceError as e:
            logger.warning(f"Variance at xi={xi:.3e} did not converge: {e}")
            partial = e.partial_estimate if e.partial_estimate is not None else math.nan
            return xi, VarianceResult(value=partial, estimated_quadrature_error=math.nan,
                                      regime_tag=regime_for(geometry, spec), failure=str(e))

    return _ordered_map(evaluate, grid, max_workers)


def suppression_sweep(geometry: LoopGeometry, xi_grid: Sequence[float], amplitude: float = 1.0,
                      rtol: float = DEFAULT_RTOL,
                      max_workers: Optional[int] = None) -> List[SuppressionPoint]:
    """S(ξ) over a grid of correlation lengths."""
    pair = _as_pair(geometry)
    grid = _check_grid(xi_grid)
    logger.info(f"Suppression sweep: d={pair.separation:.3e} m, {len(grid)} points")

    def evaluate(xi: float) -> SuppressionPoint:
        spec = NoiseSpectrum(kind=SpectrumKind.GAUSSIAN_CORRELATED, correlation_length=xi, amplitude=amplitude)
        try:
            return suppression_point(pair, spec, rtol)
        except FluxNoiseError as e:
            logger.warning(f"Suppression at xi={xi:.3e} failed: {e}")
            return SuppressionPoint(correlation_length=xi, s_factor=math.nan, variance_single=math.nan,
                                    variance_pair=math.nan, regime_tag=regime_for(pair, spec), failure=str(e))

    return _ordered_map(evaluate, grid, max_workers)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    slope, _ = np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)
    return float(slope)
