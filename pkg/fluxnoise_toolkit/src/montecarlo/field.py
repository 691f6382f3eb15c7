"""Random-field oracle for the momentum-space flux variance.

Magnetization fields are synthesized on a periodic n×n grid by filtering
white noise in Fourier space. Realization ``i`` of a run with base seed
``s`` draws from ``SeedSequence(s, spawn_key=(i,))``, so every
realization is reproducible on its own.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import fft, special

from ..noise.geometry import LoopGeometry, rasterize
from ..noise.spectrum import NoiseSpectrum, spectrum_at
from ..utils import ConfigError, ParameterDomainError, UnsupportedSpectrumError

logger = logging.getLogger(__name__)

EXTENT_FACTOR = 8.0
RESOLUTION_FACTOR = 4.0


@dataclass(frozen=True)
class FieldGrid:
    """One magnetization realization on a square periodic grid."""

    extent: float
    n: int
    seed: int
    realization: np.ndarray = field(repr=False)
    index: int = 0

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    def coordinates(self) -> np.ndarray:
        """Cell-centre coordinates along one axis, centred on the origin."""
        return cell_centres(self.extent, self.n)


@dataclass(frozen=True)
class McEstimate:
    """Sample estimate of ⟨Φ²⟩ with its standard error."""

    mean_sq: float
    std_error: float
    n_realizations: int
    samples: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def within(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean_sq - value) <= n_sigma * self.std_error


@dataclass(frozen=True)
class RadialPeriodogram:
    """Ring-averaged power spectrum of a field ensemble."""

    k: np.ndarray
    power: np.ndarray
    counts: np.ndarray
    reference: Optional[np.ndarray] = None


def cell_centres(extent: float, n: int) -> np.ndarray:
    h = extent / n
    return -0.5 * extent + (np.arange(n) + 0.5) * h


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def check_grid(extent: float, n: int, spec: NoiseSpectrum, geometry: Optional[LoopGeometry] = None) -> None:
    """Raise ``ConfigError`` naming the first grid bound that is violated."""
    if spec.is_white:
        raise UnsupportedSpectrumError("white noise has no finite-resolution grid realization")
    if not _is_power_of_two(n):
        raise ConfigError(f"grid points per side must be a power of two, got n={n}")
    if not extent > 0:
        raise ConfigError(f"grid extent must be positive, got L={extent!r}")

    xi = spec.correlation_length
    h = extent / n
    support = 0.0
    resolved = xi
    if geometry is not None:
        support = 2 * geometry.ring_radius + geometry.effective_separation
        resolved = min(geometry.annulus_width, xi)

    required_extent = EXTENT_FACTOR * max(support, xi)
    if extent < required_extent:
        raise ConfigError(f"grid extent L={extent:.4g} m violates L >= 8*max(2R+d, xi) = {required_extent:.4g} m")
    if h > resolved / RESOLUTION_FACTOR:
        raise ConfigError(f"grid spacing L/n={h:.4g} m violates L/n <= min(w, xi)/4 = "
                          f"{resolved / RESOLUTION_FACTOR:.4g} m")


def _wavenumbers(extent: float, n: int):
    h = extent / n
    kx = 2 * math.pi * fft.fftfreq(n, d=h)
    ky = 2 * math.pi * fft.rfftfreq(n, d=h)
    return np.hypot(kx[:, None], ky[None, :])


def _synthesis_filter(spec: NoiseSpectrum, extent: float, n: int) -> np.ndarray:
    # E[h²|FFT(m)|²/n²] = S(k) for unit-variance white noise under this filter
    h = extent / n
    return np.sqrt(spectrum_at(spec, _wavenumbers(extent, n))) / h


def _generator(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _realize(filt: np.ndarray, n: int, seed: int, index: int) -> np.ndarray:
    noise = _generator(seed, index).standard_normal((n, n))
    return fft.irfft2(fft.rfft2(noise) * filt, s=(n, n))


def synthesize_field(spec: NoiseSpectrum, extent: float, n: int, seed: int, realization: int = 0) -> FieldGrid:
    """Periodic Gaussian field with spectrum ``spec``; deterministic in all arguments."""
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    check_grid(extent, n, spec)
    values = _realize(_synthesis_filter(spec, extent, n), n, seed, realization)
    return FieldGrid(extent=extent, n=n, seed=seed, realization=values, index=realization)


def mc_flux_variance(geometry: LoopGeometry, spec: NoiseSpectrum, extent: float, n: int,
                     n_realizations: int, seed: int, supersample: int = 1,
                     max_workers: Optional[int] = None) -> McEstimate:
    """Estimate ⟨Φ²⟩ from Φ = Σᵢ K(rᵢ)·m(rᵢ)·h² over independent realizations."""
    if n_realizations < 2:
        raise ConfigError(f"n_realizations must be at least 2, got {n_realizations}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    check_grid(extent, n, spec, geometry)

    h = extent / n
    centres = cell_centres(extent, n)
    kernel = rasterize(geometry, centres, centres, supersample=supersample).ravel()
    filt = _synthesis_filter(spec, extent, n)
    logger.info(f"Monte Carlo: {geometry.kind.value}, xi={spec.correlation_length:.3e} m, "
                f"n={n}, L={extent:.3e} m, {n_realizations} realizations")

    def flux(index: int) -> float:
        return float(np.dot(kernel, _realize(filt, n, seed, index).ravel())) * h * h

    indices = range(n_realizations)
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            fluxes = np.array(list(pool.map(flux, indices)))
        logger.debug(f"Realizations evaluated on {max_workers} threads")
    else:
        fluxes = np.array([flux(i) for i in indices])

    squares = fluxes * fluxes
    mean_sq = math.fsum(squares) / n_realizations
    spread = math.fsum((squares - mean_sq) ** 2) / (n_realizations - 1)
    std_error = math.sqrt(spread / n_realizations)
    logger.info(f"Monte Carlo <Phi^2> = {mean_sq:.6e} ± {std_error:.1e}")
    return McEstimate(mean_sq=mean_sq, std_error=std_error, n_realizations=n_realizations, samples=fluxes)


def radial_periodogram(fields: Sequence[np.ndarray], extent: float, bin_width: Optional[float] = None,
                       spec: Optional[NoiseSpectrum] = None) -> RadialPeriodogram:
    """Average h²|FFT(m)|²/n² over the ensemble and over rings of width ``bin_width``.

    When ``spec`` is given, ``reference`` holds S(|k|) averaged over the same modes.
    """
    if len(fields) == 0:
        raise ParameterDomainError("periodogram needs at least one field")
    n = fields[0].shape[0]
    h = extent / n
    power = np.zeros((n, n))
    for values in fields:
        power += np.abs(fft.fft2(values)) ** 2
    power *= h * h / (n * n * len(fields))

    kx = 2 * math.pi * fft.fftfreq(n, d=h)
    k = np.hypot(kx[:, None], kx[None, :]).ravel()
    width = bin_width or 2 * math.pi / extent
    bins = np.floor(k / width).astype(int)
    counts = np.bincount(bins)
    filled = counts > 0
    k_mean = np.bincount(bins, weights=k)[filled] / counts[filled]
    ring_power = np.bincount(bins, weights=power.ravel())[filled] / counts[filled]

    reference = None
    if spec is not None:
        reference = np.bincount(bins, weights=spectrum_at(spec, k))[filled] / counts[filled]
    return RadialPeriodogram(k=k_mean, power=ring_power, counts=counts[filled], reference=reference)


def phase_average_oracle(d1: float, d2: float, sigma_phi: float, t: float,
                         n_samples: int = 1_000_000, seed: int = 0) -> float:
    """|⟨exp(i(D₁δΦ + D₂δΦ²/2)t)⟩| over δΦ ~ N(0, σ²), by stratified sampling."""
    if n_samples < 1:
        raise ParameterDomainError("n_samples must be positive")
    if sigma_phi < 0 or t < 0:
        raise ParameterDomainError("sigma_phi and t must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    # one uniform draw per equal-probability stratum of the Gaussian
    u = (np.arange(n_samples) + rng.random(n_samples)) / n_samples
    u = np.clip(u, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    delta = sigma_phi * special.ndtri(u)
    phase = (d1 * delta + 0.5 * d2 * delta * delta) * t
    return float(abs(complex(np.mean(np.cos(phase)), np.mean(np.sin(phase)))))
