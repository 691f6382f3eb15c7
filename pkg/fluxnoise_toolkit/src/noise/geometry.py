"""Idealized SQUID loop geometries and their flux sensitivity kernels.

A loop is modelled as a uniform-weight annulus (X-mon) or as two
counter-wound annuli whose centres are separated along the x axis
(8-mon). The kernel K(r) maps an out-of-plane magnetization at r onto
threaded flux; its Fourier transform acts as a spatial filter on the
magnetization noise spectrum.
"""

import logging
import math
from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from ..utils import ParameterDomainError

logger = logging.getLogger(__name__)

# Below this argument J1(x)/x is replaced by its series; keeps k = 0 exact.
_SMALL_ARGUMENT = 1e-8
# Below this argument 1 - J0(x) is taken from its series to avoid cancellation.
_J0_SERIES_LIMIT = 1e-2


class GeometryKind(str, Enum):
    """Loop topology."""

    SINGLE_RING = "single_ring"
    GRADIOMETRIC_PAIR = "gradiometric_pair"


class LoopGeometry(BaseModel):
    """Idealized annular ring or counter-wound ring pair (lengths in metres)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: GeometryKind = GeometryKind.SINGLE_RING
    ring_radius: float = Field(5e-6, gt=0, description="Mean radius R of each ring")
    annulus_width: float = Field(1e-6, description="Radial width w of the sensitive band")
    separation: float = Field(12e-6, ge=0, description="Centre-to-centre distance d (pair only)")
    coupling_amplitude: float = Field(1.0, gt=0, description="Uniform kernel weight inside the band")

    @model_validator(mode="after")
    def _check_annulus(self) -> "LoopGeometry":
        if not (0 < self.annulus_width < 2 * self.ring_radius):
            raise ParameterDomainError(
                f"annulus_width must satisfy 0 < w < 2R, got w={self.annulus_width!r} "
                f"with R={self.ring_radius!r}"
            )
        return self

    @property
    def inner_radius(self) -> float:
        return self.ring_radius - 0.5 * self.annulus_width

    @property
    def outer_radius(self) -> float:
        return self.ring_radius + 0.5 * self.annulus_width

    @property
    def is_pair(self) -> bool:
        return self.kind == GeometryKind.GRADIOMETRIC_PAIR

    @property
    def effective_separation(self) -> float:
        """Separation that enters the filter; zero for a single ring."""
        return self.separation if self.is_pair else 0.0

    @property
    def extent(self) -> float:
        """Diameter of the region carrying kernel weight."""
        return 2 * self.outer_radius + self.effective_separation

    @property
    def reference_length(self) -> float:
        """Length against which correlation lengths are compared for regime tags."""
        if self.is_pair and self.separation > 0:
            return self.separation
        return 2 * self.ring_radius + self.annulus_width

    def single_ring(self) -> "LoopGeometry":
        """Return the X-mon ring that makes up this geometry."""
        return self.model_copy(update={"kind": GeometryKind.SINGLE_RING})

    def as_pair(self, separation: float) -> "LoopGeometry":
        """Return the counter-wound pair built from this ring."""
        return LoopGeometry(
            kind=GeometryKind.GRADIOMETRIC_PAIR,
            ring_radius=self.ring_radius,
            annulus_width=self.annulus_width,
            separation=separation,
            coupling_amplitude=self.coupling_amplitude,
        )


def sub_ring_centers(geometry: LoopGeometry) -> Tuple[Tuple[float, float], ...]:
    """Centres of the rings with positive and negative winding, in that order."""
    if not geometry.is_pair:
        return ((0.0, 0.0),)
    half = 0.5 * geometry.separation
    return ((-half, 0.0), (half, 0.0))


def _annulus_indicator(geometry: LoopGeometry, r: np.ndarray, center: Tuple[float, float]) -> np.ndarray:
    rho = np.hypot(r[..., 0] - center[0], r[..., 1] - center[1])
    return ((rho >= geometry.inner_radius) & (rho <= geometry.outer_radius)).astype(float)


def kernel_real(geometry: LoopGeometry, r) -> np.ndarray:
    """Real-space kernel K(r); ``r`` has a trailing dimension of size 2."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 2:
        raise ParameterDomainError(f"positions need a trailing dimension of 2, got shape {r.shape}")

    centers = sub_ring_centers(geometry)
    value = _annulus_indicator(geometry, r, centers[0])
    if geometry.is_pair:
        value = value - _annulus_indicator(geometry, r, centers[1])
    return geometry.coupling_amplitude * value


def _jinc(x: np.ndarray) -> np.ndarray:
    """J1(x)/x with the analytic limit 1/2 at the origin."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SMALL_ARGUMENT
    safe = np.where(small, 1.0, x)
    return np.where(small, 0.5 - x * x / 16.0, special.j1(safe) / safe)


def one_minus_j0(x) -> np.ndarray:
    """1 - J0(x), accurate for small arguments."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    series = x2 / 4.0 - x2 * x2 / 64.0 + x2 * x2 * x2 / 2304.0
    return np.where(np.abs(x) < _J0_SERIES_LIMIT, series, 1.0 - special.j0(x))


def kernel_fourier(geometry: LoopGeometry, k) -> np.ndarray:
    """Annulus transform K̃_X(|k|) of the ring making up ``geometry``.

    K̃_X(k) = A·2π[R₂J₁(kR₂) − R₁J₁(kR₁)]/k, written with J₁(x)/x so the
    k → 0 limit A·π(R₂² − R₁²) is exact.
    """
    k = np.abs(np.asarray(k, dtype=float))
    r1, r2 = geometry.inner_radius, geometry.outer_radius
    transform = 2 * math.pi * (r2 * r2 * _jinc(k * r2) - r1 * r1 * _jinc(k * r1))
    return geometry.coupling_amplitude * transform


def kernel_fourier_sq(geometry: LoopGeometry, k) -> np.ndarray:
    """Filter |K̃(k)|² for a 2D wavevector (trailing dimension 2)."""
    k = np.asarray(k, dtype=float)
    if k.shape[-1] != 2:
        raise ParameterDomainError(f"wavevectors need a trailing dimension of 2, got shape {k.shape}")

    k_mag = np.hypot(k[..., 0], k[..., 1])
    single = kernel_fourier(geometry, k_mag) ** 2
    if not geometry.is_pair:
        return single
    # separation lies along x, so k·d = k_x d
    return 4.0 * single * np.sin(0.5 * k[..., 0] * geometry.separation) ** 2


def angular_average_filter(geometry: LoopGeometry, k) -> np.ndarray:
    """Angular average (1/2π)∮|K̃(k, θ)|² dθ at radial wavenumber ``k``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ParameterDomainError("radial wavenumber must be non-negative")

    single = kernel_fourier(geometry, k) ** 2
    if not geometry.is_pair:
        return single
    # <sin²(kd cosθ / 2)>_θ = (1 − J0(kd)) / 2
    return 2.0 * single * one_minus_j0(k * geometry.separation)


def kernel_integral(geometry: LoopGeometry) -> float:
    """∫K d²r, the zero-wavevector coupling."""
    if geometry.is_pair:
        return 0.0
    return float(kernel_fourier(geometry, 0.0))


def _lens_area(a: float, b: float, d: float) -> float:
    """Intersection area of two disks of radii ``a``, ``b`` with centres ``d`` apart."""
    if d >= a + b:
        return 0.0
    if d <= abs(a - b):
        return math.pi * min(a, b) ** 2
    alpha = math.acos(min(1.0, (d * d + a * a - b * b) / (2 * d * a)))
    beta = math.acos(min(1.0, (d * d + b * b - a * a) / (2 * d * b)))
    kite = 0.5 * math.sqrt(max(0.0, (-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b)))
    return a * a * alpha + b * b * beta - kite


def annulus_overlap_area(geometry: LoopGeometry) -> float:
    """Area shared by the two annuli of a gradiometric pair."""
    r1, r2, d = geometry.inner_radius, geometry.outer_radius, geometry.separation
    overlap = _lens_area(r2, r2, d) - 2 * _lens_area(r1, r2, d) + _lens_area(r1, r1, d)
    return max(0.0, overlap)


def kernel_square_integral(geometry: LoopGeometry) -> float:
    """Exact ∫K² d²r, the real-space side of Parseval's identity."""
    r1, r2 = geometry.inner_radius, geometry.outer_radius
    area = math.pi * (r2 * r2 - r1 * r1)
    weight = geometry.coupling_amplitude ** 2
    if not geometry.is_pair:
        return weight * area
    # opposite windings cancel where the annuli overlap
    return weight * 2.0 * (area - annulus_overlap_area(geometry))


def rasterize(geometry: LoopGeometry, x: np.ndarray, y: np.ndarray, supersample: int = 1) -> np.ndarray:
    """Cell-averaged kernel on the grid of cell centres ``x`` × ``y``.

    ``supersample`` sub-samples each uniform cell ``supersample``² times;
    ``supersample=1`` is plain cell-centre sampling.
    """
    if supersample < 1:
        raise ParameterDomainError("supersample must be at least 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hx = x[1] - x[0] if x.size > 1 else 0.0
    hy = y[1] - y[0] if y.size > 1 else 0.0

    fractions = (np.arange(supersample) + 0.5) / supersample - 0.5
    total = np.zeros((x.size, y.size))
    for fx in fractions:
        for fy in fractions:
            xx, yy = np.meshgrid(x + fx * hx, y + fy * hy, indexing="ij")
            total += kernel_real(geometry, np.stack((xx, yy), axis=-1))

    logger.debug(f"Rasterized {geometry.kind.value} kernel on {x.size}x{y.size} grid, supersample={supersample}")
    return total / supersample ** 2
