"""Loop geometries, noise spectra and momentum-space flux variance."""

from .geometry import GeometryKind, LoopGeometry
from .spectrum import NoiseSpectrum, SpectrumKind
from .variance import (
    VarianceResult,
    flux_variance,
    suppression_factor,
    suppression_point,
    suppression_sweep,
    variance_sweep,
)

__all__ = [
    "GeometryKind",
    "LoopGeometry",
    "NoiseSpectrum",
    "SpectrumKind",
    "VarianceResult",
    "flux_variance",
    "suppression_factor",
    "suppression_point",
    "suppression_sweep",
    "variance_sweep",
]
