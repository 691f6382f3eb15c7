"""Shared fixtures."""

import textwrap

import pytest

from fluxnoise_toolkit.src.noise.geometry import GeometryKind, LoopGeometry
from fluxnoise_toolkit.src.noise.spectrum import NoiseSpectrum, SpectrumKind
from fluxnoise_toolkit.src.qubit.transmon import TransmonDispersion

UM = 1e-6


@pytest.fixture
def ring():
    return LoopGeometry(kind=GeometryKind.SINGLE_RING, ring_radius=5 * UM, annulus_width=1 * UM)


@pytest.fixture
def pair():
    return LoopGeometry(kind=GeometryKind.GRADIOMETRIC_PAIR, ring_radius=5 * UM, annulus_width=1 * UM,
                        separation=12 * UM)


@pytest.fixture
def gaussian():
    def make(xi, amplitude=1.0):
        return NoiseSpectrum(kind=SpectrumKind.GAUSSIAN_CORRELATED, correlation_length=xi, amplitude=amplitude)
    return make


@pytest.fixture
def transmon():
    return TransmonDispersion(ej_over_h=20e9, ec_over_h=0.25e9)


@pytest.fixture
def write_config(tmp_path):
    """Write a YAML config into tmp_path and return its path."""
    def write(text, name="run.yaml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return path
    return write


MINIMAL_CONFIG = """
geometry:
  kind: gradiometric_pair
  ring_radius: 5.0e-6
  annulus_width: 1.0e-6
  separation: 12.0e-6
spectrum:
  kind: gaussian_correlated
  correlation_length: 1.0e-6
"""
