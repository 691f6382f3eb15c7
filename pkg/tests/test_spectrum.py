import math

import numpy as np
import pytest
from scipy import integrate, special

from fluxnoise_toolkit.src.noise.spectrum import (
    NoiseSpectrum,
    SpectrumKind,
    correlation_real,
    hankel_inverse,
    peak_wavenumber_scale,
    spectrum_at,
)
from fluxnoise_toolkit.src.utils import UnsupportedSpectrumError

UM = 1e-6


def test_gaussian_spectrum_values(gaussian):
    spec = gaussian(2 * UM)
    xi = 2 * UM
    assert spectrum_at(spec, 0.0) == pytest.approx(xi ** 2, rel=1e-15)
    assert spectrum_at(spec, 1 / xi) == pytest.approx(xi ** 2 / math.e, rel=1e-15)
    assert peak_wavenumber_scale(spec) == pytest.approx(1 / xi)


def test_gaussian_spectrum_is_positive_and_decreasing(gaussian):
    k = np.linspace(0.0, 5e6, 200)
    values = spectrum_at(gaussian(1 * UM), k)
    assert np.all(values >= 0)
    assert np.all(np.diff(values) < 0)


def test_white_spectrum_is_constant():
    spec = NoiseSpectrum(kind=SpectrumKind.WHITE, amplitude=2.5)
    assert np.all(spectrum_at(spec, [0.0, 1.0, 1e9]) == 2.5)
    with pytest.raises(UnsupportedSpectrumError):
        peak_wavenumber_scale(spec)


@pytest.mark.parametrize("xi", [0.0, -1e-6])
def test_non_positive_correlation_length_is_rejected(xi):
    with pytest.raises(ValueError):
        NoiseSpectrum(kind=SpectrumKind.GAUSSIAN_CORRELATED, correlation_length=xi)


def test_gaussian_spectrum_requires_correlation_length():
    with pytest.raises(ValueError):
        NoiseSpectrum(kind=SpectrumKind.GAUSSIAN_CORRELATED, correlation_length=None)


def test_negative_wavenumber_is_rejected(gaussian):
    with pytest.raises(ValueError):
        spectrum_at(gaussian(1 * UM), -1.0)


def test_correlation_closed_form(gaussian):
    spec = gaussian(1 * UM, amplitude=3.0)
    assert correlation_real(spec, 0.0) == pytest.approx(3.0 / (4 * math.pi), rel=1e-15)
    assert correlation_real(spec, 2 * UM) == pytest.approx(3.0 / (math.e * 4 * math.pi), rel=1e-15)


def test_correlation_matches_hankel_oracle(gaussian):
    spec = gaussian(1 * UM)
    assert hankel_inverse(spec, 3 * UM) == pytest.approx(float(correlation_real(spec, 3 * UM)), rel=1e-6)


def test_white_correlation_is_delta():
    spec = NoiseSpectrum(kind=SpectrumKind.WHITE, amplitude=1.0)
    with pytest.raises(UnsupportedSpectrumError):
        correlation_real(spec, 0.0)
    assert correlation_real(spec, 1 * UM) == 0.0
    with pytest.raises(UnsupportedSpectrumError):
        hankel_inverse(spec, 1 * UM)


@pytest.mark.parametrize("k_xi", np.geomspace(1e-3, 4.0, 12))
def test_transform_pair_round_trip(gaussian, k_xi):
    xi = 1 * UM
    spec = gaussian(xi)

    # S(k) = 2π ∫ C(r) J0(kr) r dr, in units of u = r/ξ
    def integrand(u):
        return float(correlation_real(spec, u * xi)) * special.j0(k_xi * u) * u

    value, _ = integrate.quad(integrand, 0.0, 15.0, epsabs=1e-15, epsrel=1e-12, limit=200)
    recovered = 2 * math.pi * value * xi ** 2
    assert recovered == pytest.approx(float(spectrum_at(spec, k_xi / xi)), rel=1e-5)


def test_spectrum_copies(gaussian):
    spec = gaussian(1 * UM, amplitude=2.0)
    assert spec.with_correlation_length(3 * UM).correlation_length == 3 * UM
    assert spec.with_correlation_length(3 * UM).amplitude == 2.0
    assert spec.with_amplitude(0.0).amplitude == 0.0
