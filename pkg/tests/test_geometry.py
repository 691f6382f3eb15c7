import math

import numpy as np
import pytest
from scipy import integrate, special

from fluxnoise_toolkit.src.noise.geometry import (
    GeometryKind,
    LoopGeometry,
    angular_average_filter,
    annulus_overlap_area,
    kernel_fourier,
    kernel_fourier_sq,
    kernel_integral,
    kernel_real,
    kernel_square_integral,
    rasterize,
    sub_ring_centers,
)
from fluxnoise_toolkit.src.noise.quadrature import panel_integrate

UM = 1e-6


def _pair(d, R=5 * UM, w=1 * UM, amp=1.0):
    return LoopGeometry(kind=GeometryKind.GRADIOMETRIC_PAIR, ring_radius=R, annulus_width=w, separation=d,
                        coupling_amplitude=amp)


def test_kernel_inside_annulus_is_amplitude(ring):
    assert kernel_real(ring, [5 * UM, 0.0]) == 1.0
    assert kernel_real(ring, [0.0, -5 * UM]) == 1.0


def test_kernel_vanishes_at_origin(ring):
    assert kernel_real(ring, [0.0, 0.0]) == 0.0


def test_pair_kernel_signs_and_cancellation():
    pair = _pair(9 * UM)
    left, right = sub_ring_centers(pair)
    assert left == (-4.5 * UM, 0.0) and right == (4.5 * UM, 0.0)
    # on the perpendicular bisector and inside both annuli
    assert kernel_real(pair, [0.0, 2 * UM]) == 0.0
    assert kernel_real(pair, [-9.5 * UM, 0.0]) == 1.0
    assert kernel_real(pair, [9.5 * UM, 0.0]) == -1.0


def test_kernel_real_rejects_bad_shape(ring):
    with pytest.raises(ValueError):
        kernel_real(ring, [1.0, 2.0, 3.0])


@pytest.mark.parametrize("w", [0.0, 10 * UM, 12 * UM, -1 * UM])
def test_invalid_annulus_width_is_rejected(w):
    with pytest.raises(ValueError, match="annulus_width"):
        LoopGeometry(ring_radius=5 * UM, annulus_width=w)


def test_zero_wavevector_equals_kernel_integral(ring):
    area = math.pi * ((5.5 * UM) ** 2 - (4.5 * UM) ** 2)
    assert kernel_fourier_sq(ring, [0.0, 0.0]) == pytest.approx(area ** 2, rel=1e-14)
    assert kernel_integral(ring) == pytest.approx(area, rel=1e-14)
    assert kernel_integral(_pair(12 * UM)) == 0.0


def test_coincident_pair_filter_vanishes():
    pair = _pair(0.0)
    k = np.random.default_rng(1).normal(scale=1e6, size=(50, 2))
    assert np.all(kernel_fourier_sq(pair, k) == 0.0)


def test_annulus_transform_matches_real_space_quadrature(ring):
    k = 1.0 / ring.ring_radius
    # ∫K e^{-ik·r} d²r in polar coordinates, k along x
    value, _ = integrate.dblquad(
        lambda theta, rho: math.cos(k * rho * math.cos(theta)) * rho,
        ring.inner_radius, ring.outer_radius, 0.0, 2 * math.pi,
        epsabs=0.0, epsrel=1e-12,
    )
    assert float(kernel_fourier(ring, k)) == pytest.approx(value, rel=1e-8)


def test_gradiometric_identity(pair, ring):
    k = np.random.default_rng(7).normal(scale=5e5, size=(200, 2))
    expected = 4 * kernel_fourier_sq(ring, k) * np.sin(0.5 * k[:, 0] * pair.separation) ** 2
    assert np.allclose(kernel_fourier_sq(pair, k), expected, rtol=1e-13, atol=0.0)


def test_zero_mode_rejection():
    for d in (1 * UM, 12 * UM, 100 * UM):
        assert kernel_fourier_sq(_pair(d), [0.0, 0.0]) == 0.0
        assert angular_average_filter(_pair(d), 0.0) == 0.0


def test_angular_average_matches_trapezoidal_quadrature():
    pair = _pair(10 * UM)
    k = 1e5
    theta = 2 * math.pi * np.arange(512) / 512
    vectors = np.stack((k * np.cos(theta), k * np.sin(theta)), axis=-1)
    expected = np.mean(kernel_fourier_sq(pair, vectors))
    assert float(angular_average_filter(pair, k)) == pytest.approx(expected, rel=1e-10)


def test_angular_average_limits(ring):
    pair = _pair(10 * UM)
    single = kernel_fourier(ring, 1e2) ** 2
    # small kd: |K̃|²(kd)²/2
    kd = 1e2 * pair.separation
    assert float(angular_average_filter(pair, 1e2)) == pytest.approx(single * kd ** 2 / 2, rel=1e-6)
    # large kd approaches 2|K̃|² up to the J0 tail
    k = 5e8
    ratio = float(angular_average_filter(pair, k) / (2 * kernel_fourier(ring, k) ** 2))
    assert abs(ratio - 1) <= abs(special.j0(k * pair.separation)) + 1e-12


def test_angular_average_is_isotropic_filter_for_single_ring(ring):
    k = np.linspace(0.0, 2e6, 11)
    assert np.array_equal(angular_average_filter(ring, k), kernel_fourier(ring, k) ** 2)


def test_angular_average_rejects_negative_wavenumber(ring):
    with pytest.raises(ValueError):
        angular_average_filter(ring, -1.0)


def test_amplitude_scaling_is_quadratic():
    base = _pair(12 * UM)
    scaled = _pair(12 * UM, amp=3.0)
    k = np.random.default_rng(3).normal(scale=5e5, size=(40, 2))
    assert np.allclose(kernel_fourier_sq(scaled, k), 9.0 * kernel_fourier_sq(base, k), rtol=1e-13, atol=0.0)
    assert kernel_square_integral(scaled) == pytest.approx(9.0 * kernel_square_integral(base), rel=1e-14)


def test_square_integral_without_overlap_is_twice_single(ring):
    pair = ring.as_pair(12 * UM)
    assert annulus_overlap_area(pair) == 0.0
    assert kernel_square_integral(pair) == pytest.approx(2 * kernel_square_integral(ring), rel=1e-15)


def test_square_integral_with_overlap_matches_raster():
    pair = _pair(9 * UM)
    h = 0.01 * UM
    x = np.arange(-11 * UM, 11 * UM, h) + 0.5 * h
    y = np.arange(-6 * UM, 6 * UM, h) + 0.5 * h
    grid = rasterize(pair, x, y)
    assert annulus_overlap_area(pair) > 0
    assert np.sum(grid ** 2) * h * h == pytest.approx(kernel_square_integral(pair), rel=2e-3)


@pytest.mark.parametrize("geometry", [
    LoopGeometry(ring_radius=5 * UM, annulus_width=1 * UM),
    _pair(12 * UM),
    _pair(9 * UM),
], ids=["ring", "pair", "overlapping-pair"])
def test_parseval_consistency(geometry):
    upper = 2e10
    truncated = panel_integrate(lambda k: angular_average_filter(geometry, k) * k, upper, 100_000) / (2 * math.pi)
    # each ring's |K̃|² averages to 8πRA²/k³ at large k
    rings = 2 if geometry.is_pair else 1
    tail = rings * 4 * geometry.ring_radius * geometry.coupling_amplitude ** 2 / upper
    assert truncated + tail == pytest.approx(kernel_square_integral(geometry), rel=1e-6)


def test_rasterize_supersampling_converges_to_area(ring):
    h = 0.25 * UM
    x = np.arange(-8 * UM, 8 * UM, h) + 0.5 * h
    area = math.pi * ((5.5 * UM) ** 2 - (4.5 * UM) ** 2)
    fine = np.sum(rasterize(ring, x, x, supersample=4)) * h * h
    assert fine == pytest.approx(area, rel=1e-2)
    with pytest.raises(ValueError):
        rasterize(ring, x, x, supersample=0)


def test_geometry_helpers(ring):
    pair = ring.as_pair(12 * UM)
    assert pair.is_pair and not ring.is_pair
    assert pair.single_ring() == ring.model_copy(update={"separation": 12 * UM})
    assert pair.reference_length == 12 * UM
    assert ring.reference_length == pytest.approx(11 * UM)
    assert pair.extent == pytest.approx(23 * UM)
