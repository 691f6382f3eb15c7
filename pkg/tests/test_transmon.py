import math

import numpy as np
import pytest

from fluxnoise_toolkit.src.qubit.transmon import (
    FLUX_QUANTUM,
    TransmonDispersion,
    d1_d2,
    omega,
    per_weber,
)


def test_sweet_spot_frequency(transmon):
    expected = 2 * math.pi * (math.sqrt(8 * 20e9 * 0.25e9) - 0.25e9)
    assert float(omega(transmon, 0.0)) == pytest.approx(expected, rel=1e-14)
    assert float(transmon.frequency_ghz(0.0)) == pytest.approx(6.074555320336759, rel=1e-12)


def test_dispersion_is_even_and_periodic(transmon):
    phi = np.linspace(-0.45, 0.45, 37)
    assert np.allclose(omega(transmon, phi), omega(transmon, -phi), rtol=1e-15, atol=0.0)
    assert np.allclose(omega(transmon, phi + 1.0), omega(transmon, phi), rtol=1e-13, atol=0.0)


def test_sweet_spot_derivatives(transmon):
    d1, d2 = d1_d2(transmon, 0.0)
    assert d1 == 0.0
    assert d2 < 0


def test_derivative_symmetry(transmon):
    phi = np.linspace(0.01, 0.45, 45)
    d1_pos, d2_pos = d1_d2(transmon, phi)
    d1_neg, d2_neg = d1_d2(transmon, -phi)
    assert np.allclose(d1_neg, -d1_pos, rtol=1e-14, atol=0.0)
    assert np.allclose(d2_neg, d2_pos, rtol=1e-14, atol=0.0)


def test_derivatives_match_finite_differences(transmon):
    phi = np.linspace(-0.45, 0.45, 1001)
    step = 1e-6
    d1, d2 = d1_d2(transmon, phi)

    fd1 = (omega(transmon, phi + step) - omega(transmon, phi - step)) / (2 * step)
    away = np.abs(d1) > 1e-3 * np.max(np.abs(d1))
    assert np.all(np.abs(fd1[away] - d1[away]) <= 1e-6 * np.abs(d1[away]))
    assert np.all(np.abs(fd1[~away] - d1[~away]) <= 1e-6 * np.max(np.abs(d1)))

    # second derivative from differences of the analytic first derivative
    d1_plus, _ = d1_d2(transmon, phi + step)
    d1_minus, _ = d1_d2(transmon, phi - step)
    fd2 = (d1_plus - d1_minus) / (2 * step)
    assert np.allclose(fd2, d2, rtol=1e-6, atol=0.0)


def test_finite_difference_at_one_tenth(transmon):
    step = 1e-6
    d1, d2 = d1_d2(transmon, 0.1)
    fd1 = (omega(transmon, 0.1 + step) - omega(transmon, 0.1 - step)) / (2 * step)
    assert float(fd1) == pytest.approx(float(d1), rel=1e-6)
    fd2 = (d1_d2(transmon, 0.1 + step)[0] - d1_d2(transmon, 0.1 - step)[0]) / (2 * step)
    assert float(fd2) == pytest.approx(float(d2), rel=1e-6)


def test_degeneracy_is_rejected(transmon):
    with pytest.raises(ValueError):
        omega(transmon, 0.5)
    with pytest.raises(ValueError):
        d1_d2(transmon, [0.1, -0.5])


def test_transmon_regime_is_enforced():
    with pytest.raises(ValueError, match="below"):
        TransmonDispersion(ej_over_h=4e9, ec_over_h=0.25e9)


def test_per_weber_conversion(transmon):
    d1, d2 = d1_d2(transmon, 0.2)
    w1, w2 = per_weber(d1, d2)
    assert float(w1) == pytest.approx(float(d1) / FLUX_QUANTUM, rel=1e-15)
    assert float(w2) == pytest.approx(float(d2) / FLUX_QUANTUM ** 2, rel=1e-15)
    assert FLUX_QUANTUM == pytest.approx(2.067833848e-15, rel=1e-9)
