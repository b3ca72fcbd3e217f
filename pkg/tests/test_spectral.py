import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import jv, sici

from gmclab import spectral as sp
from gmclab.errors import GateError, ValidationError


def test_si_against_scipy():
    x = np.concatenate([np.linspace(1e-8, 4.0, 1500),
                        np.geomspace(4.0, 1e4, 2500)])
    assert np.max(np.abs(sp.si(x) - sici(x)[0])) < 1e-12


def test_si_scalar_and_sign():
    assert sp.si(0.0) == 0.0
    assert abs(sp.si(-2.0) + sp.si(2.0)) < 1e-15


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5, 2.0])
def test_bessel_against_scipy(nu):
    x = np.geomspace(1e-3, 1e4, 3000)
    assert np.max(np.abs(sp.bessel_j(nu, x) - jv(nu, x))) < 1e-10


def test_bessel_half_closed_form():
    # J_1/2(x) = sqrt(2/(pi x)) sin x: zero at pi, 2/pi at pi/2
    assert abs(sp.bessel_j(0.5, np.pi)) < 1e-12
    assert abs(sp.bessel_j(0.5, np.pi / 2) - 2.0 / np.pi) < 1e-12


def test_bessel_at_origin_limit():
    assert abs(sp.bessel_j(0.0, 1e-8) - 1.0) < 1e-8


def test_bessel_rejects_bad_input():
    with pytest.raises(ValidationError):
        sp.bessel_j(-1.0, 1.0)
    with pytest.raises(ValidationError):
        sp.bessel_j(0.0, 0.0)


def test_si_minus_sin_nonnegative_and_cubic():
    x = np.geomspace(1e-8, 300.0, 4000)
    l = sp.si_minus_sin(x)
    assert np.all(l >= -1e-12)
    # l(x) = x^3/9 - x^5/150 + ...
    assert abs(sp.si_minus_sin(1e-3) / 1e-9 - 1.0 / 9.0) < 1e-6


@pytest.mark.parametrize("d,expected", [
    (1, 2.0),                       # 2 int_0^1 ln(1/r) dr
    (2, np.pi / 2.0),               # 2 pi int r ln(1/r) dr
    (3, 4.0 * np.pi / 9.0),         # 4 pi int r^2 ln(1/r) dr
    (4, np.pi ** 2 / 8.0),
])
def test_logplus_hat_zero_frequency_is_integral(d, expected):
    # fhat(0) equals the integral of f when f is integrable
    assert abs(sp.logplus_hat(0.0, d) - expected) < 1e-12
    surf = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi, 4: 2 * np.pi ** 2}[d]
    val, _ = quad(lambda r: surf * r ** (d - 1) * np.log(1 / r), 0, 1)
    assert abs(sp.logplus_hat(0.0, d) - val) < 1e-9


def test_logplus_hat_3d_nonnegative_everywhere():
    xi = np.geomspace(1e-4, 1e3, 5000)
    vals = sp.logplus_hat_3d(xi)
    assert np.all(vals >= -1e-12)


def test_logplus_hat_3d_large_xi_envelope():
    # |Si| <= pi/2 + eps, |sin| <= 1: fhat <= (pi/2 + 1)/(2 pi^2 xi^3)
    xi = np.geomspace(10.0, 1e4, 50)
    bound = (np.pi / 2 + 1.0) / (2.0 * np.pi ** 2 * xi ** 3)
    assert np.all(sp.logplus_hat_3d(xi) <= bound)


def test_logplus_hat_small_xi_expansion_3d():
    # l(x) ~ x^3/9 gives fhat -> 4 pi /9 as xi -> 0
    assert abs(sp.logplus_hat_3d(1e-6) - 4 * np.pi / 9) < 1e-9


def test_radial_fourier_indicator_d1():
    # cosine transform of [0, 1]: sin(2 pi xi)/(pi xi)
    ind = lambda r: (r <= 1.0).astype(float)
    for xi in (0.2, 0.37, 1.9):
        val, err = sp.radial_fourier(ind, 1, xi, support=1.0)
        assert abs(val - np.sin(2 * np.pi * xi) / (np.pi * xi)) < 5e-9


def test_radial_fourier_matches_closed_form_d3():
    prof = lambda r: np.where(r < 1.0, np.log(1.0 / np.maximum(r, 1e-300)), 0.0)
    for xi in np.geomspace(1e-2, 1e3, 12):
        val, err = sp.radial_fourier(prof, 3, xi, support=1.0)
        assert abs(val - sp.logplus_hat_3d(xi)) < 1e-8


def test_radial_fourier_zero_frequency_d3():
    prof = lambda r: np.where(r < 1.0, np.log(1.0 / np.maximum(r, 1e-300)), 0.0)
    val, err = sp.radial_fourier(prof, 3, 0.0, support=1.0)
    assert abs(val - 4 * np.pi / 9) < 1e-9


def test_triangle_transform_is_squared_sinc():
    # (1 - |x|)_+ in d=1 transforms to (sin(pi xi)/(pi xi))^2 >= 0
    tri = lambda r: np.maximum(1.0 - r, 0.0)
    for xi in (0.3, 0.5, 1.7, 2.5):
        val, _ = sp.radial_fourier(tri, 1, xi, support=1.0)
        assert abs(val - (np.sinc(xi)) ** 2) < 1e-10
        assert val >= -1e-12


def _log_profile(r):
    return np.where(r < 1.0,
                    np.log(1.0 / np.maximum(r, 1e-300)), 0.0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_checker_nonnegative_low_dimensions(d):
    grid = sp.default_check_grid(1.0, xi_max=120.0)
    rep = sp.check_positive_definite(_log_profile, d, grid, support=1.0)
    assert rep.certificate == sp.CERT_NONNEGATIVE


def test_checker_oscillating_d4():
    grid = sp.default_check_grid(1.0, xi_max=120.0)
    rep = sp.check_positive_definite(_log_profile, 4, grid, support=1.0)
    assert rep.certificate == sp.CERT_OSCILLATING


def test_checker_gaussian_profile_positive():
    ga = lambda r: np.exp(-r * r / 2.0)
    grid = sp.default_check_grid(8.0, xi_max=20.0)
    rep = sp.check_positive_definite(ga, 2, grid, support=8.0)
    assert rep.certificate == sp.CERT_NONNEGATIVE


def test_checker_refuses_short_grid():
    grid = np.geomspace(0.01, 10.0, 64)   # only 10 periods
    with pytest.raises(ValidationError):
        sp.check_positive_definite(_log_profile, 3, grid, support=1.0)


def test_checker_refuses_coarse_grid():
    grid = np.geomspace(0.01, 120.0, 64)  # log-only: no dense window
    with pytest.raises(GateError) as exc:
        sp.check_positive_definite(_log_profile, 3, grid, support=1.0)
    assert "required_spacing" in exc.value.detail


def test_profile_csv_roundtrip(tmp_path):
    grid = sp.default_check_grid(1.0, xi_max=60.0)
    rep = sp.check_positive_definite(_log_profile, 3, grid, support=1.0)
    path = tmp_path / "prof.csv"
    rep.write(path)
    back = sp.SpectralProfile.read(path)
    assert back.certificate == rep.certificate
    assert back.dimension == 3
    np.testing.assert_allclose(back.fhat, rep.fhat, rtol=0, atol=0)
