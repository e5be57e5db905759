import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snvtune.errors import (
    AmbiguousWidthError,
    BesselDomainError,
    DegenerateAbscissaError,
    DivisionDomainError,
    FitDivergedError,
    FlatSpectrumError,
    UnresolvedSidebandError,
)
from snvtune.spectroscopy.bessel import bessel_j, bessel_j_orders, sideband_weight_derivs, sideband_weights
from snvtune.spectroscopy.fit import (
    comb_jacobian,
    comb_model,
    extract_delta_ac,
    fit_linear,
    fit_lorentzian,
    fit_sideband_comb,
    levenberg_marquardt,
    lorentzian_jacobian,
    lorentzian_model,
    modulation_index_from_phonons,
    phonon_number,
)
from snvtune.spectroscopy.synth import (
    PLESpectrum,
    default_k_max,
    synth_sidebands,
    synth_slow_modulation,
    synth_static,
)

GRID = np.linspace(-5.0, 5.0, 2001)


def slow_closed_form(x, fwhm, a):
    """Phase average of a unit-peak Lorentzian under sinusoidal detuning, in closed form."""
    h = fwhm / 2
    return h * np.real(1.0 / np.sqrt((h - 1j * x) ** 2 + a**2))


# bessel -----------------------------------------------------------------------------

def test_bessel_examples():
    assert bessel_j(0, 0.0) == 1.0
    assert abs(bessel_j(0, 2.404826)) < 1e-5
    _, w = sideband_weights(3.0, 20)
    assert w.sum() == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 30), st.floats(-50, 50))
def test_bessel_against_series(k, x):
    ref = float(mpmath.besselj(k, x))
    got = bessel_j(k, x)
    assert abs(got) <= 1.0
    assert abs(got - ref) <= 1e-10 * max(abs(ref), 1e-300) or abs(got - ref) < 1e-15


def test_bessel_domain():
    with pytest.raises(BesselDomainError):
        bessel_j(31, 1.0)
    with pytest.raises(BesselDomainError):
        bessel_j(0, 51.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 2))
def test_sideband_normalization(beta):
    _, w = sideband_weights(beta, default_k_max(beta))
    assert w.sum() >= 0.999


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 5))
def test_weight_derivative(beta):
    k = default_k_max(beta)
    h = 1e-6
    fd = (sideband_weights(beta + h, k)[1] - sideband_weights(beta - h, k)[1]) / (2 * h)
    np.testing.assert_allclose(sideband_weight_derivs(beta, k), fd, atol=1e-7)


def test_orders_vector():
    np.testing.assert_allclose(bessel_j_orders(5, 1.3), [float(mpmath.besselj(k, 1.3)) for k in range(6)],
                               rtol=1e-12)


# synthesis --------------------------------------------------------------------------

def test_static_values():
    s = synth_static(0.3, 0.12, 10.0, 2.0, np.array([0.24, 0.3, 0.36]))
    np.testing.assert_allclose(s.signal, [7.0, 12.0, 7.0], rtol=1e-14)


def test_slow_zero_equals_static():
    a = synth_slow_modulation(0.1, 0.12, 0.0, GRID).signal
    b = synth_static(0.1, 0.12, 1.0, 0.0, GRID).signal
    assert np.max(np.abs(a - b)) < 1e-12


@pytest.mark.parametrize("delta", [0.05, 0.3, 1.9])
def test_slow_closed_form(delta):
    s = synth_slow_modulation(0.0, 0.12, delta, GRID)
    np.testing.assert_allclose(s.signal, slow_closed_form(GRID, 0.12, delta), atol=1e-10)


def test_slow_horns():
    fwhm = 0.12
    delta = 10 * fwhm
    x = np.linspace(-2, 2, 40001)
    y = synth_slow_modulation(0.0, fwhm, delta, x).signal
    peaks = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] > y[2:])) + 1
    sep = x[peaks[-1]] - x[peaks[0]]
    assert 1.9 * delta <= sep <= 2.0 * delta


@pytest.mark.parametrize("delta", [0.0, 0.5, 1.9])
def test_slow_area(delta):
    x = np.linspace(-50, 50, 20001)  # tails beyond the window cancel in the ratio
    a = np.trapezoid(synth_slow_modulation(0.0, 0.12, delta, x).signal, x)
    b = np.trapezoid(synth_static(0.0, 0.12, 1.0, 0.0, x).signal, x)
    assert a == pytest.approx(b, rel=1e-3)


@pytest.mark.parametrize("beta", [0.5, 1.0, 3.0])
def test_sideband_area(beta):
    x = np.linspace(-50, 50, 20001)
    a = np.trapezoid(synth_sidebands(0.0, 0.12, beta, 1.0, x).signal, x)
    b = np.trapezoid(synth_static(0.0, 0.12, 1.0, 0.0, x).signal, x)
    assert a == pytest.approx(b, rel=5e-3)


def test_sideband_examples():
    x = np.array([-1.0, 0.0, 1.0])
    s0 = synth_sidebands(0.0, 0.12, 0.0, 1.0, x).signal
    assert s0[1] == pytest.approx(1.0) and s0[0] < 0.004
    s = synth_sidebands(0.0, 0.12, 2.404826, 1.0, x, k_max=12).signal
    # remaining carrier signal is Lorentzian tails of neighbours; compare pure weights
    _, w = sideband_weights(2.404826, 12)
    assert w[12] < 1e-4 * w[13]
    assert s[0] == pytest.approx(s[2], rel=1e-12)


def test_sideband_overlap_warns():
    with pytest.warns(RuntimeWarning):
        synth_sidebands(0.0, 0.5, 1.0, 1.0, GRID)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(0.05, 0.5), st.floats(0, 3), st.floats(0, 3))
def test_symmetry(center, fwhm, delta, beta):
    x = center + np.linspace(-4, 4, 801)
    for spec in (synth_static(center, fwhm, 1.0, 0.0, x),
                 synth_slow_modulation(center, fwhm, delta, x)):
        np.testing.assert_allclose(spec.signal, spec.signal[::-1], atol=1e-10)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = synth_sidebands(center, fwhm, beta, 1.0, x).signal
    np.testing.assert_allclose(s, s[::-1], atol=1e-10)


# Jacobians -------------------------------------------------------------------------

def _fd_jacobian(f, p, scale):
    cols = []
    for i in range(len(p)):
        h = 1e-6 * scale[i]
        up, dn = np.array(p, float), np.array(p, float)
        up[i] += h
        dn[i] -= h
        cols.append((f(up) - f(dn)) / (2 * h))
    return np.stack(cols, axis=1)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(0.05, 0.5), st.floats(1, 100), st.floats(0, 10))
def test_lorentzian_jacobian(c, w, a, b):
    p = np.array([c, w, a, b])
    x = np.linspace(-2, 2, 101)
    fd = _fd_jacobian(lambda q: lorentzian_model(q, x), p, [1.0, w, a, 1.0])
    np.testing.assert_allclose(lorentzian_jacobian(p, x), fd, rtol=1e-4, atol=1e-6 * a)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.3, 0.3), st.floats(0.05, 0.3), st.floats(0.1, 3), st.floats(1, 100), st.floats(0, 10))
def test_comb_jacobian(c, w, beta, a, b):
    p = np.array([c, w, beta, a, b])
    x = np.linspace(-4, 4, 201)
    k = default_k_max(beta)
    fd = _fd_jacobian(lambda q: comb_model(q, x, 1.0, k), p, [1.0, w, 1.0, a, 1.0])
    np.testing.assert_allclose(comb_jacobian(p, x, 1.0, k), fd, rtol=1e-4, atol=1e-6 * a)


# fitting ---------------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.05, 0.5), st.floats(1, 1000))
def test_lorentzian_closure(c, w, a):
    fit = fit_lorentzian(synth_static(c, w, a, 0.5, GRID))
    assert fit.center == pytest.approx(c, abs=1e-6 * w)
    assert fit.fwhm == pytest.approx(w, rel=1e-6)
    assert fit.amplitude == pytest.approx(a, rel=1e-6)


def test_lorentzian_noisy_linewidth():
    rng = np.random.default_rng(5)
    x = np.linspace(-1, 1, 201)
    clean = synth_static(0.0, 0.12, 20.0**2, 0.0, x).signal
    fit = fit_lorentzian(PLESpectrum(x, rng.poisson(clean).astype(float)))
    assert 0.102 <= fit.fwhm <= 0.138


def test_noise_bias():
    rng = np.random.default_rng(11)
    x = np.linspace(-1, 1, 201)
    clean = synth_static(0.0, 0.12, 400.0, 5.0, x).signal
    widths = [fit_lorentzian(PLESpectrum(x, rng.poisson(clean).astype(float))).fwhm for _ in range(100)]
    assert abs(np.mean(widths) / 0.12 - 1) < 0.05


def test_fit_lorentzian_errors():
    with pytest.raises(FlatSpectrumError):
        fit_lorentzian(PLESpectrum(GRID, np.full(GRID.size, 3.0)))
    with pytest.raises(ValueError):
        fit_lorentzian(PLESpectrum(GRID[:5], np.arange(5.0)))


def test_lm_reports_divergence():
    # residual with no finite minimum along p
    with pytest.raises(FitDivergedError) as info:
        levenberg_marquardt(lambda p: np.array([np.exp(-p[0])]), lambda p: np.array([[-np.exp(-p[0])]]),
                            np.array([0.0]), max_iter=5)
    assert info.value.best is not None


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0, 2.404826, 3.0])
def test_comb_closure(beta):
    fit = fit_sideband_comb(synth_sidebands(0.0, 0.12, beta, 1.0, GRID, amplitude=100.0, baseline=2.0), 1.0)
    assert fit.beta == pytest.approx(beta, abs=1e-4)


def test_comb_unresolved():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        spec = synth_sidebands(0.0, 0.5, 1.0, 0.6, GRID)
    with pytest.raises(UnresolvedSidebandError):
        fit_sideband_comb(spec, 0.6)


def test_delta_ac_resolved():
    est = extract_delta_ac(synth_slow_modulation(0.0, 0.12, 1.9, GRID, amplitude=100.0))
    assert est.method == "horns"
    assert est.value == pytest.approx(1.9, abs=0.1)


def test_delta_ac_zero_with_reference():
    est = extract_delta_ac(synth_static(0.0, 0.12, 100.0, 0.0, GRID), gamma_ref=0.12)
    assert abs(est.value) < 1e-3


def test_delta_ac_unresolved_fallback():
    est = extract_delta_ac(synth_slow_modulation(0.0, 0.12, 0.1, GRID, amplitude=100.0), gamma_ref=0.12)
    assert est.method != "horns"
    assert est.uncertainty >= 0.05


def test_delta_ac_ambiguous():
    with pytest.raises(AmbiguousWidthError):
        extract_delta_ac(synth_static(0.0, 0.12, 100.0, 0.0, GRID))


def test_linear_fit():
    x = np.arange(5.0)
    fit = fit_linear(x, 2 * x + 1)
    assert fit.slope == pytest.approx(2.0) and fit.intercept == pytest.approx(1.0)
    assert fit.residual_norm < 1e-12
    with pytest.raises(DegenerateAbscissaError):
        fit_linear([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_weighted_linear_fit_matches_numpy():
    rng = np.random.default_rng(3)
    x = np.linspace(0, 10, 12)
    s = rng.uniform(0.5, 2, x.size)
    y = 0.3 * x - 2 + rng.normal(0, s)
    fit = fit_linear(x, y, s)
    ref, cov = np.polyfit(x, y, 1, w=1 / s, cov="unscaled")
    assert fit.slope == pytest.approx(ref[0], rel=1e-10)
    assert fit.slope_err == pytest.approx(np.sqrt(cov[0, 0]), rel=1e-6)


def test_phonon_number():
    assert phonon_number(0.0, 1e9, 1e4) == 0.0
    assert phonon_number(1.0, 1e9, 1e4) == pytest.approx(1e5)
    assert phonon_number(2.0, 1e9, 1e4) == pytest.approx(2e5)
    with pytest.raises(DivisionDomainError):
        phonon_number(1.0, 1e9, 0.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 6), st.sampled_from(["as-printed", "sqrt-n"]))
def test_phonon_round_trip(beta, conv):
    n = phonon_number(beta, 1e9, 1e4, conv)
    assert modulation_index_from_phonons(n, 1e9, 1e4, conv) == pytest.approx(beta, rel=1e-12, abs=1e-15)
