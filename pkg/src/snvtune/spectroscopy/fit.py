"""Least-squares extraction of line parameters from PLE spectra."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import find_peaks

from ..errors import (
    AmbiguousWidthError,
    DegenerateAbscissaError,
    DivisionDomainError,
    FitDivergedError,
    FlatSpectrumError,
    UnresolvedSidebandError,
)
from .bessel import MAX_ORDER, sideband_weight_derivs, sideband_weights
from .synth import PLESpectrum, default_k_max, lorentzian

MAX_ITER = 200
XTOL = 1e-8
MODULATION_CONVENTIONS = ("as-printed", "sqrt-n")


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    fwhm: float
    amplitude: float
    baseline: float
    center_err: float
    fwhm_err: float
    amplitude_err: float
    baseline_err: float
    residual_norm: float
    iterations: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SidebandFit:
    center: float
    fwhm: float
    beta: float
    omega_d: float
    k_max: int
    amplitude: float
    baseline: float
    center_err: float
    fwhm_err: float
    beta_err: float
    amplitude_err: float
    baseline_err: float
    residual_norm: float
    iterations: int

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    slope_err: float
    intercept_err: float
    residual_norm: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DeltaACEstimate:
    value: float
    uncertainty: float
    method: str  # "horns" | "width"

    def to_dict(self):
        return asdict(self)


def levenberg_marquardt(residual, jacobian, p0, max_iter=MAX_ITER, xtol=XTOL):
    """Damped Gauss-Newton minimization of ``sum(residual(p)**2)``.

    Returns ``(p, jac, iterations)``. Raises :class:`FitDivergedError` with the
    best parameters seen if the relative step never falls below ``xtol``.
    """
    p = np.array(p0, dtype=float)
    r = residual(p)
    cost = float(r @ r)
    lam = 1e-3
    for it in range(1, max_iter + 1):
        jac = jacobian(p)
        a = jac.T @ jac
        g = jac.T @ r
        diag = np.diag(a).copy()
        diag[diag == 0] = 1.0
        while True:
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = -np.linalg.pinv(a + lam * np.diag(diag)) @ g
            p_new = p + step
            r_new = residual(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                break
            lam *= 10.0
            if lam > 1e12:
                # no descent direction left: we sit at the minimum to precision
                return p, jacobian(p), it
        small = np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol)
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if small or cost == 0.0:
            return p, jacobian(p), it
    raise FitDivergedError(f"no convergence after {max_iter} iterations", best=p)


def _errors(jac, resid, n_params):
    dof = max(resid.size - n_params, 1)
    s2 = float(resid @ resid) / dof
    cov = np.linalg.pinv(jac.T @ jac) * s2
    return np.sqrt(np.clip(np.diag(cov), 0.0, None))


def _half_max_width(x, y, i_peak, base):
    """Full width at half maximum around ``i_peak``, by linear interpolation."""
    half = base + 0.5 * (y[i_peak] - base)
    left = i_peak
    while left > 0 and y[left] > half:
        left -= 1
    right = i_peak
    while right < y.size - 1 and y[right] > half:
        right += 1

    def cross(i, j):
        if y[i] == y[j]:
            return x[i]
        return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i])

    xl = cross(left, left + 1) if left < i_peak else x[i_peak]
    xr = cross(right - 1, right) if right > i_peak else x[i_peak]
    return max(xr - xl, float(np.min(np.diff(x))))


# Lorentzian -----------------------------------------------------------------

def lorentzian_model(p, x):
    c, w, a, b = p
    return lorentzian(x, c, w, a, b)


def lorentzian_jacobian(p, x):
    c, w, a, b = p
    hw2 = 0.25 * w * w
    d = x - c
    den = d * d + hw2
    shape = hw2 / den
    j = np.empty((x.size, 4))
    j[:, 0] = a * 2.0 * d * hw2 / den**2
    j[:, 1] = a * 0.5 * w * d * d / den**2
    j[:, 2] = shape
    j[:, 3] = 1.0
    return j


def fit_lorentzian(spec: PLESpectrum) -> LorentzianFit:
    """Fit ``baseline + amplitude * (w/2)^2 / ((x - c)^2 + (w/2)^2)``.

    Initial guesses come from the data (argmax, half-max width, 10th
    percentile baseline), refined over a small width grid before the
    damped Gauss-Newton iterations.
    """
    x, y = spec.detuning, spec.signal
    if x.size < 8:
        raise ValueError("need at least 8 points for a Lorentzian fit")
    if np.ptp(y) == 0:
        raise FlatSpectrumError("signal is constant")
    base = float(np.percentile(y, 10))
    i = int(np.argmax(y))
    amp = float(y[i] - base)
    width = _half_max_width(x, y, i, base)

    def resid(p):
        return lorentzian_model(p, x) - y

    best = None
    for scale in (0.5, 0.8, 1.0, 1.25, 2.0):
        p = np.array([x[i], width * scale, amp, base])
        cost = float(resid(p) @ resid(p))
        if best is None or cost < best[0]:
            best = (cost, p)
    p, jac, its = levenberg_marquardt(resid, lambda q: lorentzian_jacobian(q, x), best[1])
    r = resid(p)
    err = _errors(jac, r, 4)
    return LorentzianFit(
        center=float(p[0]), fwhm=float(abs(p[1])), amplitude=float(p[2]), baseline=float(p[3]),
        center_err=float(err[0]), fwhm_err=float(err[1]), amplitude_err=float(err[2]),
        baseline_err=float(err[3]), residual_norm=float(np.linalg.norm(r)), iterations=its,
    )


# Sideband comb ----------------------------------------------------------------

def comb_model(p, x, omega_d, k_max):
    c, w, beta, a, b = p
    orders, weights = sideband_weights(beta, k_max)
    lines = lorentzian(x[:, None] - orders[None, :] * omega_d, c, w)
    return b + a * (lines @ weights)


def comb_jacobian(p, x, omega_d, k_max):
    c, w, beta, a, b = p
    orders, weights = sideband_weights(beta, k_max)
    dweights = sideband_weight_derivs(beta, k_max)
    d = x[:, None] - orders[None, :] * omega_d - c
    hw2 = 0.25 * w * w
    den = d * d + hw2
    lines = hw2 / den
    j = np.empty((x.size, 5))
    j[:, 0] = a * ((2.0 * d * hw2 / den**2) @ weights)
    j[:, 1] = a * ((0.5 * w * d * d / den**2) @ weights)
    j[:, 2] = a * (lines @ dweights)
    j[:, 3] = lines @ weights
    j[:, 4] = 1.0
    return j


def _linear_amp_base(shape, y):
    design = np.column_stack([shape, np.ones_like(shape)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef


def fit_sideband_comb(spec: PLESpectrum, omega_d: float, beta_max: float = 6.0) -> SidebandFit:
    """Joint fit of centre, linewidth and modulation index to a sideband comb.

    Sideband amplitudes are tied to J_k(beta)^2, so only one overall
    amplitude and a baseline are free besides (centre, fwhm, beta).
    """
    x, y = spec.detuning, spec.signal
    if np.ptp(y) == 0:
        raise FlatSpectrumError("signal is constant")
    base = float(np.percentile(y, 10))
    i = int(np.argmax(y))
    width = _half_max_width(x, y, i, base)
    if omega_d < 3.0 * width:
        raise UnresolvedSidebandError(
            f"drive {omega_d} GHz is below 3x the estimated linewidth {width:.4g} GHz"
        )
    k_fit = min(default_k_max(beta_max), MAX_ORDER - 1)

    best = None
    for shift in range(-4, 5):
        c = x[i] - shift * omega_d
        if c < x[0] or c > x[-1]:
            continue
        for beta in np.arange(0.0, beta_max + 1e-9, 0.05):
            shape = comb_model([c, width, beta, 1.0, 0.0], x, omega_d, k_fit)
            a, b = _linear_amp_base(shape, y)
            r = a * shape + b - y
            cost = float(r @ r)
            if best is None or cost < best[0]:
                best = (cost, np.array([c, width, beta, a, b]))

    def resid(p):
        return comb_model(p, x, omega_d, k_fit) - y

    p, jac, its = levenberg_marquardt(resid, lambda q: comb_jacobian(q, x, omega_d, k_fit), best[1])
    r = resid(p)
    err = _errors(jac, r, 5)
    beta = abs(float(p[2]))
    return SidebandFit(
        center=float(p[0]), fwhm=float(abs(p[1])), beta=beta, omega_d=float(omega_d),
        k_max=default_k_max(beta), amplitude=float(p[3]), baseline=float(p[4]),
        center_err=float(err[0]), fwhm_err=float(err[1]), beta_err=float(err[2]),
        amplitude_err=float(err[3]), baseline_err=float(err[4]),
        residual_norm=float(np.linalg.norm(r)), iterations=its,
    )


# Slow-modulation width ----------------------------------------------------------

HORN_DIP = 0.9  # central minimum must fall below this fraction of the horns


def extract_delta_ac(spec: PLESpectrum, gamma_ref: float | None = None) -> DeltaACEstimate:
    """Modulation amplitude from a slowly modulated (broadened) line.

    With two resolved horns the estimate is half their separation. Otherwise
    it falls back to half the excess of the measured FWHM over ``gamma_ref``.
    """
    x, y = spec.detuning, spec.signal
    if np.ptp(y) == 0:
        raise FlatSpectrumError("signal is constant")
    step = float(np.median(np.diff(x)))
    base = float(np.percentile(y, 5))
    peaks, _ = find_peaks(y, prominence=0.02 * np.ptp(y))
    if peaks.size >= 2:
        lo, hi = peaks[0], peaks[-1]
        dip = float(np.min(y[lo:hi + 1]))
        horn = float(min(y[lo], y[hi]))
        if dip - base < HORN_DIP * (horn - base):
            value = 0.5 * float(x[hi] - x[lo])
            # horns sit slightly inside +-delta_ac; 5% covers delta_ac >= 10 fwhm
            return DeltaACEstimate(value, max(2.0 * step, 0.05 * value), "horns")
    if gamma_ref is None:
        raise AmbiguousWidthError("single unresolved peak and no reference linewidth")
    width = _half_max_width(x, y, int(np.argmax(y)), base)
    value = float(max(0.5 * (width - gamma_ref), 0.0))
    return DeltaACEstimate(value, max(0.5 * gamma_ref, 2.0 * step), "width")


# Linear regression ----------------------------------------------------------------

def fit_linear(xs, ys, y_sigmas=None) -> LinearFit:
    """Weighted straight-line fit with closed-form standard errors.

    Without ``y_sigmas`` the errors are scaled by the residual variance.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and the same length")
    if np.unique(x).size < 2:
        raise DegenerateAbscissaError("need at least two distinct x values")
    if y_sigmas is None:
        w = np.ones_like(x)
    else:
        s = np.asarray(y_sigmas, dtype=float)
        if np.any(s <= 0):
            raise ValueError("y_sigmas must be positive")
        w = 1.0 / s**2
    sw, sx, sy = w.sum(), (w * x).sum(), (w * y).sum()
    sxx, sxy = (w * x * x).sum(), (w * x * y).sum()
    det = sw * sxx - sx * sx
    slope = (sw * sxy - sx * sy) / det
    intercept = (sxx * sy - sx * sxy) / det
    resid = y - (slope * x + intercept)
    var_slope, var_int = sw / det, sxx / det
    if y_sigmas is None:
        scale = float(resid @ resid) / max(x.size - 2, 1)
        var_slope, var_int = var_slope * scale, var_int * scale
    return LinearFit(float(slope), float(intercept), float(math.sqrt(var_slope)),
                     float(math.sqrt(var_int)), float(np.linalg.norm(resid)))


# Phonon number --------------------------------------------------------------------

def phonon_number(beta: float, omega_d_hz: float, g_orb_hz: float, convention: str = "as-printed") -> float:
    """Mean phonon occupation implied by a modulation index.

    ``as-printed``: beta = (g_orb / omega_d) <n>.
    ``sqrt-n``:     beta = 2 g_orb sqrt(<n>) / omega_d.
    """
    if g_orb_hz == 0:
        raise DivisionDomainError("g_orb must be nonzero")
    if convention == "as-printed":
        return beta * omega_d_hz / g_orb_hz
    if convention == "sqrt-n":
        return (beta * omega_d_hz / (2.0 * g_orb_hz)) ** 2
    raise ValueError(f"unknown modulation-index convention {convention!r}")


def modulation_index_from_phonons(n: float, omega_d_hz: float, g_orb_hz: float,
                                  convention: str = "as-printed") -> float:
    if convention == "as-printed":
        return g_orb_hz / omega_d_hz * n
    if convention == "sqrt-n":
        return 2.0 * g_orb_hz * math.sqrt(n) / omega_d_hz
    raise ValueError(f"unknown modulation-index convention {convention!r}")
