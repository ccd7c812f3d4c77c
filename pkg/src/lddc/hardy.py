"""Stable / antistable splitting of frequency-response data.

Data on ``j*omega`` is fitted by a constant plus a Laguerre expansion in the
open left half-plane (stable) and its mirror image (antistable). To make the
discrete fit agree with the continuous orthogonal projection, the grid is
first completed by extrapolating low- and high-frequency tails over many
decades and the least-squares rows are weighted by trapezoid quadrature in
``log(omega)``. Coefficients are constrained real, which is exactly the
conjugate symmetry of the data on the negative half-axis.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.interpolate import AAA
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_frequency_data, check_positive_int
from .errors import IllConditionedFit, InvalidBand, ValidationError
from .plants import FreqResponseData

DEFAULT_K_BASIS = 40
MAX_CONDITION = 1e12
TAIL_POINTS = 12
TAIL_DECADES = 10.0
TAIL_MAX_EXTENSION = 2000
AAA_MAX_TERMS = 12
AAA_RTOL = 1e-11


@dataclass(frozen=True, eq=False)
class HardySplit:
    omegas: np.ndarray
    stable_samples: np.ndarray
    antistable_samples: np.ndarray
    feedthrough: complex
    stable_coeffs: np.ndarray
    antistable_coeffs: np.ndarray
    basis_pole: float
    residual_energy: float
    data_norm: float = 1.0
    tail_order: int = 0

    @property
    def k_basis(self):
        return self.stable_coeffs.size

    def antistable_fraction(self):
        return float(np.linalg.norm(self.antistable_samples) / self.data_norm)

    def stable_fraction(self):
        return float(np.linalg.norm(self.stable_samples) / self.data_norm)


def laguerre_basis(s, k_basis, alpha):
    """Columns ``phi_k(s) = sqrt(2a) (s-a)^(k-1) / (s+a)^k`` for ``k = 1..k_basis``."""
    s = np.asarray(s, dtype=complex)
    ratio = (s - alpha) / (s + alpha)
    first = np.sqrt(2 * alpha) / (s + alpha)
    powers = ratio[:, None] ** np.arange(k_basis)[None, :]
    return first[:, None] * powers


def estimate_feedthrough(data):
    """Mean of the samples in the top decade of the grid."""
    if len(data) < 10:
        raise ValidationError("estimate_feedthrough needs at least 10 grid points")
    top = data.omegas >= data.omegas[-1] / 10
    return complex(np.mean(data.samples[top]))


def _low_tail(w, g, w_new, m, deg=3):
    # even real part, odd imaginary part: the Taylor shape of a real-rational G near 0
    x = w[:m] / w[0]
    xr = np.stack([x ** (2 * k) for k in range(deg)], 1)
    xi = np.stack([x ** (2 * k + 1) for k in range(deg)], 1)
    cr = np.linalg.lstsq(xr, g[:m].real, rcond=None)[0]
    ci = np.linalg.lstsq(xi, g[:m].imag, rcond=None)[0]
    xn = w_new / w[0]
    re = np.stack([xn ** (2 * k) for k in range(deg)], 1) @ cr
    im = np.stack([xn ** (2 * k + 1) for k in range(deg)], 1) @ ci
    return re + 1j * im


def _rolloff(w, g, m):
    slope = np.polyfit(np.log(w[-m:]), np.log(np.abs(g[-m:]) + 1e-300), 1)[0]
    return int(np.clip(np.round(-slope), 0, 8))


def _high_tail(w, g, w_new, m, r, nterm=3):
    # real combination of (j x)^-(r+k): an asymptotic series in 1/s
    x = w[-m:] / w[-1]
    a = np.stack([(1j * x) ** (-(r + k)) for k in range(nterm)], 1)
    c = np.linalg.lstsq(
        np.vstack([a.real, a.imag]),
        np.concatenate([g[-m:].real, g[-m:].imag]),
        rcond=None,
    )[0]
    xn = w_new / w[-1]
    return np.stack([(1j * xn) ** (-(r + k)) for k in range(nterm)], 1) @ c


def _rational_tail(w, g, w_new):
    """AAA fit of one end decade, or None when the data there is not low-order rational."""
    x = np.concatenate([1j * w, -1j * w])
    y = np.concatenate([g, np.conj(g)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            fit = AAA(x, y, rtol=AAA_RTOL, max_terms=AAA_MAX_TERMS)
        except (ValueError, np.linalg.LinAlgError):
            return None
        if len(fit.support_points) >= AAA_MAX_TERMS:
            return None
        if np.max(np.abs(fit(x) - y)) > 10 * AAA_RTOL * np.max(np.abs(y)):
            return None
        s = 1j * w_new
        out = 0.5 * (fit(s) + np.conj(fit(-s)))
    return out if np.all(np.isfinite(out)) else None


def _completed_grid(w, g, tail_order):
    m = min(TAIL_POINTS, max(3, w.size // 3))
    u = np.log(w)
    h = (u[-1] - u[0]) / (w.size - 1)
    # same log step as the grid, coarsened only when that would need too many points
    n_ext = int(min(np.ceil(TAIL_DECADES * np.log(10) / h), TAIL_MAX_EXTENSION))
    h_ext = max(h, TAIL_DECADES * np.log(10) / n_ext)
    w_lo = np.exp(u[0] - h_ext * np.arange(n_ext, 0, -1))
    w_hi = np.exp(u[-1] + h_ext * np.arange(1, n_ext + 1))
    r = _rolloff(w, g, m) if tail_order is None else int(tail_order)
    g_lo = g_hi = None
    if tail_order is None:
        # a rational model of the end decade extrapolates exactly when one exists
        lo_sel = w <= w[0] * 10
        hi_sel = w >= w[-1] / 10
        if lo_sel.sum() >= 4:
            g_lo = _rational_tail(w[lo_sel], g[lo_sel], w_lo)
        if hi_sel.sum() >= 4:
            g_hi = _rational_tail(w[hi_sel], g[hi_sel], w_hi)
    if g_lo is None:
        g_lo = _low_tail(w, g, w_lo, m)
    if g_hi is None:
        g_hi = _high_tail(w, g, w_hi, m, r)
    w_all = np.concatenate([w_lo, w, w_hi])
    g_all = np.concatenate([g_lo, g, g_hi])
    # trapezoid weights in u = log(omega), times omega for d(omega), over pi for the two half-axes
    uu = np.log(w_all)
    du = np.empty_like(uu)
    du[1:-1] = (uu[2:] - uu[:-2]) / 2
    du[0] = (uu[1] - uu[0]) / 2
    du[-1] = (uu[-1] - uu[-2]) / 2
    weights = w_all * du / np.pi
    return w_all, g_all, weights, n_ext, r


def project(data, k_basis=DEFAULT_K_BASIS, alpha="auto", tail_order=None):
    """Least-squares split of ``data`` into feedthrough, stable and antistable parts.

    Parameters
    ----------
    data : FreqResponseData
    k_basis : int
        Number of basis functions per half-plane.
    alpha : float or "auto"
        Laguerre pole; ``"auto"`` picks the geometric mean of the grid ends.
    tail_order : int or None
        High-frequency roll-off (in powers of 1/s) assumed when extending the
        grid. ``None`` estimates it from the last samples.
    """
    k_basis = check_positive_int(k_basis, "k_basis")
    w, g = data.omegas, data.samples
    if 2 * k_basis + 1 > w.size:
        raise ValidationError(
            f"2*k_basis + 1 = {2 * k_basis + 1} exceeds the grid length {w.size}"
        )
    if isinstance(alpha, str):
        if alpha != "auto":
            raise ValidationError(f"alpha must be a positive number or 'auto', got {alpha!r}")
        alpha = float(np.sqrt(w[0] * w[-1]))
    else:
        alpha = float(alpha)
        if not np.isfinite(alpha) or alpha <= 0:
            raise ValidationError(f"alpha must be positive, got {alpha}")

    w_all, g_all, weights, n_ext, r = _completed_grid(w, g, tail_order)
    phi = laguerre_basis(1j * w_all, k_basis, alpha)
    design = np.hstack([np.ones((w_all.size, 1)), phi, np.conj(phi)])
    sw = np.sqrt(weights)[:, None]
    a = np.vstack([(design * sw).real, (design * sw).imag])
    b = np.concatenate([(g_all * sw[:, 0]).real, (g_all * sw[:, 0]).imag])

    col_norm = np.linalg.norm(a, axis=0)
    col_norm[col_norm == 0] = 1.0
    a_n = a / col_norm
    sv = np.linalg.svd(a_n, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > MAX_CONDITION:
        raise IllConditionedFit(
            f"condition estimate {cond:.3g} exceeds {MAX_CONDITION:.0e}; "
            "reduce k_basis or move alpha"
        )
    x = np.linalg.lstsq(a_n, b, rcond=None)[0] / col_norm

    feed = float(x[0])
    c_st = x[1:k_basis + 1]
    c_anti = x[k_basis + 1:]
    phi_grid = phi[n_ext:n_ext + w.size]
    stable = phi_grid @ c_st
    anti = np.conj(phi_grid) @ c_anti
    norm = float(np.linalg.norm(g))
    resid = np.linalg.norm(stable + anti + feed - g) / norm if norm > 0 else 0.0
    for arr in (stable, anti, c_st, c_anti):
        arr.flags.writeable = False
    return HardySplit(
        omegas=w,
        stable_samples=stable,
        antistable_samples=anti,
        feedthrough=complex(feed),
        stable_coeffs=c_st,
        antistable_coeffs=c_anti,
        basis_pole=alpha,
        residual_energy=float(resid),
        data_norm=norm if norm > 0 else 1.0,
        tail_order=r,
    )


def bandpass_response(omegas, w_lo, w_hi, order=2):
    """Analog Butterworth bandpass on ``j*omega`` scaled to unit gain at ``sqrt(w_lo*w_hi)``."""
    b, a = signal.butter(order, [w_lo, w_hi], btype="bandpass", analog=True)
    w0 = np.sqrt(w_lo * w_hi)
    peak = np.polyval(b, 1j * w0) / np.polyval(a, 1j * w0)
    s = 1j * np.asarray(omegas, dtype=float)
    return np.polyval(b, s) / np.polyval(a, s) / abs(peak)


def bandpass_prefilter(data, w_lo, w_hi, order=2):
    """Multiply the samples by a unit-peak Butterworth bandpass."""
    order = check_positive_int(order, "order")
    try:
        w_lo, w_hi = float(w_lo), float(w_hi)
    except (TypeError, ValueError):
        raise InvalidBand("band edges must be numbers") from None
    lo, hi = data.omegas[0], data.omegas[-1]
    if not (np.isfinite(w_lo) and np.isfinite(w_hi)) or not (lo <= w_lo < w_hi <= hi):
        raise InvalidBand(
            f"band ({w_lo}, {w_hi}) must satisfy {lo:g} <= w_lo < w_hi <= {hi:g}"
        )
    return data.with_samples(data.samples * bandpass_response(data.omegas, w_lo, w_hi, order))


def default_band(omegas):
    """One decade in from each end of the grid (or the middle third if the grid is short)."""
    lo, hi = float(omegas[0]), float(omegas[-1])
    if hi / lo > 1e3:
        return lo * 10, hi / 10
    span = np.log10(hi / lo)
    return lo * 10 ** (span / 3), hi / 10 ** (span / 3)


def low_frequency_slope(data, points=None):
    """Slope of log|G| vs log(omega) over the lowest part of the grid."""
    n = points or max(3, min(TAIL_POINTS, len(data) // 10))
    return float(
        np.polyfit(np.log10(data.omegas[:n]), np.log10(np.abs(data.samples[:n]) + 1e-300), 1)[0]
    )


def has_integrator(data, threshold=-0.9):
    """True when |G| grows by about 20 dB/decade or more toward the lowest frequency."""
    return low_frequency_slope(data) <= threshold


class HardyProjector(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`project`.

    ``fit(X, y)`` takes angular frequencies ``X`` and complex samples ``y``;
    ``transform`` returns the antistable part and ``predict`` the full fit.
    """

    def __init__(self, k_basis=DEFAULT_K_BASIS, alpha="auto", tail_order=None):
        self.k_basis = k_basis
        self.alpha = alpha
        self.tail_order = tail_order

    def fit(self, X, y):
        w, g = check_frequency_data(X, y)
        self.split_ = project(FreqResponseData(w, g), self.k_basis, self.alpha, self.tail_order)
        self.alpha_ = self.split_.basis_pole
        self.stable_coeffs_ = self.split_.stable_coeffs
        self.antistable_coeffs_ = self.split_.antistable_coeffs
        self.feedthrough_ = self.split_.feedthrough
        return self

    def _basis(self, X):
        w = check_frequency_data(X)
        return laguerre_basis(1j * w, self.stable_coeffs_.size, self.alpha_)

    def transform(self, X):
        check_is_fitted(self, "split_")
        return np.conj(self._basis(X)) @ self.antistable_coeffs_

    def predict(self, X, part="full"):
        check_is_fitted(self, "split_")
        phi = self._basis(X)
        stable = phi @ self.stable_coeffs_
        anti = np.conj(phi) @ self.antistable_coeffs_
        if part == "stable":
            return stable
        if part == "antistable":
            return anti
        if part != "full":
            raise ValueError("part must be 'full', 'stable' or 'antistable'")
        return stable + anti + self.feedthrough_
