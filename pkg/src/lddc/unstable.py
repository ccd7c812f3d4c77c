"""Right-half-plane pole and zero estimation from antistable Laguerre coefficients.

Antistable coefficients of a rational part with poles ``p`` form a sum of
geometric sequences in ``q = (p - a)/(p + a)``, so their Hankel matrix has
rank equal to the number of poles and its left singular vectors are shift
invariant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import hankel
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_frequency_data, check_positive_int
from .errors import RankDeficiency, ValidationError
from .hardy import DEFAULT_K_BASIS, project
from .plants import FreqResponseData, invert_response

DEFAULT_DROP_RATIO = 1e-4
# the rescaled inverse leans harder on tail extrapolation, hence a looser threshold
DEFAULT_ZERO_DROP_RATIO = 1e-2


@dataclass(frozen=True, eq=False)
class InstabilityEstimate:
    n_p: int
    rhp_poles: np.ndarray
    n_z: int = 0
    rhp_zeros: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    hankel_svals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    zero_hankel_svals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        for name in ("rhp_poles", "rhp_zeros"):
            roots = np.asarray(getattr(self, name), dtype=complex).ravel()
            if np.any(roots.real <= 0):
                raise ValidationError(f"{name} must have strictly positive real parts")
            object.__setattr__(self, name, roots)
        object.__setattr__(self, "n_p", int(self.n_p))
        object.__setattr__(self, "n_z", int(self.n_z))

    def singular_gaps(self):
        """Ratios ``sigma_k / sigma_{k+1}`` of the pole Hankel spectrum."""
        s = np.asarray(self.hankel_svals)
        if s.size < 2:
            return np.zeros(0)
        with np.errstate(divide="ignore"):
            return s[:-1] / s[1:]

    def to_dict(self):
        def pairs(z):
            return [[float(v.real), float(v.imag)] for v in z]

        return {
            "n_p": self.n_p,
            "rhp_poles": pairs(self.rhp_poles),
            "n_z": self.n_z,
            "rhp_zeros": pairs(self.rhp_zeros),
            "hankel_svals": [float(v) for v in self.hankel_svals],
        }

    @classmethod
    def from_dict(cls, d):
        def cplx(pairs):
            return np.array([complex(a, b) for a, b in pairs], dtype=complex)

        return cls(
            n_p=d["n_p"],
            rhp_poles=cplx(d["rhp_poles"]),
            n_z=d["n_z"],
            rhp_zeros=cplx(d["rhp_zeros"]),
            hankel_svals=np.asarray(d.get("hankel_svals", []), dtype=float),
        )


def coefficient_hankel(coeffs):
    """Hankel matrix ``H[i, j] = coeffs[i + j]`` of shape ``floor(K/2) x ceil(K/2)``."""
    c = np.asarray(coeffs)
    k = c.size
    rows = k // 2
    return hankel(c[:rows], c[rows - 1:])


def canonical_signs(u):
    """Flip each column so that its largest-magnitude entry is nonnegative."""
    u = np.array(u, copy=True)
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])].real)
    signs[signs == 0] = 1.0
    return u * signs


def count_unstable(split, drop_ratio=DEFAULT_DROP_RATIO):
    """Numerical rank of the antistable coefficient Hankel matrix.

    The threshold is taken relative to the larger of the antistable and the
    stable coefficient Hankel norms, so that leakage into the antistable half
    of stable (possibly irrational) data is not mistaken for instability.
    Antistable content weaker than ``drop_ratio`` times the stable part is
    therefore not reported.
    """
    k = split.antistable_coeffs.size
    if k < 4:
        raise ValidationError(f"need at least 4 antistable coefficients, got {k}")
    svals = np.linalg.svd(coefficient_hankel(split.antistable_coeffs), compute_uv=False)
    ref = np.linalg.svd(coefficient_hankel(split.stable_coeffs), compute_uv=False)[0]
    scale = max(svals[0], ref)
    if svals[0] < 1e-10 * split.data_norm or scale == 0:
        return 0, svals
    return int(np.sum(svals >= drop_ratio * scale)), svals


def pair_conjugates(roots, tol=1e-6):
    """Symmetrise a root list into exact conjugate pairs and real roots."""
    roots = list(np.asarray(roots, dtype=complex))
    out = []
    scale = max([abs(r) for r in roots] + [1e-300])
    while roots:
        r = roots.pop(0)
        if abs(r.imag) <= tol * scale:
            out.append(complex(r.real, 0.0))
            continue
        j = int(np.argmin([abs(x - np.conj(r)) for x in roots])) if roots else None
        if j is None:
            out.append(complex(r.real, 0.0))
            continue
        partner = roots.pop(j)
        m = (r + np.conj(partner)) / 2
        out.extend([m, np.conj(m)])
    out = np.array(out, dtype=complex)
    return out[np.lexsort((out.real, out.imag))] if out.size else out


def estimate_rhp_poles(split, n_p):
    """Kung shift-invariance estimate of ``n_p`` right-half-plane poles."""
    n_p = check_positive_int(n_p, "n_p")
    h = coefficient_hankel(split.antistable_coeffs)
    if n_p >= h.shape[0]:
        raise ValidationError(f"n_p = {n_p} too large for a {h.shape} Hankel matrix")
    u = canonical_signs(np.linalg.svd(h)[0][:, :n_p])
    top, bottom = u[:-1], u[1:]
    sv = np.linalg.svd(top, compute_uv=False)
    if sv[-1] <= sv[0] * 1e-13 * top.shape[0]:
        raise RankDeficiency("shifted observability matrix is singular to working precision")
    shift = np.linalg.lstsq(top, bottom, rcond=None)[0]
    q = np.linalg.eigvals(shift)
    if np.any(np.abs(1 - q) < 1e-14):
        raise RankDeficiency("discrete pole at 1 maps to infinity")
    alpha = split.basis_pole
    poles = pair_conjugates(alpha * (1 + q) / (1 - q))
    bad = poles.real <= 0
    if np.any(bad):
        warnings.warn(
            f"dropping {int(bad.sum())} estimated pole(s) with nonpositive real part",
            RuntimeWarning,
            stacklevel=2,
        )
        poles = poles[~bad]
    return poles


def growth_order(data, points=12):
    """High-frequency growth rate of |G| in powers of omega, rounded up, at least 0."""
    m = min(points, len(data))
    slope = np.polyfit(np.log(data.omegas[-m:]), np.log(np.abs(data.samples[-m:])), 1)[0]
    return max(0, int(np.ceil(slope - 0.3)))


def _analyze_antistable(data, k_basis, alpha, drop_ratio):
    split = project(data, k_basis, alpha)
    n, svals = count_unstable(split, drop_ratio)
    roots = estimate_rhp_poles(split, n) if n else np.zeros(0, complex)
    return roots, svals


def detect_rhp_zeros(data, k_basis=DEFAULT_K_BASIS, alpha="auto",
                     drop_ratio=DEFAULT_ZERO_DROP_RATIO):
    """RHP zeros of the plant as RHP poles of its inverse.

    The inverse is made strictly proper by dividing by ``(s + alpha)^(r+1)``,
    which only adds stable poles and leaves the antistable poles in place.
    """
    inv = invert_response(data)
    r = growth_order(inv) + 1
    a = float(np.sqrt(data.omegas[0] * data.omegas[-1])) if alpha == "auto" else float(alpha)
    inv = inv.with_samples(inv.samples / (1j * inv.omegas + a) ** r)
    zeros, svals = _analyze_antistable(inv, k_basis, alpha, drop_ratio)
    return len(zeros), zeros, svals


def analyze(data, k_basis=DEFAULT_K_BASIS, alpha="auto", drop_ratio=DEFAULT_DROP_RATIO,
            zeros=True, zero_drop_ratio=DEFAULT_ZERO_DROP_RATIO):
    """Poles from ``data`` and (optionally) zeros from its inverse."""
    poles, svals = _analyze_antistable(data, k_basis, alpha, drop_ratio)
    if zeros:
        n_z, z, zsv = detect_rhp_zeros(data, k_basis, alpha, zero_drop_ratio)
    else:
        n_z, z, zsv = 0, np.zeros(0, complex), np.zeros(0)
    return InstabilityEstimate(
        n_p=len(poles),
        rhp_poles=poles,
        n_z=n_z,
        rhp_zeros=z,
        hankel_svals=svals,
        zero_hankel_svals=zsv,
    )


class InstabilityAnalyzer(BaseEstimator):
    """Estimator form of :func:`analyze`; fitted attributes mirror :class:`InstabilityEstimate`."""

    def __init__(self, k_basis=DEFAULT_K_BASIS, alpha="auto", drop_ratio=DEFAULT_DROP_RATIO,
                 detect_zeros=True):
        self.k_basis = k_basis
        self.alpha = alpha
        self.drop_ratio = drop_ratio
        self.detect_zeros = detect_zeros

    def fit(self, X, y):
        w, g = check_frequency_data(X, y)
        est = analyze(FreqResponseData(w, g), self.k_basis, self.alpha, self.drop_ratio,
                      zeros=self.detect_zeros)
        self.estimate_ = est
        self.n_p_ = est.n_p
        self.rhp_poles_ = est.rhp_poles
        self.n_z_ = est.n_z
        self.rhp_zeros_ = est.rhp_zeros
        self.hankel_svals_ = est.hankel_svals
        return self

    def predict(self, X=None):
        """Number of RHP poles found (the decision the analysis is used for)."""
        check_is_fitted(self, "estimate_")
        return self.n_p_
