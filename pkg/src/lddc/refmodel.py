"""Achievable reference models and the ideal controller's frequency response."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AchievabilityWarning, PoleHit, SensitivitySingular, ValidationError
from .plants import RationalLTI, invert_response


def _roots(roots, name):
    r = np.atleast_1d(np.asarray(roots, dtype=complex)).ravel()
    if np.any(r.real <= 0):
        raise ValidationError(f"{name} must lie in the open right half-plane")
    if r.size:
        # every complex root needs its conjugate
        for z in r[np.abs(r.imag) > 1e-12 * np.abs(r)]:
            if np.min(np.abs(r - np.conj(z))) > 1e-9 * abs(z):
                raise ValidationError(f"{name} must be closed under conjugation")
    return r


def eval_blaschke(roots, s):
    """``prod_j (s - p_j) / (s + p_j)``; unit modulus on the imaginary axis."""
    roots = np.atleast_1d(np.asarray(roots, dtype=complex))
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.ones_like(s)
    for p in roots:
        den = s + p
        hit = den == 0
        if np.any(hit):
            raise PoleHit(f"Blaschke factor for root {p!r} has a pole at s = {-p!r}")
        out = out * ((s - p) / den)
    return complex(out[0]) if scalar else out


@dataclass(frozen=True, eq=False)
class ReferenceModel:
    """``M(s) = sgn * B_z(s) * (1 - (1 - m_init(s)) * B_p(s))``.

    ``zero_sign`` is +1 or -1 and makes the zero Blaschke factor positive at
    ``s = 0`` so the steady-state gain of ``m_init`` is kept.
    """

    m_init: RationalLTI
    pole_blaschke: np.ndarray
    zero_blaschke: np.ndarray
    zero_sign: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pole_blaschke", _roots(self.pole_blaschke, "pole_blaschke"))
        object.__setattr__(self, "zero_blaschke", _roots(self.zero_blaschke, "zero_blaschke"))
        if not isinstance(self.m_init, RationalLTI):
            raise ValidationError("m_init must be a RationalLTI")
        if not self.m_init.is_stable():
            raise ValidationError("m_init must be stable")
        if abs(self.m_init(0.0)) > 1 + 1e-12:
            raise ValidationError("|m_init(0)| must not exceed 1")
        if self.zero_sign not in (1.0, -1.0):
            raise ValidationError("zero_sign must be +1 or -1")

    def __call__(self, s):
        return eval_reference(self, s)

    def to_rational(self):
        """The composed model as a single :class:`RationalLTI`."""
        n, d = self.m_init.num, self.m_init.den
        np_, dp = np.real(np.poly(self.pole_blaschke)), np.real(np.poly(-self.pole_blaschke))
        nz, dz = np.real(np.poly(self.zero_blaschke)), np.real(np.poly(-self.zero_blaschke))
        inner = np.polysub(np.polymul(d, dp), np.polymul(np.polysub(d, n), np_))
        num = self.zero_sign * np.polymul(nz, inner)
        den = np.polymul(dz, np.polymul(d, dp))
        return RationalLTI(num, den)


def make_achievable(m_init, est, sign_normalize=True):
    """Augment ``m_init`` with Blaschke factors for the estimated RHP poles and zeros."""
    poles = np.asarray(est.rhp_poles, dtype=complex)
    zeros = np.asarray(est.rhp_zeros, dtype=complex)
    sign = 1.0
    if sign_normalize and zeros.size:
        sign = 1.0 if eval_blaschke(zeros, 0.0).real > 0 else -1.0
    if poles.size and zeros.size:
        warnings.warn(
            "plant has both RHP poles and RHP zeros: M(p) = B_z(p) instead of 1",
            AchievabilityWarning,
            stacklevel=2,
        )
    return ReferenceModel(m_init, poles, zeros, sign)


def eval_reference(m, s):
    inner = 1 - (1 - m.m_init(s)) * eval_blaschke(m.pole_blaschke, s)
    return m.zero_sign * eval_blaschke(m.zero_blaschke, s) * inner


def reference_samples(m, omegas):
    """``M(j omega)`` on a grid; ``m`` may already be an array of samples or a scalar."""
    w = np.asarray(omegas, dtype=float)
    if isinstance(m, ReferenceModel):
        return np.asarray(eval_reference(m, 1j * w), dtype=complex)
    if callable(m):
        return np.asarray(m(1j * w), dtype=complex) * np.ones(w.shape)
    vals = np.asarray(m, dtype=complex)
    if vals.ndim == 0:
        return np.full(w.shape, complex(vals))
    if vals.shape != w.shape:
        raise ValidationError(f"reference samples have shape {vals.shape}, grid has {w.shape}")
    return vals


def ideal_controller(plant, m):
    """``K* = P^-1 M / (1 - M)`` on the plant grid."""
    mv = reference_samples(m, plant.omegas)
    sens = 1 - mv
    bad = np.abs(sens) <= 1e-12
    if np.any(bad):
        raise SensitivitySingular(int(np.flatnonzero(bad)[0]))
    zero_ref = mv == 0
    if np.all(zero_ref):
        return plant.with_samples(np.zeros(len(plant), complex))
    pinv = invert_response(plant).samples
    return plant.with_samples(pinv * mv / sens)
