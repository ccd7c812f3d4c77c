"""Transfer-function evaluators and frequency-response sample sets.

All models are immutable and evaluate vectorised over arrays of complex
Laplace variables. Polynomials use descending-power coefficients and are
evaluated with Horner's scheme (:func:`numpy.polyval`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_grid, check_positive_int, check_samples
from .errors import DenominatorUnderflow, InvalidRange, NearZeroSample, ValidationError

UNDERFLOW = 1e-300


@dataclass(frozen=True, eq=False)
class FreqResponseData:
    """Complex response samples on a strictly increasing angular-frequency grid."""

    omegas: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        w = check_grid(self.omegas)
        z = check_samples(self.samples, w.size)
        w.flags.writeable = False
        z.flags.writeable = False
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "samples", z)

    def __len__(self):
        return self.omegas.size

    @property
    def s(self):
        """Laplace points ``j*omega`` of the grid."""
        return 1j * self.omegas

    def with_samples(self, samples):
        return type(self)(self.omegas, samples)

    def __repr__(self):
        return (
            f"{type(self).__name__}(n={len(self)}, "
            f"omega=[{self.omegas[0]:.3g}, {self.omegas[-1]:.3g}])"
        )


def _as_poly(coeffs, name):
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D coefficient list")
    if not np.all(np.isfinite(c)):
        raise ValidationError(f"{name} has non-finite coefficients")
    nz = np.flatnonzero(c)
    c = c[nz[0]:] if nz.size else c[-1:]
    c.flags.writeable = False
    return c


class TransferModel:
    """Base class: a SISO transfer function ``P(s)`` that can be evaluated pointwise."""

    def __call__(self, s):
        return eval_transfer(self, s)

    def _numerator(self, s):
        raise NotImplementedError

    def _denominator(self, s):
        raise NotImplementedError


class DelayedRational(TransferModel):
    """``P(s) = num(s) / sum_k den_k(s) exp(-s tau_k)``.

    Parameters
    ----------
    num : array_like
        Numerator coefficients, descending powers.
    den_terms : sequence of (coeffs, delay)
        Denominator terms. Delays are nonnegative; a zero-delay term must not
        be the zero polynomial. A single delayed term (pure delay) is allowed.
    """

    def __init__(self, num, den_terms):
        self.num = _as_poly(num, "num")
        terms = []
        for k, term in enumerate(den_terms):
            try:
                coeffs, delay = term
            except (TypeError, ValueError):
                raise ValidationError(f"den_terms[{k}] must be (coeffs, delay)") from None
            delay = float(delay)
            if not np.isfinite(delay) or delay < 0:
                raise ValidationError(f"den_terms[{k}] delay must be >= 0, got {delay}")
            terms.append((_as_poly(coeffs, f"den_terms[{k}]"), delay))
        if not terms:
            raise ValidationError("at least one denominator term is required")
        if not any(c[0] != 0.0 for c, _ in terms):
            raise ValidationError("the denominator is identically zero")
        if any(tau == 0.0 and c[0] == 0.0 for c, tau in terms):
            raise ValidationError("zero-delay denominator term has a zero leading coefficient")
        self.den_terms = tuple(terms)

    @property
    def delays(self):
        return tuple(tau for _, tau in self.den_terms)

    def _numerator(self, s):
        return np.polyval(self.num, s)

    def _denominator(self, s):
        total = np.zeros_like(s, dtype=complex)
        for coeffs, tau in self.den_terms:
            term = np.polyval(coeffs, s)
            if tau:
                term = term * np.exp(-s * tau)
            total = total + term
        return total

    def __repr__(self):
        return f"DelayedRational(num={self.num.tolist()}, delays={list(self.delays)})"


class RationalLTI(DelayedRational):
    """Plain rational transfer function ``num(s)/den(s)``."""

    def __init__(self, num, den):
        super().__init__(num, [(den, 0.0)])
        self.den = self.den_terms[0][0]

    @classmethod
    def from_zpk(cls, zeros, poles, gain):
        num = np.real_if_close(gain * np.poly(zeros)) if len(zeros) else [gain]
        den = np.real_if_close(np.poly(poles)) if len(poles) else [1.0]
        return cls(np.real(num), np.real(den))

    def poles(self):
        return np.roots(self.den)

    def zeros(self):
        return np.roots(self.num)

    def is_stable(self):
        return bool(np.all(self.poles().real < 0))

    def __repr__(self):
        return f"RationalLTI(num={self.num.tolist()}, den={self.den.tolist()})"


class OpenChannel(TransferModel):
    """Level response of an open channel to its outflow.

    ``G(s) = (l1 e^{l1 x} - l2 e^{l2 x}) / (B0 s (e^{l1 L} - e^{l2 L}))`` where
    ``l1,2(s) = a s + b +/- sqrt(c s^2 + d s + e)``. The expression is even in
    the square root, so the branch choice does not matter.
    """

    def __init__(self, B0, L, x, a, b, c, d, e):
        self.B0 = float(B0)
        self.L = float(L)
        self.x = float(x)
        self.a, self.b, self.c, self.d, self.e = (float(v) for v in (a, b, c, d, e))
        if self.B0 <= 0 or self.L <= 0:
            raise ValidationError("B0 and L must be positive")
        if not 0 <= self.x <= self.L:
            raise ValidationError("x must lie within [0, L]")

    def roots(self, s):
        s = np.asarray(s, dtype=complex)
        root = np.sqrt(self.c * s**2 + self.d * s + self.e)
        mid = self.a * s + self.b
        return mid + root, mid - root

    def _scaled(self, s):
        # num and den both divided by exp(l1 L), with l1 the root of larger real part
        l1, l2 = self.roots(s)
        swap = l2.real > l1.real
        l1, l2 = np.where(swap, l2, l1), np.where(swap, l1, l2)
        num = l1 * np.exp(l1 * (self.x - self.L)) - l2 * np.exp(l2 * self.x - l1 * self.L)
        den = self.B0 * s * (1.0 - np.exp((l2 - l1) * self.L))
        return num, den

    def _numerator(self, s):
        return self._scaled(s)[0]

    def _denominator(self, s):
        return self._scaled(s)[1]

    def __repr__(self):
        return f"OpenChannel(B0={self.B0}, L={self.L}, x={self.x})"


def eval_transfer(model, s):
    """Evaluate ``model`` at the Laplace point(s) ``s``.

    Raises :class:`DenominatorUnderflow` if ``|denominator| < 1e-300`` anywhere.
    """
    scalar = np.ndim(s) == 0
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    num = model._numerator(s_arr)
    den = model._denominator(s_arr)
    small = ~(np.abs(den) >= UNDERFLOW)
    if np.any(small):
        idx = int(np.flatnonzero(small)[0])
        raise DenominatorUnderflow(
            f"denominator underflow at s = {s_arr[idx]!r} (pole on or near the point)",
            index=idx,
        )
    out = num / den
    return complex(out[0]) if scalar else out


def make_log_grid(w_min, w_max, n):
    """``n`` logarithmically spaced angular frequencies with exact endpoints."""
    try:
        w_min, w_max = float(w_min), float(w_max)
    except (TypeError, ValueError):
        raise InvalidRange("w_min and w_max must be numbers") from None
    if not (0 < w_min < w_max) or not np.isfinite(w_max):
        raise InvalidRange(f"need 0 < w_min < w_max, got ({w_min}, {w_max})")
    try:
        n = check_positive_int(n, "n", minimum=2)
    except ValidationError as exc:
        raise InvalidRange(str(exc)) from None
    w = np.logspace(np.log10(w_min), np.log10(w_max), n)
    w[0], w[-1] = w_min, w_max
    return w


def make_linear_grid(w_min, w_max, n):
    try:
        w_min, w_max = float(w_min), float(w_max)
    except (TypeError, ValueError):
        raise InvalidRange("w_min and w_max must be numbers") from None
    if not (0 < w_min < w_max) or not np.isfinite(w_max):
        raise InvalidRange(f"need 0 < w_min < w_max, got ({w_min}, {w_max})")
    try:
        n = check_positive_int(n, "n", minimum=2)
    except ValidationError as exc:
        raise InvalidRange(str(exc)) from None
    return np.linspace(w_min, w_max, n)


def sample_response(model, omegas):
    """Samples ``model(j*omega)`` on the grid.

    A :class:`DenominatorUnderflow` carries the offending frequency index.
    """
    w = check_grid(omegas)
    try:
        values = eval_transfer(model, 1j * w)
    except DenominatorUnderflow as exc:
        raise DenominatorUnderflow(
            f"pole on the grid at omega[{exc.index}] = {w[exc.index]:.6g} rad/s",
            index=exc.index,
        ) from None
    return FreqResponseData(w, values)


def invert_response(data):
    """Pointwise reciprocal of the samples (response of ``1/P``)."""
    mag = np.abs(data.samples)
    tiny = mag <= 1e-12 * mag.max()
    if np.any(tiny):
        raise NearZeroSample(int(np.flatnonzero(tiny)[0]))
    return data.with_samples(1.0 / data.samples)

