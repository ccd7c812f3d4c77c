"""Loewner-pencil interpolation of frequency samples and descriptor realizations.

Samples are conjugate-closed and dealt out in conjugate pairs to the two
point sets, so a block-diagonal unitary change of basis turns every matrix of
the pencil real. The direct feedthrough is estimated separately from the
pencil: it only shows up in the shifted Loewner matrix, where it adds a
rank-one term ``D * 1 1^T`` that would otherwise inflate the order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy import signal
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_frequency_data
from .errors import (
    CoincidentPoints,
    ResolventSingular,
    SingularPencil,
    TruncationTooAggressive,
    ValidationError,
)
from .plants import FreqResponseData

DEFAULT_TOL = 1e-10
STABILITY_MARGIN = 1e-9
_PAIR_BLOCK = np.array([[1.0, 1.0], [1j, -1j]]) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class PointPartition:
    mu: np.ndarray
    V: np.ndarray
    lam: np.ndarray
    W: np.ndarray

    @property
    def paired(self):
        """True when both sets are laid out as consecutive ``(x, conj x)`` pairs."""
        return _is_paired(self.mu, self.V) and _is_paired(self.lam, self.W)


def _is_paired(pts, vals):
    if pts.size % 2:
        return False
    return bool(
        np.array_equal(pts[1::2], np.conj(pts[0::2]))
        and np.array_equal(vals[1::2], np.conj(vals[0::2]))
    )


def partition_points(kstar):
    """Conjugate-close the samples and alternate the pairs between ``mu`` and ``lambda``."""
    if len(kstar) < 4:
        raise ValidationError("need at least 4 frequencies to build a pencil")
    s = 1j * kstar.omegas
    v = kstar.samples
    pts = np.empty((s.size, 2), complex)
    vals = np.empty((s.size, 2), complex)
    pts[:, 0], pts[:, 1] = s, np.conj(s)
    vals[:, 0], vals[:, 1] = v, np.conj(v)
    return PointPartition(
        mu=pts[0::2].ravel(),
        V=vals[0::2].ravel(),
        lam=pts[1::2].ravel(),
        W=vals[1::2].ravel(),
    )


@dataclass(frozen=True, eq=False)
class LoewnerPencil:
    L: np.ndarray
    Ls: np.ndarray
    V: np.ndarray
    W: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    svals_stacked: np.ndarray
    svals_concat: np.ndarray
    svals_L: np.ndarray
    real_form: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def check(self):
        """Largest violation of the two divided-difference identities."""
        dm = self.mu[:, None] - self.lam[None, :]
        e1 = self.L * dm - (self.V[:, None] - self.W[None, :])
        e2 = self.Ls * dm - (self.mu[:, None] * self.V[:, None] - self.lam[None, :] * self.W[None, :])
        return float(max(np.abs(e1).max(), np.abs(e2).max()))


def _pair_transform(k):
    return np.kron(np.eye(k // 2), _PAIR_BLOCK)


def build_pencil(part):
    """Loewner and shifted-Loewner matrices of a partition."""
    mu, lam, V, W = part.mu, part.lam, part.V, part.W
    dm = mu[:, None] - lam[None, :]
    hit = np.argwhere(dm == 0)
    if hit.size:
        i, j = hit[0]
        raise CoincidentPoints(int(i), int(j))
    L = (V[:, None] - W[None, :]) / dm
    Ls = (mu[:, None] * V[:, None] - lam[None, :] * W[None, :]) / dm
    real_form = None
    if part.paired:
        tm, tl = _pair_transform(mu.size), _pair_transform(lam.size).conj().T
        real_form = tuple(
            np.ascontiguousarray(x.real)
            for x in (
                tm @ L @ tl,
                tm @ Ls @ tl,
                tm @ V,
                W @ tl,
                tm @ np.ones(mu.size),
                np.ones(lam.size) @ tl,
            )
        )
    base_l = real_form[0] if real_form else L
    base_ls = real_form[1] if real_form else Ls
    return LoewnerPencil(
        L=L,
        Ls=Ls,
        V=V,
        W=W,
        mu=mu,
        lam=lam,
        svals_stacked=np.linalg.svd(np.hstack([base_l, base_ls]), compute_uv=False),
        svals_concat=np.linalg.svd(np.vstack([base_l, base_ls]), compute_uv=False),
        svals_L=np.linalg.svd(base_l, compute_uv=False),
        real_form=real_form,
    )


def _rank(svals, tol):
    if svals.size == 0 or svals[0] == 0:
        return 0
    return int(np.sum(svals / svals[0] > tol))


def minimal_order(pencil, tol=DEFAULT_TOL):
    """Numerical rank of the Loewner matrix: the McMillan degree of the strictly proper part.

    Zero when the data is a constant, in which case :func:`realize` returns a
    static gain.
    """
    s = pencil.svals_L
    if s.size == 0 or s[0] <= 1e-14 * max(1.0, np.abs(pencil.V).max()):
        return 0
    return _rank(s, tol)


def _canon(u):
    idx = np.argmax(np.abs(u), axis=0)
    sg = np.sign(u[idx, np.arange(u.shape[1])])
    sg[sg == 0] = 1.0
    return u * sg


@dataclass(frozen=True, eq=False)
class DescriptorSystem:
    """``H(s) = C (sE - A)^-1 B + D`` with real matrices."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.E).shape[0] if np.size(self.E) else 0
        E = np.asarray(self.E, dtype=float).reshape(n, n)
        A = np.asarray(self.A, dtype=float).reshape(n, n)
        B = np.asarray(self.B, dtype=float).reshape(n, 1)
        C = np.asarray(self.C, dtype=float).reshape(1, n)
        D = float(np.real(self.D))
        for name, m in zip("EABC", (E, A, B, C)):
            if not np.all(np.isfinite(m)):
                raise ValidationError(f"{name} has non-finite entries")
        if not np.isfinite(D):
            raise ValidationError("D is not finite")
        for name, m in zip("EABC", (E, A, B, C)):
            m.flags.writeable = False
            object.__setattr__(self, name, m)
        object.__setattr__(self, "D", D)

    @property
    def order(self):
        return self.E.shape[0]

    @classmethod
    def static(cls, gain):
        z = np.zeros((0, 0))
        return cls(z, z, np.zeros((0, 1)), np.zeros((1, 0)), float(gain))

    @classmethod
    def from_rational(cls, model):
        """State-space form (E = I) of a proper :class:`RationalLTI`."""
        if model.num.size > model.den.size:
            raise ValidationError("improper transfer function has no state-space form")
        a, b, c, d = signal.tf2ss(model.num, model.den)
        n = a.shape[0]
        return cls(np.eye(n), a, b, c, float(np.squeeze(d)) if np.size(d) else 0.0)

    def __call__(self, s):
        return eval_descriptor(self, s)

    def poles(self):
        return controller_poles(self)

    def zeros(self):
        return controller_zeros(self)

    def is_stable(self, margin=STABILITY_MARGIN):
        p = self.poles()
        return bool(np.all(p.real < margin))

    def to_dict(self):
        def cplx(z):
            return [[float(v.real), float(v.imag)] for v in z]

        return {
            "order": self.order,
            "E": self.E.tolist(),
            "A": self.A.tolist(),
            "B": self.B.ravel().tolist(),
            "C": self.C.ravel().tolist(),
            "D": self.D,
            "poles": cplx(self.poles()),
            "zeros": cplx(self.zeros()),
        }

    @classmethod
    def from_dict(cls, d):
        n = int(d["order"])
        return cls(
            np.asarray(d["E"], float).reshape(n, n),
            np.asarray(d["A"], float).reshape(n, n),
            np.asarray(d["B"], float).reshape(n, 1),
            np.asarray(d["C"], float).reshape(1, n),
            float(d.get("D", 0.0)),
        )

    def zpk_text(self):
        """Human-readable zero-pole-gain summary."""
        z, p = self.zeros(), self.poles()
        lines = [f"order: {self.order}", f"feedthrough: {float(self.D)!r}"]
        lines.append(f"gain: {_high_frequency_gain(self, z, p)!r}")
        lines.append("zeros:")
        lines += [f"  {float(v.real)!r} {float(v.imag):+.17g}j" for v in z]
        lines.append("poles:")
        lines += [f"  {float(v.real)!r} {float(v.imag):+.17g}j" for v in p]
        return "\n".join(lines) + "\n"


def _high_frequency_gain(sys, z, p):
    # k such that H(s) = k prod(s - z) / prod(s - p), matched at a probe point
    s0 = 1j * (1.0 + np.max(np.abs(np.concatenate([z, p, [0]]))))
    try:
        h = eval_descriptor(sys, s0)
    except ResolventSingular:
        return float("nan")
    base = np.prod(s0 - z) / np.prod(s0 - p) if p.size or z.size else 1.0
    return float(np.real(h / base)) if base != 0 else float("nan")


def _probe_regular(E, A):
    if E.shape[0] == 0:
        return
    rng = np.random.default_rng(12345)
    scale = max(np.linalg.norm(A, 2), 1e-300) / max(np.linalg.norm(E, 2), 1e-300)
    s0 = scale * complex(rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5))
    if np.linalg.cond(s0 * E - A) > 1e14:
        raise SingularPencil("pencil (A, E) is singular at the probe point")


def _projection_bases(pencil, tol):
    # feedthrough and the two singular-vector bases depend only on the pencil and tol
    if tol in pencil._cache:
        return pencil._cache[tol]
    L, Ls, V, W, om, ol = pencil.real_form
    r = minimal_order(pencil, tol)
    U, _, Vh = np.linalg.svd(L, full_matrices=False)
    a = om - U[:, :r] @ (U[:, :r].T @ om)
    b = ol - (ol @ Vh[:r].T) @ Vh[:r]
    D = 0.0
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na > 1e-8 * np.linalg.norm(om) and nb > 1e-8 * np.linalg.norm(ol):
        D = float(a @ Ls @ b / (na**2 * nb**2))
    Ls_p = Ls - D * np.outer(om, ol)
    k = max(r, 1)
    Y = _canon(np.linalg.svd(np.hstack([L, Ls_p]), full_matrices=False)[0][:, :k])
    X = _canon(np.linalg.svd(np.vstack([L, Ls_p]), full_matrices=False)[2][:k].T)
    pencil._cache[tol] = (D, Y, X)
    return pencil._cache[tol]


def realize(pencil, n, tol=DEFAULT_TOL):
    """Order-``n`` real descriptor realization by projection onto dominant singular subspaces.

    ``n = 0`` yields the static feedthrough alone.
    """
    if pencil.real_form is None:
        raise ValidationError("realize needs a conjugate-paired partition")
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValidationError(f"order must be a nonnegative integer, got {n!r}")
    n = int(n)
    L, Ls, V, W, om, ol = pencil.real_form
    if n > min(L.shape):
        raise ValidationError(f"order {n} exceeds the pencil dimensions {L.shape}")
    r = minimal_order(pencil, tol)
    if n > r:
        raise TruncationTooAggressive(f"order {n} exceeds the numerical rank {r} of the pencil")

    D, Y, X = _projection_bases(pencil, tol)
    if n == 0:
        return DescriptorSystem.static(D)
    Ls_p = Ls - D * np.outer(om, ol)
    V_p = V - D * om
    W_p = W - D * ol
    Y1, X2 = Y[:, :n], X[:, :n]
    E = -Y1.T @ L @ X2
    A = -Y1.T @ Ls_p @ X2
    B = Y1.T @ V_p
    C = W_p @ X2
    _probe_regular(E, A)
    return DescriptorSystem(E, A, B, C, D)


def eval_descriptor(sys, s):
    """``C (sE - A)^-1 B + D`` by linear solves, vectorised over ``s``."""
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if sys.order == 0:
        out = np.full(s.shape, complex(sys.D))
        return complex(out[0]) if scalar else out
    mats = s[:, None, None] * sys.E[None] - sys.A[None]
    rhs = np.broadcast_to(sys.B.astype(complex), (s.size,) + sys.B.shape)
    try:
        x = np.linalg.solve(mats, rhs)
    except np.linalg.LinAlgError:
        for si, m in zip(s, mats):
            try:
                np.linalg.solve(m, sys.B)
            except np.linalg.LinAlgError:
                raise ResolventSingular(complex(si)) from None
        raise
    out = (sys.C[None] @ x)[:, 0, 0] + sys.D
    bad = ~np.isfinite(out)
    if np.any(bad):
        raise ResolventSingular(complex(s[np.flatnonzero(bad)[0]]))
    return complex(out[0]) if scalar else out


def _finite_eigs(A, E):
    if A.shape[0] == 0:
        return np.zeros(0, complex)
    w = scipy.linalg.eigvals(A, E, homogeneous_eigvals=True)
    alpha, beta = w[0], w[1]
    na = max(np.linalg.norm(A, 2), 1e-300)
    ne = max(np.linalg.norm(E, 2), 1e-300)
    keep = np.abs(beta) / ne > 1e-12 * np.abs(alpha) / na
    lam = alpha[keep] / beta[keep]
    return lam[np.lexsort((lam.imag, lam.real))]


def controller_poles(sys):
    """Finite generalized eigenvalues of ``(A, E)``."""
    if sys.order:
        _probe_regular(sys.E, sys.A)
    return _finite_eigs(sys.A, sys.E)


def controller_zeros(sys):
    """Finite invariant zeros from the Rosenbrock pencil."""
    n = sys.order
    if n == 0:
        return np.zeros(0, complex)
    M = np.block([[sys.A, sys.B], [sys.C, np.array([[sys.D]])]])
    N = np.zeros((n + 1, n + 1))
    N[:n, :n] = sys.E
    return _finite_eigs(M, N)


class LoewnerInterpolator(RegressorMixin, BaseEstimator):
    """Fit a descriptor model to complex frequency samples.

    ``order=None`` keeps the numerical rank found with ``tol``.
    """

    def __init__(self, order=None, tol=DEFAULT_TOL):
        self.order = order
        self.tol = tol

    def fit(self, X, y):
        w, g = check_frequency_data(X, y)
        self.pencil_ = build_pencil(partition_points(FreqResponseData(w, g)))
        self.rank_ = minimal_order(self.pencil_, self.tol)
        n = self.rank_ if self.order is None else self.order
        self.system_ = realize(self.pencil_, n, self.tol)
        self.order_ = self.system_.order
        return self

    def predict(self, X):
        check_is_fitted(self, "system_")
        w = check_frequency_data(X)
        return eval_descriptor(self.system_, 1j * w)

    def score(self, X, y, sample_weight=None):
        """Negative max relative error (higher is better)."""
        pred = self.predict(X)
        y = np.asarray(y, dtype=complex)
        return -float(np.max(np.abs(pred - y) / np.maximum(np.abs(y), 1e-300)))
