"""Small-gain certification of reduced controllers and closed-loop checks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from ._validation import check_positive_float
from .errors import AlgebraicLoopSingular, LDDCError, StiffnessWarning, ValidationError
from .hardy import project
from .loewner import DescriptorSystem, STABILITY_MARGIN, eval_descriptor, realize
from .plants import FreqResponseData, RationalLTI
from .refmodel import reference_samples

DEFAULT_EPS = 1e-3
DEFAULT_CANCEL_DISTANCE = 1e-3


class ClosedLoopData(FreqResponseData):
    """Reconstructed closed-loop samples ``H = PK / (1 + PK)``."""


def _controller_samples(k, omegas):
    if isinstance(k, DescriptorSystem):
        return eval_descriptor(k, 1j * omegas)
    if isinstance(k, FreqResponseData):
        if k.omegas.shape != omegas.shape or not np.array_equal(k.omegas, omegas):
            raise ValidationError("controller samples are on a different grid")
        return k.samples
    if callable(k):
        return np.asarray(k(1j * omegas), dtype=complex) * np.ones(omegas.shape)
    vals = np.asarray(k, dtype=complex)
    if vals.ndim == 0:
        return np.full(omegas.shape, complex(vals))
    if vals.shape != omegas.shape:
        raise ValidationError("controller samples do not match the grid")
    return vals


def gamma_bound(plant, m):
    """Grid maximum of ``|P (1 - M)|``."""
    mv = reference_samples(m, plant.omegas)
    return float(np.max(np.abs(plant.samples * (1 - mv))))


def delta_norm(kr, kstar):
    """Grid maximum of ``|K_r - K*|``."""
    return float(np.max(np.abs(_controller_samples(kr, kstar.omegas) - kstar.samples)))


@dataclass(frozen=True, eq=False)
class StabilityCertificate:
    gamma_tilde: float
    bound: float
    delta_norms: dict
    controller_stable: dict
    certified: dict
    max_certified_order: int | None
    errors: dict = field(default_factory=dict)
    controllers: dict = field(default_factory=dict)

    @property
    def certified_orders(self):
        return sorted(r for r, ok in self.certified.items() if ok)

    def to_dict(self):
        return {
            "gamma_tilde": self.gamma_tilde,
            "bound": self.bound,
            "orders": [
                {
                    "order": r,
                    "delta_norm": self.delta_norms.get(r),
                    "controller_stable": self.controller_stable.get(r),
                    "certified": self.certified.get(r, False),
                }
                for r in sorted(set(self.delta_norms) | set(self.errors))
            ],
            "max_certified_order": self.max_certified_order,
            "errors": {str(r): msg for r, msg in sorted(self.errors.items())},
        }


def certify_controllers(controllers, kstar, plant, m, margin=STABILITY_MARGIN):
    """Small-gain check of given controllers (mapping order -> DescriptorSystem)."""
    gamma = gamma_bound(plant, m)
    bound = 1.0 / gamma if gamma > 0 else np.inf
    deltas, stable, cert, errors = {}, {}, {}, {}
    for r, k in controllers.items():
        try:
            deltas[r] = delta_norm(k, kstar)
            stable[r] = k.is_stable(margin) if isinstance(k, DescriptorSystem) else True
        except LDDCError as exc:
            errors[r] = f"{type(exc).__name__}: {exc}"
            continue
        cert[r] = bool(stable[r] and deltas[r] < bound)
    ok = [r for r, c in cert.items() if c]
    return StabilityCertificate(
        gamma_tilde=gamma,
        bound=float(bound),
        delta_norms=deltas,
        controller_stable=stable,
        certified=cert,
        max_certified_order=max(ok) if ok else None,
        errors=errors,
        controllers=dict(controllers),
    )


def certify_orders(pencil, kstar, plant, m, orders, tol=None):
    """Realize ``K_r`` for each order and certify it against ``1 / gamma_tilde``.

    Realization failures are recorded per order in ``errors``.
    """
    orders = list(orders)
    if not orders:
        raise ValidationError("orders must be nonempty")
    controllers, errors = {}, {}
    for r in orders:
        try:
            controllers[r] = realize(pencil, r) if tol is None else realize(pencil, r, tol)
        except LDDCError as exc:
            errors[r] = f"{type(exc).__name__}: {exc}"
    cert = certify_controllers(controllers, kstar, plant, m)
    errors.update(cert.errors)
    return StabilityCertificate(
        gamma_tilde=cert.gamma_tilde,
        bound=cert.bound,
        delta_norms=cert.delta_norms,
        controller_stable=cert.controller_stable,
        certified=cert.certified,
        max_certified_order=cert.max_certified_order,
        errors=errors,
        controllers=controllers,
    )


def reconstruct_closed_loop(plant, k):
    """``H = P K / (1 + P K)`` pointwise on the plant grid."""
    kv = _controller_samples(k, plant.omegas)
    loop = plant.samples * kv
    ret = 1 + loop
    bad = np.abs(ret) <= 1e-12
    if np.any(bad):
        raise AlgebraicLoopSingular(int(np.flatnonzero(bad)[0]))
    return ClosedLoopData(plant.omegas, loop / ret)


@dataclass(frozen=True)
class ProjectionTestResult:
    verdict: str
    antistable_fraction: float
    cancelled_poles: tuple = ()

    def __str__(self):
        return self.verdict


def _zeros_of(k):
    if k is None:
        return np.zeros(0, complex)
    if isinstance(k, DescriptorSystem):
        return k.zeros()
    if isinstance(k, RationalLTI):
        return k.zeros()
    return np.asarray(k, dtype=complex)


def projection_stability_test(h, est, k=None, eps=DEFAULT_EPS, cancel_distance=DEFAULT_CANCEL_DISTANCE,
                              k_basis=None):
    """Three-valued stability verdict from the antistable content of ``h``.

    ``stable`` needs an antistable energy fraction below ``eps`` and no
    controller zero within ``cancel_distance`` (relative) of an estimated
    plant RHP pole; ``unstable`` means a fraction above ``10 * eps``.
    """
    eps = check_positive_float(eps, "eps")
    if k_basis is None:
        k_basis = min(40, (len(h) - 1) // 2)
    split = project(h, k_basis)
    frac = split.antistable_fraction()
    zeros = _zeros_of(k)
    cancelled = []
    for p in np.asarray(est.rhp_poles if est is not None else [], dtype=complex):
        if zeros.size and np.min(np.abs(zeros - p)) <= cancel_distance * abs(p):
            cancelled.append(complex(p))
    if frac > 10 * eps:
        verdict = "unstable"
    elif frac < eps and not cancelled:
        verdict = "stable"
    else:
        verdict = "inconclusive"
    return ProjectionTestResult(verdict, float(frac), tuple(cancelled))


def _closed_loop_state_space(plant, k):
    ap, bp, cp, dp = signal.tf2ss(plant.num, plant.den)
    dp = float(np.squeeze(dp)) if np.size(dp) else 0.0
    if k.order:
        try:
            ek = np.linalg.solve(k.E, np.hstack([k.A, k.B]))
        except np.linalg.LinAlgError:
            raise ValidationError("controller has a singular E (improper); cannot simulate") from None
        if np.linalg.cond(k.E) > 1e12:
            raise ValidationError("controller has a singular E (improper); cannot simulate")
        ak, bk = ek[:, :-1], ek[:, -1:]
    else:
        ak, bk = np.zeros((0, 0)), np.zeros((0, 1))
    ck, dk = k.C, k.D
    # e = r - y, u = ck xk + dk e, y = cp xp + dp u
    loop = 1 + dp * dk
    if abs(loop) < 1e-12:
        raise AlgebraicLoopSingular(0)
    cp = np.atleast_2d(cp)
    np_ = ap.shape[0]
    # y = (cp xp + dp ck xk + dp dk r) / loop
    cy = np.hstack([cp, dp * ck]) / loop
    dy = dp * dk / loop
    # u = ck xk + dk (r - y)
    cu = np.hstack([np.zeros((1, np_)), ck]) - dk * cy
    du = dk * (1 - dy)
    a = np.zeros((np_ + ak.shape[0],) * 2)
    b = np.zeros((a.shape[0], 1))
    a[:np_, :] = bp @ cu
    a[:np_, :np_] += ap
    b[:np_] = bp * du
    a[np_:, :] = -bk @ cy
    a[np_:, np_:] += ak
    b[np_:] = bk * (1 - dy)
    return a, b, cy, dy


def step_response(plant, k, t_end, dt):
    """Unit reference step of the loop ``u = K (r - y)``, ``y = P u`` by fixed-step RK4.

    Returns ``(t, y)`` arrays.
    """
    t_end = check_positive_float(t_end, "t_end")
    dt = check_positive_float(dt, "dt")
    if not isinstance(plant, RationalLTI):
        raise ValidationError("step_response needs a rational plant")
    if plant.num.size > plant.den.size:
        raise ValidationError("plant must be proper")
    if isinstance(k, RationalLTI):
        k = DescriptorSystem.from_rational(k)
    elif np.ndim(k) == 0 and not isinstance(k, DescriptorSystem):
        k = DescriptorSystem.static(float(k))
    a, b, cy, dy = _closed_loop_state_space(plant, k)
    if a.size:
        rate = np.max(np.abs(np.linalg.eigvals(a)))
        if rate > 0 and dt > 0.1 / rate:
            warnings.warn(
                f"dt = {dt:g} exceeds 0.1 / max|eig| = {0.1 / rate:g}; RK4 may be inaccurate",
                StiffnessWarning,
                stacklevel=2,
            )
    steps = int(np.ceil(t_end / dt - 1e-9))
    t = np.arange(steps + 1) * dt
    x = np.zeros(a.shape[0])
    bv = b[:, 0]
    y = np.empty(t.size)
    cv = cy[0] if cy.size else np.zeros(0)

    def f(x):
        return a @ x + bv

    for i in range(t.size):
        y[i] = cv @ x + dy
        if i == steps:
            break
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return t, y
