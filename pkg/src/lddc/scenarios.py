"""Ready-made plants, reference shapes and published controllers used as test data."""

import numpy as np

from .plants import DelayedRational, OpenChannel, RationalLTI

# Unstable pole pair of the crystallizer surrogate, rad/s.
CRYSTALLIZER_POLES = (1.07e-4 + 0.852e-2j, 1.07e-4 - 0.852e-2j)


def crystallizer_surrogate(delay=50.0):
    """Unstable, delayed, minimum-phase stand-in for a continuous crystallizer.

    ``P(s) = 0.01 (s+0.01)(s+0.05)(s+0.5) / (q(s) [(s+0.02)(s+0.2) + 0.002 e^{-s delay}])``
    with ``q`` the monic quadratic whose roots are :data:`CRYSTALLIZER_POLES`.
    The bracket has no right-half-plane roots for any delay since
    ``|(jw+0.02)(jw+0.2)| >= 0.004 > 0.002``. Relative degree one keeps the
    ideal controller for a first-order reference biproper.
    """
    p = CRYSTALLIZER_POLES[0]
    q = np.array([1.0, -2.0 * p.real, abs(p) ** 2])
    num = 1e-2 * np.polymul(np.polymul([1.0, 0.01], [1.0, 0.05]), [1.0, 0.5])
    stable_part = np.polymul([1.0, 0.02], [1.0, 0.2])
    return DelayedRational(
        num,
        [(np.polymul(q, stable_part), 0.0), (0.002 * q, float(delay))],
    )


def saint_venant_channel(B0=50.0, L=4000.0, x=None, V=1.0, C=4.0, gamma=2e-3, delta=2e-3):
    """Linearised open-channel level response at abscissa ``x`` (default: downstream end).

    ``V`` is the mean flow velocity and ``C`` the wave celerity (``C > V``, fluvial
    flow); ``gamma`` and ``delta`` are the friction/slope coefficients of the
    characteristic equation ``(C^2-V^2) l^2 - (2Vs+gamma) l - (s^2+delta s) = 0``.
    """
    if not C > V > 0:
        raise ValueError("need C > V > 0 (fluvial regime)")
    x = L if x is None else x
    k = C**2 - V**2
    return OpenChannel(
        B0=B0,
        L=L,
        x=x,
        a=V / k,
        b=gamma / (2 * k),
        c=C**2 / k**2,
        d=(V * gamma + k * delta) / k**2,
        e=gamma**2 / (4 * k**2),
    )


def first_order_reference(tau=1.0):
    return RationalLTI([1.0], [float(tau), 1.0])


def second_order_reference(omega0, xi=1.0):
    omega0 = float(omega0)
    return RationalLTI([1.0], [1.0 / omega0**2, 2.0 * xi / omega0, 1.0])


def structured_hinf_controller():
    """Fixed-structure controller obtained by nonsmooth H-infinity synthesis."""
    return RationalLTI([54.47, 2.317, 0.02446], [1.0, 0.002033, 4.374e-6])


def loewner_order2_controller():
    """Order-2 reduction of the crystallizer ideal controller."""
    return RationalLTI(
        39.082 * np.array([1.0, 0.04164, 0.003132]),
        np.polymul([1.0, 0.0], [1.0, 0.002751]),
    )


def loewner_order2_controller_alt():
    """Order-2 controller for the alternative reference model."""
    return RationalLTI(
        27.578 * np.array([1.0, 0.06562, 0.004418]),
        np.polymul([1.0, 1.026e-6], [1.0, 0.002737]),
    )
