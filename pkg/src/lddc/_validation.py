"""Input validation helpers shared by the functional API and the estimators.

scikit-learn's own ``check_array`` refuses complex input, so frequency-domain
data is validated here instead.
"""

import numbers

import numpy as np

from .errors import ValidationError


def check_grid(omegas, name="omegas"):
    """Return ``omegas`` as a float array after checking grid invariants."""
    w = np.asarray(omegas, dtype=float)
    if w.ndim == 2 and 1 in w.shape:
        w = w.ravel()
    if w.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {w.shape}")
    if w.size < 2:
        raise ValidationError(f"{name} needs at least 2 frequencies, got {w.size}")
    if not np.all(np.isfinite(w)):
        raise ValidationError(f"{name} contains non-finite values")
    if np.any(w <= 0):
        raise ValidationError(f"{name} must be strictly positive")
    if np.any(np.diff(w) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return w


def check_samples(samples, n, name="samples"):
    z = np.asarray(samples, dtype=complex)
    if z.ndim == 2 and 1 in z.shape:
        z = z.ravel()
    if z.shape != (n,):
        raise ValidationError(f"{name} must have shape ({n},), got {z.shape}")
    if not np.all(np.isfinite(z)):
        bad = int(np.flatnonzero(~np.isfinite(z))[0])
        raise ValidationError(f"{name} contains a non-finite value at index {bad}")
    return z


def check_frequency_data(X, y=None):
    """sklearn-style entry point: ``X`` holds angular frequencies, ``y`` responses.

    ``X`` may be a 1-D array or a single-column 2-D array.
    """
    w = check_grid(X, name="X")
    if y is None:
        return w
    return w, check_samples(y, w.size, name="y")


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive_float(value, name):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a number, got {value!r}") from None
    if not np.isfinite(v) or v <= 0:
        raise ValidationError(f"{name} must be positive and finite, got {value!r}")
    return v
