import numpy as np
import pytest
from hypothesis import settings
from scipy import signal

from lddc.plants import RationalLTI

# numerical properties are checked on a fixed, reproducible set of draws
settings.register_profile("repro", derandomize=True, deadline=None, print_blob=True)
settings.load_profile("repro")


def separated_magnitudes(rng, count, lo=1e-3, hi=1.0, min_ratio=1.3):
    """Log-uniform magnitudes in [lo, hi] with pairwise ratio at least min_ratio."""
    for _ in range(1000):
        mags = np.sort(10 ** rng.uniform(np.log10(lo), np.log10(hi), count))
        if count < 2 or np.all(mags[1:] / mags[:-1] >= min_ratio):
            return mags
    raise RuntimeError("could not draw separated magnitudes")


def random_stable_rational(rng, degree, lo=1e-3, hi=1.0, feedthrough=None):
    """Real rational system of McMillan degree ``degree`` built from partial fractions.

    Pole magnitudes are log-uniform in [lo, hi] and pairwise separated; each
    residue is scaled by its pole magnitude so every mode has order-one DC weight.
    """
    n_pairs = int(rng.integers(0, degree // 2 + 1))
    n_real = degree - 2 * n_pairs
    mags = separated_magnitudes(rng, n_pairs + n_real, lo, hi)
    rng.shuffle(mags)
    poles, residues = [], []
    for m in mags[:n_pairs]:
        p = m * np.exp(1j * (np.pi - rng.uniform(0.3, 1.2)))
        r = m * rng.uniform(0.5, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        poles += [p, np.conj(p)]
        residues += [r, np.conj(r)]
    for m in mags[n_pairs:]:
        poles.append(-m)
        residues.append(m * rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]))
    if feedthrough is None:
        feedthrough = float(rng.choice([0.0, rng.uniform(0.5, 2.0)]))
    k = [feedthrough] if feedthrough else []
    num, den = signal.invres(residues, poles, k)
    return RationalLTI(np.real(num), np.real(den))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
