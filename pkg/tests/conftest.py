import math

import numpy as np
import pytest

from caustic.fourier_profile import FourierProfile, profile_from_terms

SQ3 = math.sqrt(3.0)


def cosines(*terms):
    """``cosines((5, 1), (7, -1))`` is ``cos 5t - cos 7t``."""
    return profile_from_terms(terms)


def rel_err(observed, predicted):
    return abs(observed - predicted) / max(abs(predicted), 1.0)


def random_profile(rng, kmax=8, count=3, scale=1.0):
    """Random real profile with ``count`` harmonics in ``1..kmax``."""
    ks = rng.choice(np.arange(1, kmax + 1), size=count, replace=False)
    cos = {int(k): float(rng.uniform(-scale, scale)) for k in ks}
    sin = {int(k): float(rng.uniform(-scale, scale)) for k in ks}
    return FourierProfile.from_trig(cos=cos, sin=sin)


@pytest.fixture
def p57():
    return cosines((5, 1.0), (7, -1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


CATALOG_HARMONICS = (5, 7, 11, 13, 17, 19, 23, 25)


def even_catalog(size=20, seed=7):
    """Even cosine polynomials in T_2 and T_3 with two or three non-unit harmonics.

    A ``cos t`` term is added so that ``n(0) = 0``; coefficients have
    magnitude in ``[0.3, 1]`` with random sign.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(size):
        ks = sorted(int(k) for k in rng.choice(CATALOG_HARMONICS, size=int(rng.integers(2, 4)),
                                                replace=False))
        amps = rng.uniform(0.3, 1.0, len(ks)) * rng.choice([-1.0, 1.0], len(ks))
        terms = list(zip(ks, amps.tolist()))
        terms.append((1, -float(np.sum(amps))))
        out.append(profile_from_terms(terms))
    return out


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
