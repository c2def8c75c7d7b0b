from fractions import Fraction

import mpmath
import numpy as np
import pytest

from bc1qes.elliptic import LatticeInvariants, RectangularLattice


def mp_wp(z, lat):
    """Reference wp from Jacobi theta functions (mpmath), independent of the library."""
    w1, w3 = complex(lat.omega1), complex(lat.omega3)
    tau = w3 / w1
    q = mpmath.exp(1j * mpmath.pi * tau)
    v = mpmath.pi * z / (2 * w1)
    t2, t3 = mpmath.jtheta(2, 0, q), mpmath.jtheta(3, 0, q)
    t4v, t1v = mpmath.jtheta(4, v, q), mpmath.jtheta(1, v, q)
    c = mpmath.pi / (2 * w1)
    return complex((c * t2 * t3 * t4v / t1v) ** 2 - c**2 / 3 * (t2**4 + t3**4))


LATTICES = [RectangularLattice(1.0), RectangularLattice(1.3), RectangularLattice(0.8)]


@pytest.fixture(params=LATTICES, ids=lambda l: f"T={l.tau_im}")
def lattice(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def exact_inv():
    """Rational roots give rational invariants, so every algebraic step stays exact."""
    return LatticeInvariants.from_roots(Fraction(7, 3), Fraction(-1, 5))


def random_fraction(rng, lo=-2, hi=2, den=12):
    return Fraction(int(rng.integers(lo * den, hi * den + 1)), den)


# -- acceptance summary ------------------------------------------------------

_ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store one verdict line per acceptance criterion for the end-of-run summary."""

    def _record(number: int, ok: bool, detail: str):
        _ACCEPTANCE[number] = (ok, detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
