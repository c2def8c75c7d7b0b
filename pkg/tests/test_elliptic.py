import math
from fractions import Fraction

import numpy as np
import pytest

from bc1qes.elliptic import (
    GeneralLattice,
    LatticeError,
    LatticeInvariants,
    PoleError,
    RectangularLattice,
    invariants_from_lattice,
    lattice_from_invariants,
    roots_from_invariants,
    wp,
    wp_and_prime,
    wp_prime,
)
from conftest import mp_wp


def test_roots_simple_cubic_exact():
    assert roots_from_invariants(4, 0) == (1, 0, -1)


def test_roots_cube_roots_of_unity():
    r = roots_from_invariants(0, 4)
    assert r[0] == 1
    for z in r:
        assert abs(z**3 - 1) < 1e-14
    assert r[1].imag > 0 > r[2].imag


def test_roots_residuals_and_sum():
    inv = LatticeInvariants.from_invariants(7, 2)
    assert max(inv.cubic_residuals()) < 1e-12 * 7
    assert abs(sum(complex(e) for e in inv.roots)) < 1e-12
    assert [complex(e).real for e in inv.roots] == sorted([complex(e).real for e in inv.roots], reverse=True)


def test_roots_degenerate_flagged():
    assert LatticeInvariants.from_invariants(3, 1).degenerate  # 27 - 27 = 0
    assert not LatticeInvariants.from_invariants(7, 2).degenerate


def test_from_roots_exact():
    inv = LatticeInvariants.from_roots(Fraction(7, 3), Fraction(-1, 5))
    assert inv.exact
    assert sum(inv.roots) == 0
    assert all(r == 0 for r in inv.cubic_residuals())


def test_square_lattice_lemniscatic():
    inv = invariants_from_lattice(RectangularLattice(1.0))
    assert complex(inv.g2).real > 0
    assert abs(complex(inv.g3)) < 1e-12 * abs(inv.g2)
    assert abs(complex(inv.roots[1])) < 1e-12


def test_thin_lattice_trigonometric_limit():
    inv = invariants_from_lattice(RectangularLattice(20.0))
    ratio = complex(inv.g3) / complex(inv.g2)
    assert abs(ratio - 2 * math.pi**2 / 9) < 1e-8
    assert inv.degenerate
    assert inv.discriminant != 0


@pytest.mark.parametrize("lat", [RectangularLattice(0.7), RectangularLattice(1.3), GeneralLattice(0.5, 0.2 + 0.7j)])
def test_discriminant_nonzero_and_roundtrip(lat):
    inv = invariants_from_lattice(lat)
    assert abs(complex(inv.discriminant)) > 0
    back = invariants_from_lattice(lattice_from_invariants(inv))
    assert abs(back.g2 - inv.g2) < 1e-9 * abs(inv.g2)
    assert abs(back.g3 - inv.g3) < 1e-9 * max(1, abs(inv.g3))


def test_degenerate_invariants_have_no_lattice():
    with pytest.raises(LatticeError):
        lattice_from_invariants(LatticeInvariants.from_invariants(3, 1))


def test_wp_against_theta_reference(lattice, rng):
    inv = invariants_from_lattice(lattice)
    for z in rng.uniform(0.05, 0.95, 10) + 1j * rng.uniform(-0.3, 0.3, 10):
        ref = mp_wp(z, lattice)
        assert abs(wp(z, inv, lattice) - ref) < 1e-11 * max(1, abs(ref))


def test_wp_parity_and_periods(lattice):
    inv = invariants_from_lattice(lattice)
    x = 0.3
    assert abs(wp(-x, inv, lattice) - wp(x, inv, lattice)) < 1e-12
    assert abs(wp(x + 1, inv, lattice) - wp(x, inv, lattice)) < 1e-12 * abs(wp(x, inv, lattice))
    assert abs(wp(x + 1j * lattice.tau_im, inv, lattice) - wp(x, inv, lattice)) < 1e-12 * abs(wp(x, inv, lattice))
    assert abs(wp_prime(-x, inv, lattice) + wp_prime(x, inv, lattice)) < 1e-12 * abs(wp_prime(x, inv, lattice))


def test_half_periods_hit_roots(lattice):
    inv = invariants_from_lattice(lattice)
    for w, e in zip(lattice.half_periods, inv.roots):
        v, dv = wp_and_prime(w, inv, lattice)
        assert abs(v - e) < 1e-10 * inv.scale
        assert abs(dv) < 1e-10 * inv.scale


def test_ode_residual_random_points(lattice, rng):
    inv = invariants_from_lattice(lattice)
    x = rng.uniform(0.1, 0.9, 100)
    w, dw = wp_and_prime(x, inv, lattice)
    g2, g3 = complex(inv.g2), complex(inv.g3)
    res = np.abs(dw**2 - (4 * w**3 - g2 * w - g3))
    assert np.all(res < 1e-10 * np.maximum(1, np.abs(w) ** 3))


def test_wp_prime_is_derivative(lattice):
    inv = invariants_from_lattice(lattice)
    x, h = 0.37, 1e-5
    fd = (wp(x + h, inv, lattice) - wp(x - h, inv, lattice)) / (2 * h)
    assert abs(fd - wp_prime(x, inv, lattice)) < 1e-6 * abs(fd)


def test_wp_without_lattice_matches(lattice):
    inv = invariants_from_lattice(lattice)
    assert abs(wp(0.3 + 0.1j, inv) - wp(0.3 + 0.1j, inv, lattice)) < 1e-11 * abs(wp(0.3, inv))


def test_pole_raises(lattice):
    inv = invariants_from_lattice(lattice)
    with pytest.raises(PoleError):
        wp(1.0 + 1e-12, inv, lattice)


def test_rectangular_lattice_validates():
    with pytest.raises(LatticeError):
        RectangularLattice(-1.0)


def test_real_invariants_give_real_ordered_roots():
    inv = invariants_from_lattice(RectangularLattice(1.3))
    e = [complex(r) for r in inv.roots]
    assert all(z.imag == 0 for z in e)
    assert e[0].real > e[1].real > e[2].real
