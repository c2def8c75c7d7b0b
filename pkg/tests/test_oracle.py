
import numpy as np
import pytest

from bc1qes.diffop import Poly
from bc1qes.elliptic import RectangularLattice, invariants_from_lattice, wp_and_prime
from bc1qes.model import CouplingConstants, First, Second, Third, coupling_map
from bc1qes.oracle import (
    StencilError,
    local_residual,
    potential_in_tau,
    reconstruct,
    residual,
    sample_points,
    wp_double,
    wp_double_mismatch,
)
from bc1qes.spectrum import family_eigenpairs


def test_sample_points_deterministic_and_excluded(lattice):
    a, b = sample_points(lattice, 25, seed=3), sample_points(lattice, 25, seed=3)
    assert a == b
    s = np.real(a)
    assert np.all(np.minimum.reduce([s, np.abs(s - 0.5), 1 - s]) > 0.05)


def test_reconstruct_first_n0(lattice):
    inv = invariants_from_lattice(lattice)
    psi = reconstruct(First(0.4, 0), inv, lattice, Poly([1]))
    x = 0.3
    assert abs(psi(x) - wp_and_prime(x, inv, lattice)[1] ** 0.4 + 0j) < 1e-12 * abs(psi(x))
    assert abs(reconstruct(First(0, 0), inv, lattice, Poly([1]))(x) - 1) < 1e-15


def test_reconstruct_second_n0(lattice):
    inv = invariants_from_lattice(lattice)
    mu, x = 0.4, 0.21
    psi = reconstruct(Second(mu, 0, 2), inv, lattice, Poly([1]))
    w, dw = wp_and_prime(x, inv, lattice)
    want = complex(dw) ** mu * complex(w - inv.roots[1]) ** (0.5 - mu)
    assert abs(psi(x) - want) < 1e-12 * abs(want)


@pytest.mark.parametrize("fam", [First(0.37, 0), Second(0.37, 0, 1), Third(0.37, 0, 3), First(0.8, 3), Second(-0.6, 2, 2), Third(1.7, 2, 1)])
def test_validated_eigenpairs_pass(lattice, fam):
    inv = invariants_from_lattice(lattice)
    for e in family_eigenpairs(fam, inv):
        rep = residual(fam, inv, lattice, e)
        assert rep.passed, rep.max_residual
        assert len(rep.sample_points) == 25


def test_perturbed_energy_fails(lattice):
    inv = invariants_from_lattice(lattice)
    fam = First(0.37, 2)
    e = family_eigenpairs(fam, inv)[0]
    assert residual(fam, inv, lattice, e, energy=complex(e.energy) + 0.1).max_residual > 1e-3


def test_n1_candidate_adjudication():
    lat = RectangularLattice(1.1)
    inv = invariants_from_lattice(lat)
    mu = 0.3
    g2 = complex(inv.g2).real
    P = Poly([-0.5 * np.sqrt(g2 / 3), 1])
    printed = (1 + 2 * mu) * np.sqrt(3 * g2)
    fam = First(mu, 1)
    candidates = {
        (label, c): residual(fam, inv, lat, P, couplings=coupling_map(fam, as_printed=label), energy=c * printed).passed
        for label in ("general-n product", "tilde-kappa3 identity", "n=1 example")
        for c in (1, -0.5)
    }
    assert [k for k, ok in candidates.items() if ok] == [("tilde-kappa3 identity", -0.5)]


def test_reflection_symmetry():
    lat = RectangularLattice(1.0)
    inv = invariants_from_lattice(lat)
    fam = First(0.6, 2)
    k = coupling_map(fam)
    for e in family_eigenpairs(fam, inv):
        psi = reconstruct(fam, inv, lat, e)
        for x in (0.13, 0.31, 0.42):
            r1, p1 = local_residual(psi, k, e.energy, x)
            r2, p2 = local_residual(psi, k, e.energy, 1 - x)
            assert abs(abs(r1 / p1) - abs(r2 / p2)) < 1e-10


def test_fd_convergence_order():
    lat = RectangularLattice(1.0)
    inv = invariants_from_lattice(lat)
    fam = First(0.37, 1)
    e = family_eigenpairs(fam, inv)[0]
    psi = reconstruct(fam, inv, lat, e)
    k = coupling_map(fam)
    x = 0.27
    exact, _ = local_residual(psi, k, e.energy, x, "circle", 48)
    errs = [abs(local_residual(psi, k, e.energy, x, "fd", m)[0] - exact) for m in (8, 16, 32)]
    assert errs[0] / errs[1] > 16 and errs[1] / errs[2] > 16


def test_stencil_error_at_half_period(lattice):
    inv = invariants_from_lattice(lattice)
    psi = reconstruct(First(0.3, 0), inv, lattice, Poly([1]))
    with pytest.raises(StencilError):
        local_residual(psi, coupling_map(First(0.3, 0)), 0, 0.5)


def test_wp_double_agreement(lattice, rng):
    inv = invariants_from_lattice(lattice)
    x = rng.uniform(0.06, 0.94, 50)
    x = x[np.abs(x - 0.5) > 0.06]
    assert np.all(wp_double_mismatch(x, inv, lattice) < 1e-9)


def test_wp_double_quarter_period_is_finite():
    lat = RectangularLattice(1.0)
    inv = invariants_from_lattice(lat)
    v = wp_double(0.25, inv, lat)
    assert np.isfinite(v) and abs(v - inv.roots[0]) < 1e-10 * inv.scale


def test_potential_in_tau(lattice):
    inv = invariants_from_lattice(lattice)
    k = CouplingConstants(-0.42, 1.7)
    x = 0.23
    w = wp_and_prime(x, inv, lattice)[0]
    direct = k.kappa2 * wp_double(x, inv, lattice) + k.kappa3 * w
    assert abs(potential_in_tau(w, k, inv) - direct) < 1e-10 * abs(direct)
    # leading behaviour: linear coefficient (kappa2 + 4 kappa3) / 4
    big = 1e6
    assert abs(potential_in_tau(big, k, inv) / big - (k.kappa2 + 4 * k.kappa3) / 4) < 1e-6
