"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a single PASS/FAIL line (see ``record`` in conftest), and
the lines are repeated in a summary section at the end of the pytest run.
A criterion that fails is left failing; nothing here is relaxed to get green.
"""
import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from bc1qes.cli import main
from bc1qes.diffop import Poly, apply, commutator, identity, matrix_on
from bc1qes.elliptic import (
    GeneralLattice,
    LatticeInvariants,
    RectangularLattice,
    invariants_from_lattice,
    lattice_from_invariants,
    wp_and_prime,
)
from bc1qes.integral import build_ipar, check_commutator
from bc1qes.model import (
    PRINTED_COUPLINGS,
    First,
    Second,
    Third,
    build_operator,
    build_sl2_form,
    energy_offset,
)
from bc1qes.oracle import residual, wp_double_mismatch
from bc1qes.sl2 import as_diffop, j0, jm, jp, lower
from bc1qes.spectrum import CirclePath, detect_structure, family_eigenpairs, trace_branches

from conftest import random_fraction

GOLDEN = Path(__file__).parent / "golden" / "discrepancies.json"
ANCHOR_LATTICES = [RectangularLattice(1.0), RectangularLattice(1.3), GeneralLattice(0.5, 0.25 + 0.6j)]


def _random_exact_inv(rng):
    while True:
        e1, e2 = random_fraction(rng, -3, 3, 7), random_fraction(rng, -3, 3, 7)
        if len({e1, e2, -e1 - e2}) == 3:
            return LatticeInvariants.from_roots(e1, e2)


def _random_family(rng, kind, n):
    p = random_fraction(rng)
    k = int(rng.integers(1, 4))
    return {"first": First(p, n), "second": Second(p, n, k), "third": Third(p, n, k)}[kind]


# 1 -------------------------------------------------------------------------


def test_c1_zero_mode_anchors_as_printed(record):
    rng = np.random.default_rng(1)
    params = rng.uniform(-0.9, 2.0, 5)
    t0 = time.perf_counter()
    worst, derived = {}, 0.0
    for kind, make in (("first", lambda p: First(p, 0)), ("second", lambda p: Second(p, 0, 1)), ("third", lambda p: Third(p, 0, 2))):
        w = 0.0
        for p in params:
            fam = make(float(p))
            k = PRINTED_COUPLINGS[kind]["zero-mode (n=0)"](fam)
            for lat in ANCHOR_LATTICES:
                inv = invariants_from_lattice(lat)
                E = energy_offset(fam, inv).value
                rep = residual(fam, inv, lat, Poly([1]), couplings=k, energy=E, samples=25)
                w = max(w, rep.max_residual)
                derived = max(derived, residual(fam, inv, lat, Poly([1]), energy=E, samples=25).max_residual)
        worst[kind] = w
    elapsed = time.perf_counter() - t0
    ok = all(v < 1e-8 for v in worst.values()) and elapsed < 10
    detail = ", ".join(f"{k} max residual {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.1f}s (derived couplings, same draws: {derived:.1e})"
    record(1, ok, detail)
    assert ok, detail


# 2 -------------------------------------------------------------------------


def _printed_n1(mu, g2):
    return (1 + 2 * mu) * math.sqrt(3) * complex(g2) ** 0.5


def test_c2_n1_eigenfunctions(record):
    rng = np.random.default_rng(2)
    draws = [(rng.uniform(-0.9, 2.0), rng.uniform(0.5, 5.0), rng.uniform(-1.0, 1.0)) for _ in range(10)]

    # fix the proportionality constant once, by the oracle, on the first draw
    mu, g2, g3 = draws[0]
    inv = LatticeInvariants.from_invariants(g2, g3)
    lat = lattice_from_invariants(inv)
    fam = First(mu, 1)
    pairs = family_eigenpairs(fam, inv)
    chosen = []
    for c in (1, -1, 0.5, -0.5):
        ok = True
        for e in pairs:
            sign = 1 if complex(e.poly.coeff(0)).real < 0 else -1
            ok &= residual(fam, inv, lat, e, energy=c * sign * _printed_n1(mu, g2)).passed
        if ok:
            chosen.append(c)
    assert len(chosen) == 1, chosen
    c = chosen[0]

    vec_err = val_err = 0.0
    for mu, g2, g3 in draws:
        inv = LatticeInvariants.from_invariants(g2, g3)
        half = 0.5 * math.sqrt(g2 / 3)
        pairs = family_eigenpairs(First(mu, 1), inv)
        got = sorted(pairs, key=lambda e: complex(e.poly.coeff(0)).real)
        for e, s in zip(got, (-1, 1)):
            vec_err = max(vec_err, abs(complex(e.poly.coeff(0)) - s * half), abs(complex(e.poly.coeff(1)) - 1))
            want = c * (-s) * _printed_n1(mu, g2)
            val_err = max(val_err, abs(complex(e.energy) - want) / abs(want))
    ok = vec_err < 1e-12 and val_err < 1e-12
    detail = f"E = {c} x printed value; eigenvector error {vec_err:.1e}, eigenvalue rel. error {val_err:.1e} over 10 draws"
    record(2, ok, detail)
    assert ok, detail


# 3 -------------------------------------------------------------------------


def test_c3_sl2_equivalence(record):
    rng = np.random.default_rng(3)
    bad = []
    printed_third_mismatch = 0
    for kind in ("first", "second", "third"):
        for i in range(20):
            n = int(rng.integers(0, 6)) if i % 2 == 0 else random_fraction(rng, -1, 5, 6)
            fam = _random_family(rng, kind, n)
            inv = _random_exact_inv(rng)
            form = lower(build_sl2_form(fam, inv))
            op = build_operator(fam, inv)
            assert op.exact and form.exact
            if form != op:
                bad.append(fam)
            if kind == "third" and build_operator(fam, inv, printed=True) != form:
                printed_third_mismatch += 1
    ok = not bad
    detail = f"60 exact draws, {len(bad)} mismatches (third family with the (5+2nu) g2 term as printed: {printed_third_mismatch}/20 mismatch)"
    record(3, ok, detail)
    assert ok, bad


# 4 -------------------------------------------------------------------------


def test_c4_commutation_relations(record):
    spins = [0, 1, 2, 3, 6, 10, Fraction(5, 2), Fraction(-1, 3), -2, Fraction(7, 4)]
    fails = []
    for n in spins:
        Jp, J0, Jm = as_diffop(jp(n)), as_diffop(j0(n)), as_diffop(jm())
        for lhs, rhs in ((commutator(J0, Jp), Jp), (commutator(J0, Jm), -Jm), (commutator(Jp, Jm), J0 * -2 - identity() * n)):
            for m in range(7):
                if apply(lhs, Poly.monomial(m)) != apply(rhs, Poly.monomial(m)):
                    fails.append((n, m))
    ok = not fails
    record(4, ok, f"3 relations x 10 spins x degrees 0..6, {len(fails)} failures")
    assert ok, fails


# 5 -------------------------------------------------------------------------


def test_c5_invariant_subspace(record):
    rng = np.random.default_rng(5)
    inv = _random_exact_inv(rng)
    leaks, controls = [], []
    for n in range(11):
        for kind in ("first", "second", "third"):
            fam = _random_family(rng, kind, n)
            if not matrix_on(build_operator(fam, inv), n).preserves:
                leaks.append(fam)
            half = _random_family(rng, kind, n + Fraction(1, 2))
            if matrix_on(build_operator(half, inv), n).preserves:
                controls.append(half)
    ok = not leaks and not controls
    record(5, ok, f"n=0..10 x 3 families: {len(leaks)} leaking; n+1/2 control: {33 - len(controls)}/33 leak")
    assert ok, (leaks, controls)


# 6 -------------------------------------------------------------------------


def test_c6_degeneracy_and_jordan(record):
    rep = detect_structure(build_operator(First(Fraction(-1, 2), 1), LatticeInvariants.from_invariants(5, 1)), 1)
    (a,) = rep.eigenvalues
    degenerate = rep.exact and a.value == 0 and a.algebraic == 2 and a.geometric == 2 and not a.jordan
    jordan = True
    for mu in (Fraction(1, 4), Fraction(3, 2), Fraction(-2, 3)):
        rep = detect_structure(build_operator(First(mu, 1), LatticeInvariants.from_invariants(0, 1)), 1)
        (b,) = rep.eigenvalues
        jordan &= rep.exact and b.jordan and b.geometric == 1 and [list(v) for v in b.eigenvectors] == [[0, 1]]
    ok = degenerate and jordan
    record(6, ok, f"mu=-1/2 geometric multiplicity 2: {degenerate}; g2=0 Jordan cell with eigenvector tau: {jordan}")
    assert ok


# 7 -------------------------------------------------------------------------


def test_c7_particular_integral(record):
    rng = np.random.default_rng(7)
    inv = _random_exact_inv(rng)
    fails = []
    for n in range(7):
        for kind in ("first", "second", "third"):
            fam = _random_family(rng, kind, n)
            if not check_commutator(fam, inv).ok:
                fails.append(fam)
    controls = all(build_ipar(n)(Poly.monomial(n + 1)) for n in range(7))
    ok = not fails and controls
    record(7, ok, f"n=0..6 x 3 families: {len(fails)} failures; i_par(tau^(n+1)) nonzero: {controls}")
    assert ok, fails


# 8 -------------------------------------------------------------------------


def test_c8_monodromy(record):
    fam = First(0.3, 1)
    t0 = time.perf_counter()
    around = trace_branches(fam, CirclePath(1.0), 0.5, 200).cycles
    t1 = time.perf_counter()
    away = trace_branches(fam, CirclePath(1.0, center=3.0), 0.5, 200).cycles
    t2 = time.perf_counter()
    slowest = max(t1 - t0, t2 - t1)
    ok = around == "(1 2)" and away == "()" and slowest < 5
    record(8, ok, f"enclosing loop {around}, non-enclosing loop {away}; slowest trace {slowest:.2f}s")
    assert ok


# 9 -------------------------------------------------------------------------


def test_c9_weierstrass_engine(record):
    rng = np.random.default_rng(9)
    ode = half = dup = 0.0
    for lat in ANCHOR_LATTICES:
        inv = invariants_from_lattice(lat)
        x = rng.uniform(0.1, 0.9, 100) * complex(lat.omega1) * 2 + rng.uniform(0.1, 0.9, 100) * complex(lat.omega3)
        w, dw = wp_and_prime(x, inv, lat)
        g2, g3 = complex(inv.g2), complex(inv.g3)
        ode = max(ode, float(np.max(np.abs(dw**2 - (4 * w**3 - g2 * w - g3)) / np.maximum(1, np.abs(w) ** 3))))
        for hp, e in zip(lat.half_periods, inv.roots):
            half = max(half, abs(wp_and_prime(hp, inv, lat)[0] - complex(e)))
        y = rng.uniform(0.06, 0.94, 80) * complex(lat.omega1) * 2
        y = y[np.abs(y / (2 * complex(lat.omega1)) - 0.5) > 0.06][:50]
        assert len(y) == 50
        dup = max(dup, float(np.max(wp_double_mismatch(y, inv, lat))))
    ok = ode < 1e-10 and half < 1e-10 and dup < 1e-9
    record(9, ok, f"ODE {ode:.1e}, half periods {half:.1e}, duplication {dup:.1e} over 3 lattices")
    assert ok


# 10 ------------------------------------------------------------------------


def test_c10_discrepancy_report(record, capsys):
    code = main(["discrepancies"])
    out = capsys.readouterr().out
    doc = json.loads(out)
    golden = GOLDEN.read_text()
    same = out == golden
    questions = doc["discrepancies"]
    resolved = all(q["resolved"] for q in questions)
    winners = {q["id"]: q["oracle_consistent"] for q in questions}
    ok = code == 0 and same and resolved
    record(10, ok, f"byte-identical to golden file: {same}; every question resolved: {resolved}; "
           f"first n=1 -> {winners['first-kappa3-n1']}, second -> {winners['second-kappa2']}, third -> {winners['third-kappa2']}")
    assert ok
