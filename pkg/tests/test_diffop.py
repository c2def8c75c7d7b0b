from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bc1qes.diffop import (
    MAX_ORDER,
    DiffOp,
    OrderOverflowError,
    Poly,
    PolySpace,
    apply,
    commutator,
    compose,
    d_tau,
    identity,
    matrix_on,
)
from bc1qes.elliptic import LatticeInvariants
from bc1qes.model import First, build_operator

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=9)
polys = st.lists(fractions, min_size=0, max_size=5).map(Poly)
first_order = st.tuples(polys, polys).map(lambda c: DiffOp([c[0], c[1]]))


def test_poly_normalization():
    assert Poly([1, 2, 0, 0]).degree == 1
    assert Poly([0, 0]).degree == -1
    assert not Poly()
    assert Poly([1, 2]) == Poly([1, 2, 0])


def test_poly_divmod_exact():
    a = Poly([Fraction(1, 3), 2, 5]) * Poly([-1, 1])
    q, r = a.divmod(Poly([-1, 1]))
    assert q == Poly([Fraction(1, 3), 2, 5]) and not r


def test_apply_derivative():
    assert apply(d_tau(), Poly([0, 0, 1])) == Poly([0, 2])


def test_apply_zero_operator():
    assert apply(DiffOp(), Poly([1, 2, 3])) == Poly()


def test_first_family_n1_eigenvector():
    g2, g3, mu = 2.7, 0.3, 0.3
    inv = LatticeInvariants.from_invariants(g2, g3)
    op = build_operator(First(mu, 1), inv)
    s = 0.5 * np.sqrt(g2 / 3)
    for sign in (1, -1):
        p = Poly([sign * s, 1])
        img = apply(op, p)
        lam = img.coeff(1)
        assert abs(img.coeff(0) - lam * p.coeff(0)) < 1e-13


def test_matrix_of_derivative_is_shift():
    rep = matrix_on(d_tau(), PolySpace(2))
    assert rep.preserves
    assert rep.matrix == ((0, 1, 0), (0, 0, 2), (0, 0, 0))


def test_matrix_leakage_for_half_integer_n():
    inv = LatticeInvariants.from_invariants(Fraction(3), Fraction(1, 2))
    mu = Fraction(1, 3)
    assert matrix_on(build_operator(First(mu, 2), inv), 2).preserves
    rep = matrix_on(build_operator(First(mu, Fraction(5, 2)), inv), 2)
    assert not rep.preserves
    assert rep.first_leak()[0] == 2


def test_commutator_d_tau_is_identity():
    tau_op = DiffOp([Poly([0, 1])])
    assert commutator(d_tau(), tau_op) == identity()


def test_order_overflow():
    op = DiffOp([Poly()] * MAX_ORDER + [Poly([1])])
    assert op.order == MAX_ORDER
    with pytest.raises(OrderOverflowError):
        compose(op, d_tau())


def test_polyspace_dimension():
    assert PolySpace(4).dim == 5
    with pytest.raises(ValueError):
        PolySpace(-1)


@given(first_order, polys, polys, fractions, fractions)
@settings(max_examples=60, deadline=None)
def test_apply_linear(op, p, q, a, b):
    assert apply(op, p.scale(a) + q.scale(b)) == apply(op, p).scale(a) + apply(op, q).scale(b)


@given(first_order, first_order, polys)
@settings(max_examples=60, deadline=None)
def test_compose_matches_sequential_application(a, b, p):
    assert apply(compose(a, b), p) == apply(a, apply(b, p))


@given(first_order, first_order, first_order)
@settings(max_examples=40, deadline=None)
def test_commutator_antisymmetry_and_jacobi(a, b, c):
    assert commutator(a, b) == -commutator(b, a)
    jac = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
    for m in range(7):
        assert not apply(jac, Poly.monomial(m))


@given(st.integers(0, 4), fractions, fractions)
@settings(max_examples=30, deadline=None)
def test_matrix_respects_composition(n, c0, c1):
    # J0-like and J- like operators both preserve P_n
    a = DiffOp([Poly([c0]), Poly([0, 1])])
    b = DiffOp([Poly([c1]), Poly([1])])
    ma = np.array(matrix_on(a, n).matrix, dtype=object)
    mb = np.array(matrix_on(b, n).matrix, dtype=object)
    mab = np.array(matrix_on(compose(a, b), n).matrix, dtype=object)
    assert (ma.dot(mb) == mab).all()


def test_float_linearity_tolerance():
    op = DiffOp([Poly([0.3, 1.1]), Poly([0.7, 0, 2.5]), Poly([1.0, -0.2, 0, 4.0])])
    p, q = Poly([0.1, 0.2, 0.3]), Poly([1.5, -0.4])
    lhs = apply(op, p.scale(0.7) + q.scale(-1.3))
    rhs = apply(op, p).scale(0.7) + apply(op, q).scale(-1.3)
    assert (lhs - rhs).norm_inf() < 1e-13
