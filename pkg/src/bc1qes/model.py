"""The three quasi-exactly-solvable families of the BC1 elliptic Hamiltonian

    H = -1/2 d^2/dx^2 + kappa2 wp(2x) + kappa3 wp(x)

and their algebraic forms in ``tau = wp(x)``.

Each family fixes a gauge factor ``Psi0`` and a subtracted energy ``E0``;
the algebraic operator is ``h = -2 Psi0^{-1} (H - E0) Psi0`` written in
``tau``, so an eigenvalue ``lam`` of ``h`` corresponds to the energy
``E = E0 - lam / 2``.

============  ==========================================  =========================
family        gauge factor                                 E0
============  ==========================================  =========================
first(mu)     wp'^mu                                       0
second(mu,k)  wp'^mu (wp - e_k)^(1/2 - mu)                 (4 mu^2 - 1)/2 e_k
third(nu,k)   wp'^nu [(wp - e_i)(wp - e_j)]^(1/2 - nu)     (1 - 2nu)(3 - 2nu)/2 e_k
============  ==========================================  =========================

For the third family ``k`` is the root left out of the product.

Coupling constants.  Several printed variants of the maps from the family
parameters to ``(kappa2, kappa3)`` disagree with each other; all of them
are kept in :data:`PRINTED_COUPLINGS` and the default map is the one
derived from the gauge factor (pole cancellation fixes ``kappa2``, the
leading-order balance fixes ``kappa3``).  :mod:`bc1qes.discrepancy`
adjudicates the candidates with the x-space oracle.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from .diffop import DiffOp, Poly
from .elliptic import LatticeInvariants
from .sl2 import Sl2Combination, j0, jm, jp

__all__ = [
    "First",
    "Second",
    "Third",
    "Family",
    "CouplingConstants",
    "GaugeFactor",
    "EnergyOffset",
    "TauGroundState",
    "FamilyParseError",
    "parse_family",
    "parse_scalar",
    "format_family",
    "coupling_map",
    "derived_couplings",
    "PRINTED_COUPLINGS",
    "AS_PRINTED",
    "build_operator",
    "build_sl2_form",
    "first_kind_operator",
    "gauge_factor",
    "energy_offset",
    "tau_ground_state",
    "conjugate",
    "is_qes_integer",
]

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


# ---------------------------------------------------------------------------
# family specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class First:
    mu: object
    n: object
    kind = "first"

    @property
    def param(self):
        return self.mu


@dataclass(frozen=True)
class Second:
    mu: object
    n: object
    k: int = 1
    kind = "second"

    def __post_init__(self):
        _check_k(self.k)

    @property
    def param(self):
        return self.mu


@dataclass(frozen=True)
class Third:
    nu: object
    n: object
    k: int = 1
    kind = "third"

    def __post_init__(self):
        _check_k(self.k)

    @property
    def param(self):
        return self.nu


Family = Union[First, Second, Third]


def _check_k(k):
    if k not in (1, 2, 3):
        raise ValueError(f"root index k must be 1, 2 or 3, got {k!r}")


class FamilyParseError(ValueError):
    pass


def parse_scalar(text: str):
    """Parse ``'1/4'``, ``'0.25'``, ``'-3'`` exactly; complex literals as complex."""
    text = text.strip()
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        try:
            return complex(text.replace("i", "j"))
        except ValueError:
            raise FamilyParseError(f"not a number: {text!r}") from None
    return int(v) if v.denominator == 1 else v


_SPEC = re.compile(r"^\s*(first|second|third)\s*:(.*)$", re.IGNORECASE)


def parse_family(text: str) -> Family:
    """Parse ``first:mu=0.25,n=3``, ``second:mu=1/4,n=2,k=1``, ``third:nu=0.5,n=1,k=3``."""
    m = _SPEC.match(text)
    if not m:
        raise FamilyParseError(f"expected '<first|second|third>:key=value,...', got {text!r}")
    kind = m.group(1).lower()
    fields = {}
    for item in filter(None, (s.strip() for s in m.group(2).split(","))):
        if "=" not in item:
            raise FamilyParseError(f"malformed field {item!r} in {text!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        fields[key.lower()] = parse_scalar(value)
    want = {"first": {"mu", "n"}, "second": {"mu", "n", "k"}, "third": {"nu", "n", "k"}}[kind]
    required = want - {"k"}
    if not required <= set(fields) or not set(fields) <= want:
        raise FamilyParseError(f"{kind} family takes {sorted(want)}, got {sorted(fields)}")
    if "k" in fields:
        fields["k"] = int(fields["k"])
    cls = {"first": First, "second": Second, "third": Third}[kind]
    return cls(**fields)


def format_family(fam: Family) -> str:
    name = "nu" if fam.kind == "third" else "mu"
    out = f"{fam.kind}:{name}={fam.param},n={fam.n}"
    return out + (f",k={fam.k}" if fam.kind != "first" else "")


def is_qes_integer(n) -> bool:
    try:
        return n == int(n.real if isinstance(n, complex) else n) and n >= 0
    except (TypeError, ValueError):
        return False


# ---------------------------------------------------------------------------
# gauge data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingConstants:
    kappa2: object
    kappa3: object


@dataclass(frozen=True)
class GaugeFactor:
    """``wp'(x)^mu_exponent * prod_i (wp(x) - e_i)^root_exponents[i]``."""

    mu_exponent: object
    root_exponents: tuple

    def tau_exponents(self) -> tuple:
        """Exponents of ``(tau - e_i)`` once ``wp'^m`` is written as ``(4 prod(tau - e_i))^(m/2)``."""
        return tuple(self.mu_exponent * HALF + r for r in self.root_exponents)


@dataclass(frozen=True)
class EnergyOffset:
    value: object


def gauge_factor(fam: Family) -> GaugeFactor:
    p = fam.param
    if fam.kind == "first":
        return GaugeFactor(p, (0, 0, 0))
    if fam.kind == "second":
        return GaugeFactor(p, tuple(HALF - p if i == fam.k else 0 for i in (1, 2, 3)))
    return GaugeFactor(p, tuple(0 if i == fam.k else HALF - p for i in (1, 2, 3)))


def energy_offset(fam: Family, inv: LatticeInvariants) -> EnergyOffset:
    p = fam.param
    if fam.kind == "first":
        return EnergyOffset(0)
    ek = inv.root(fam.k)
    if fam.kind == "second":
        return EnergyOffset((4 * p * p - 1) * HALF * ek)
    return EnergyOffset((1 - 2 * p) * (3 - 2 * p) * HALF * ek)


@dataclass(frozen=True)
class TauGroundState:
    """The gauge factor in tau: ``(4 tau^3 - g2 tau - g3)^(m/2) prod (tau - e_i)^r_i``."""

    inv: LatticeInvariants
    gauge: GaugeFactor

    def __call__(self, t):
        g = self.gauge
        F = 4 * t**3 - self.inv.g2 * t - self.inv.g3
        out = complex(F) ** complex(g.mu_exponent * HALF) if g.mu_exponent != 0 else 1
        for e, r in zip(self.inv.roots, g.root_exponents):
            if r != 0:
                out *= complex(t - e) ** complex(r)
        return out

    def as_poly(self) -> Poly | None:
        """Polynomial form when every exponent is a non-negative integer, else None."""
        g = self.gauge
        half_m = g.mu_exponent * HALF
        if not is_qes_integer(half_m) or not all(is_qes_integer(r) for r in g.root_exponents):
            return None
        out = Poly([-self.inv.g3, -self.inv.g2, 0, 4]) ** int(half_m)
        for e, r in zip(self.inv.roots, g.root_exponents):
            out = out * Poly([-e, 1]) ** int(r)
        return out


def tau_ground_state(fam: Family, inv: LatticeInvariants) -> TauGroundState:
    return TauGroundState(inv, gauge_factor(fam))


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def _cubic(inv: LatticeInvariants) -> Poly:
    return Poly([-inv.g3, -inv.g2, 0, 4])


def _qes_linear(fam: Family):
    """Coefficient K in the zeroth-order term ``-K tau`` of the family operator."""
    n, p = fam.n, fam.param
    if fam.kind == "first":
        return 2 * n * (2 * n + 1 + 6 * p)
    if fam.kind == "second":
        return 2 * (2 * n * (n - 1) + n * (5 + 2 * p))
    return 2 * (2 * n * (n - 1) + n * (7 - 2 * p))


def build_operator(fam: Family, inv: LatticeInvariants, printed: bool = False) -> DiffOp:
    """Explicit algebraic operator ``c2 d^2 + c1 d + c0`` of the family.

    ``printed=True`` reproduces the third-family operator with the
    ``-(5 + 2 nu) g2 / 4`` term as typeset; the default ``-(1 + 2 nu) g2 / 4``
    is the value fixed by the gauge rotation (and by the sl(2) form).
    """
    g2 = inv.g2
    p = fam.param
    c2 = _cubic(inv)
    c0 = Poly([0, -_qes_linear(fam)])
    if fam.kind == "first":
        c1 = Poly([-g2 * HALF, 0, 6]) * (1 + 2 * p)
    elif fam.kind == "second":
        ek = inv.root(fam.k)
        a = 2 * (1 - 2 * p)
        c1 = Poly([a * ek * ek - (3 - 2 * p) * g2 * QUARTER, a * ek, 5 + 2 * p]) * 2
    else:
        ek = inv.root(fam.k)
        a = 2 * (2 * p - 1)
        g2_coef = (5 + 2 * p) if printed else (1 + 2 * p)
        c1 = Poly([a * ek * ek - g2_coef * g2 * QUARTER, a * ek, 7 - 2 * p]) * 2
    return DiffOp([c0, c1, c2])


def build_sl2_form(fam: Family, inv: LatticeInvariants) -> Sl2Combination:
    """The family operator as a quadratic element in the sl(2) generators."""
    g2, g3 = inv.g2, inv.g3
    p, n = fam.param, fam.n
    quadratic = ((4, jp(n), j0(n)), (-g2, j0(n), jm()), (-g3, jm(), jm()))
    if fam.kind == "first":
        linear = ((2 * (4 * n + 1 + 6 * p), jp(n)), (-g2 * (n + HALF + p), jm()))
        return Sl2Combination(quadratic, linear, 0)
    ek = inv.root(fam.k)
    if fam.kind == "second":
        a = 1 - 2 * p
        linear = (
            (2 * (4 * n + 3 + 2 * p), jp(n)),
            (4 * a * ek, j0(n)),
            (2 * (2 * a * ek * ek - (2 * n + 3 - 2 * p) * g2 * QUARTER), jm()),
        )
    else:
        a = 2 * p - 1
        linear = (
            (2 * (4 * n + 5 - 2 * p), jp(n)),
            (4 * a * ek, j0(n)),
            (2 * (2 * a * ek * ek - (2 * n + 1 + 2 * p) * g2 * QUARTER), jm()),
        )
    # the (J0 + n) shift contributes the constant 4 a e_k n
    return Sl2Combination(quadratic, linear, 4 * a * ek * n)


def first_kind_operator(mu, kappa3, inv: LatticeInvariants) -> DiffOp:
    """Gauge rotation of H by ``wp'^mu`` for couplings ``(2 mu (mu - 1), kappa3)``.

    Valid for any ``kappa3``; the zeroth-order term is
    ``-(2 kappa3 - 4 mu (1 + 2 mu)) tau``.
    """
    c1 = Poly([-inv.g2 * HALF, 0, 6]) * (1 + 2 * mu)
    c0 = Poly([0, -(2 * kappa3 - 4 * mu * (1 + 2 * mu))])
    return DiffOp([c0, c1, _cubic(inv)])


def conjugate(op: DiffOp, exponents, roots, atol: float = 0.0) -> DiffOp:
    """``phi^{-1} o op o phi`` for ``phi = prod (tau - root)^a`` and order-2 ``op``.

    The result must have polynomial coefficients; a nonzero remainder
    (beyond ``atol`` in floating mode) raises ``ValueError``.
    """
    pairs = [(a, e) for a, e in zip(exponents, roots) if a != 0]
    if not pairs:
        return op
    if op.order > 2:
        raise ValueError("conjugate supports operators of order <= 2")
    lin = [Poly([-e, 1]) for _, e in pairs]
    D = Poly([1])
    for f in lin:
        D = D * f
    NS = Poly()
    for i, (a, _) in enumerate(pairs):
        term = Poly([a])
        for j, f in enumerate(lin):
            if j != i:
                term = term * f
        NS = NS + term
    c2, c1, c0 = op.c2, op.c1, op.c0

    def exact_div(num: Poly, den: Poly) -> Poly:
        q, r = num.divmod(den)
        if r.norm_inf() > atol:
            raise ValueError(f"gauge conjugation leaves a non-polynomial remainder {r}")
        return q

    new_c1 = c1 + exact_div(c2 * NS * 2, D)
    num0 = c1 * NS * D + c2 * (NS.deriv() * D - NS * D.deriv() + NS * NS)
    new_c0 = c0 + exact_div(num0, D * D)
    return DiffOp([new_c0, new_c1, c2])


# ---------------------------------------------------------------------------
# coupling maps
# ---------------------------------------------------------------------------


def derived_couplings(fam: Family) -> CouplingConstants:
    """Couplings for which the family operator is the gauge rotation of H.

    With tau-exponents ``a_i`` of the gauge factor and ``A = sum a_i``:
    cancelling the pole of ``wp(2x)`` at each root gives
    ``kappa2 = 4 a_i (2 a_i - 1)`` (the same for every root), and matching
    the coefficient of ``tau`` in the zeroth-order term gives
    ``2 kappa3 = 4 A^2 + 2 A - kappa2 / 2 + K``.
    """
    a = gauge_factor(fam).tau_exponents()
    k2 = [4 * x * (2 * x - 1) for x in a]
    kappa2 = k2[0]
    if any(abs(complex(v - kappa2)) > 1e-12 * max(1.0, abs(complex(kappa2))) for v in k2):
        raise AssertionError(f"gauge exponents {a} give inconsistent kappa2 values {k2}")
    A = sum(a)
    kappa3 = (4 * A * A + 2 * A - kappa2 * HALF + _qes_linear(fam)) * HALF
    return CouplingConstants(kappa2, kappa3)


def _n0(f):
    def wrapped(fam):
        if fam.n != 0:
            raise ValueError("this printed formula is stated for n = 0 only")
        return f(fam)

    return wrapped


def _n1(f):
    def wrapped(fam):
        if fam.n != 1:
            raise ValueError("this printed formula is stated for n = 1 only")
        return f(fam)

    return wrapped


def _cc(k2, k3):
    return CouplingConstants(k2, k3)


# Printed variants, keyed by family kind then by label.
PRINTED_COUPLINGS: dict[str, dict[str, Callable[[Family], CouplingConstants]]] = {
    "first": {
        "zero-mode (n=0)": _n0(lambda f: _cc(2 * f.mu * (f.mu - 1), 2 * f.mu * (1 + 2 * f.mu))),
        "general-n product": lambda f: _cc(2 * f.mu * (f.mu - 1), (f.n + 2 * f.mu) * (f.n + 2 * f.mu + 1)),
        "tilde-kappa3 identity": lambda f: _cc(
            2 * f.mu * (f.mu - 1), 2 * f.mu * (1 + 2 * f.mu) + f.n * (2 * f.n + 1 + 6 * f.mu)
        ),
        "n=1 example": _n1(lambda f: _cc(2 * f.mu * (f.mu - 1), 2 * (1 + 2 * f.mu) * (1 + f.mu))),
    },
    "second": {
        "zero-mode (n=0)": _n0(lambda f: _cc(2 * f.mu * (f.mu - 1), (1 + 2 * f.mu) * (1 - f.mu))),
        "general-n": lambda f: _cc(
            f.mu * (f.mu - 1), 2 * f.n**2 + f.n * (3 + 2 * f.mu) + (1 + 2 * f.mu) * (1 - f.mu)
        ),
        "tilde-kappa3 identity": lambda f: _cc(
            2 * f.mu * (f.mu - 1), (1 - f.mu) * (1 + 2 * f.mu) + 2 * f.n * (f.n - 1) + f.n * (2 * f.mu + 5)
        ),
    },
    "third": {
        "zero-mode (n=0)": _n0(lambda f: _cc(2 * f.nu * (f.nu - 1), f.nu * (1 - f.nu))),
        "general-n": lambda f: _cc(
            f.nu * (f.nu - 1), 2 * f.n**2 + f.n * (5 - 2 * f.nu) + f.nu * (1 - 2 * f.nu)
        ),
        "tilde-kappa3 identity": lambda f: _cc(
            2 * f.nu * (f.nu - 1), f.nu * (3 - 2 * f.nu) + 2 * f.n * (f.n - 1) + f.n * (7 - 2 * f.nu)
        ),
    },
}

# The printed map one would use by default: the n=0 statement at n=0,
# otherwise the general-n parametrisation.
AS_PRINTED = {
    "first": ("zero-mode (n=0)", "general-n product"),
    "second": ("zero-mode (n=0)", "general-n"),
    "third": ("zero-mode (n=0)", "general-n"),
}


def coupling_map(fam: Family, as_printed: bool | str = False) -> CouplingConstants:
    """Coupling constants ``(kappa2, kappa3)`` of a family.

    Parameters
    ----------
    as_printed : bool or str
        ``False`` (default) returns :func:`derived_couplings`.  ``True``
        returns the printed parametrisation (n=0 statement at n=0, general-n
        formula otherwise); a string selects a label of
        :data:`PRINTED_COUPLINGS` directly.
    """
    if as_printed is False:
        return derived_couplings(fam)
    table = PRINTED_COUPLINGS[fam.kind]
    if as_printed is True:
        zero, general = AS_PRINTED[fam.kind]
        return table[zero](fam) if fam.n == 0 else table[general](fam)
    return table[as_printed](fam)
