"""Polynomials in tau and differential operators with polynomial coefficients.

Coefficients may be ints/Fractions (exact mode) or floats/complex (floating
mode); Python's numeric tower mixes them as expected.  Nothing here samples:
every operation is coefficient arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .elliptic import is_exact

__all__ = [
    "Poly",
    "DiffOp",
    "PolySpace",
    "MatrixReport",
    "OrderOverflowError",
    "MAX_ORDER",
    "apply",
    "compose",
    "commutator",
    "matrix_on",
    "tau",
    "d_tau",
    "identity",
]

MAX_ORDER = 64


class OrderOverflowError(ValueError):
    pass


def _trim(coeffs: Sequence) -> tuple:
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


class Poly:
    """Dense polynomial in tau, ascending coefficients.

    Trailing exact zeros are dropped, so the zero polynomial has no
    coefficients and ``degree == -1``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        object.__setattr__(self, "coeffs", _trim(coeffs))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @classmethod
    def monomial(cls, p: int, c=1) -> "Poly":
        return cls([0] * p + [c])

    @classmethod
    def const(cls, c) -> "Poly":
        return cls([c])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def exact(self) -> bool:
        return is_exact(*self.coeffs)

    def coeff(self, p: int):
        return self.coeffs[p] if 0 <= p < len(self.coeffs) else 0

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Poly({list(self.coeffs)!r})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for p, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if p == 0 else ("tau" if p == 1 else f"tau^{p}")
            terms.append(f"{c}" if not mono else (mono if c == 1 else f"({c})*{mono}"))
        return " + ".join(terms)

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        n = max(len(self), len(other))
        return Poly(self.coeff(i) + other.coeff(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Poly) else Poly.const(-other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(c * other for c in self.coeffs)
        if not self or not other:
            return Poly()
        out = [0] * (len(self) + len(other) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, c) -> "Poly":
        return self * c

    def deriv(self, k: int = 1) -> "Poly":
        c = list(self.coeffs)
        for _ in range(k):
            c = [i * c[i] for i in range(1, len(c))]
        return Poly(c)

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        """Euclidean division; exact for Fraction coefficients."""
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dq = other.degree
        lead = other.coeffs[-1]
        if is_exact(lead):
            lead = Fraction(lead)
        quot = [0] * max(0, len(rem) - dq)
        for i in range(len(rem) - 1, dq - 1, -1):
            f = rem[i] / lead
            quot[i - dq] = f
            if f != 0:
                for j, b in enumerate(other.coeffs):
                    rem[i - dq + j] -= f * b
            rem[i] = 0
        return Poly(quot), Poly(rem[:dq] if dq > 0 else [])

    def truncate(self, n: int) -> tuple["Poly", "Poly"]:
        """Split into the part of degree <= n and the part above."""
        return Poly(self.coeffs[: n + 1]), Poly([0] * (n + 1) + list(self.coeffs[n + 1 :]))

    def monic(self) -> "Poly":
        if not self:
            return self
        lead = self.coeffs[-1]
        if is_exact(lead):
            lead = Fraction(lead)
        return Poly(c / lead for c in self.coeffs)

    def norm_inf(self) -> float:
        return max((abs(complex(c)) for c in self.coeffs), default=0.0)

    def to_numpy(self, length: int | None = None) -> np.ndarray:
        n = len(self) if length is None else length
        return np.array([complex(self.coeff(i)) for i in range(n)])


def tau() -> Poly:
    return Poly([0, 1])


class DiffOp:
    """Operator ``sum_j coeffs[j](tau) * d^j/dtau^j`` of finite order.

    The second-order operators of the model are the common case; higher
    orders arise only through composition (the particular integral).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [c if isinstance(c, Poly) else Poly.const(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        if len(cs) - 1 > MAX_ORDER:
            raise OrderOverflowError(f"operator order {len(cs) - 1} exceeds MAX_ORDER={MAX_ORDER}")
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("DiffOp is immutable")

    @classmethod
    def second_order(cls, c2, c1, c0) -> "DiffOp":
        return cls([c0, c1, c2])

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> Poly:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else Poly()

    c0 = property(lambda self: self.coeff(0))
    c1 = property(lambda self: self.coeff(1))
    c2 = property(lambda self: self.coeff(2))

    @property
    def exact(self) -> bool:
        return all(c.exact for c in self.coeffs)

    def __eq__(self, other):
        return isinstance(other, DiffOp) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"DiffOp({list(self.coeffs)!r})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for j, c in enumerate(self.coeffs):
            if not c:
                continue
            d = "" if j == 0 else ("*d" if j == 1 else f"*d^{j}")
            parts.append(f"[{c}]{d}")
        return " + ".join(parts)

    def __add__(self, other):
        if not isinstance(other, DiffOp):
            other = identity() * other
        n = max(len(self.coeffs), len(other.coeffs))
        return DiffOp(self.coeff(j) + other.coeff(j) for j in range(n))

    __radd__ = __add__

    def __neg__(self):
        return DiffOp(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Scalar multiple, or composition ``self o other`` for a DiffOp."""
        if isinstance(other, DiffOp):
            return compose(self, other)
        if isinstance(other, Poly):
            return DiffOp(other * c for c in self.coeffs)
        return DiffOp(c * other for c in self.coeffs)

    def __rmul__(self, other):
        if isinstance(other, Poly):
            return DiffOp(other * c for c in self.coeffs)
        return DiffOp(c * other for c in self.coeffs)

    def __matmul__(self, other):
        return compose(self, other)

    def __call__(self, p: Poly) -> Poly:
        return apply(self, p)

    def max_abs_coeff(self) -> float:
        return max((c.norm_inf() for c in self.coeffs), default=0.0)

    def allclose(self, other: "DiffOp", atol: float = 0.0) -> bool:
        """Coefficientwise comparison; ``atol=0`` demands exact equality."""
        if atol == 0:
            return self == other
        return (self - other).max_abs_coeff() <= atol


def identity() -> DiffOp:
    return DiffOp([Poly.const(1)])


def d_tau() -> DiffOp:
    return DiffOp([Poly(), Poly.const(1)])


def apply(op: DiffOp, p: Poly) -> Poly:
    """Apply ``op`` to ``p`` exactly."""
    out = Poly()
    dp = p
    for c in op.coeffs:
        if not dp:
            break
        if c:
            out = out + c * dp
        dp = dp.deriv()
    return out


def compose(a: DiffOp, b: DiffOp) -> DiffOp:
    """The operator ``a o b`` (apply ``b`` first), via the Leibniz rule."""
    if a.order + b.order > MAX_ORDER:
        raise OrderOverflowError(f"composed order {a.order + b.order} exceeds MAX_ORDER={MAX_ORDER}")
    out = [Poly() for _ in range(max(0, a.order + b.order + 1))]
    for i, ai in enumerate(a.coeffs):
        if not ai:
            continue
        for j, bj in enumerate(b.coeffs):
            if not bj:
                continue
            # d^i (bj * d^j) = sum_l C(i, l) bj^(i-l) d^(l+j)
            for l in range(i + 1):
                dbj = bj.deriv(i - l)
                if dbj:
                    out[l + j] = out[l + j] + ai * dbj * comb(i, l)
    return DiffOp(out)


def commutator(a: DiffOp, b: DiffOp) -> DiffOp:
    """``a o b - b o a``, exact."""
    return compose(a, b) - compose(b, a)


@dataclass(frozen=True)
class PolySpace:
    """The space of polynomials of degree at most ``n``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"PolySpace needs a non-negative integer n, got {self.n!r}")

    @property
    def dim(self) -> int:
        return int(self.n) + 1

    def basis(self) -> list[Poly]:
        return [Poly.monomial(p) for p in range(self.dim)]


@dataclass(frozen=True)
class MatrixReport:
    """Matrix of an operator on a polynomial space plus what leaked out of it.

    ``matrix[q][p]`` is the coefficient of ``tau^q`` in ``op(tau^p)``.
    ``leakage[p]`` collects the terms of degree > n of ``op(tau^p)``.
    """

    n: int
    matrix: tuple
    leakage: tuple

    @property
    def leakage_norm(self) -> float:
        return max((q.norm_inf() for q in self.leakage), default=0.0)

    @property
    def preserves(self) -> bool:
        """True iff nothing leaks; exact comparison (use ``leakage_norm`` for floats)."""
        return all(not q for q in self.leakage)

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for row in self.matrix for x in row)

    def to_numpy(self) -> np.ndarray:
        return np.array([[complex(x) for x in row] for row in self.matrix])

    def first_leak(self):
        for p, q in enumerate(self.leakage):
            if q:
                return p, q
        return None


def matrix_on(op: DiffOp, space: PolySpace | int) -> MatrixReport:
    """Matrix of ``op`` restricted to ``P_n`` and the leakage out of ``P_n``."""
    if not isinstance(space, PolySpace):
        space = PolySpace(space)
    n = int(space.n)
    cols, leaks = [], []
    for p in range(n + 1):
        img = apply(op, Poly.monomial(p))
        low, high = img.truncate(n)
        cols.append([low.coeff(q) for q in range(n + 1)])
        leaks.append(high)
    matrix = tuple(tuple(cols[p][q] for p in range(n + 1)) for q in range(n + 1))
    return MatrixReport(n, matrix, tuple(leaks))
