"""sl(2) generators as first-order differential operators in tau.

The realisation keeps the normalisation used throughout the model::

    J+(n) = tau^2 d - n tau,    J0(n) = tau d - n,    J- = d

With this J0 the commutators read ``[J0, J+-] = +-J+-`` and
``[J+, J-] = -2 J0 - n``.  For integer ``n >= 0`` every generator maps
``P_n`` into itself.

A product ``(a, b)`` in a :class:`Sl2Combination` denotes the composition
``a o b``: ``b`` acts first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .diffop import DiffOp, MatrixReport, Poly, PolySpace, compose, matrix_on

__all__ = ["Kind", "Sl2Generator", "Sl2Combination", "as_diffop", "lower", "check_preserves", "jp", "j0", "jm"]


class Kind(str, Enum):
    PLUS = "J+"
    ZERO = "J0"
    MINUS = "J-"


@dataclass(frozen=True)
class Sl2Generator:
    kind: Kind
    spin_n: object = 0

    def __str__(self):
        return self.kind.value if self.kind is Kind.MINUS else f"{self.kind.value}({self.spin_n})"


def jp(n) -> Sl2Generator:
    return Sl2Generator(Kind.PLUS, n)


def j0(n) -> Sl2Generator:
    return Sl2Generator(Kind.ZERO, n)


def jm(n=0) -> Sl2Generator:
    return Sl2Generator(Kind.MINUS, n)


def as_diffop(g: Sl2Generator) -> DiffOp:
    n = g.spin_n
    if g.kind is Kind.PLUS:
        return DiffOp([Poly([0, -n]), Poly([0, 0, 1])])
    if g.kind is Kind.ZERO:
        return DiffOp([Poly([-n]), Poly([0, 1])])
    return DiffOp([Poly(), Poly([1])])


@dataclass(frozen=True)
class Sl2Combination:
    """``sum c_ab a o b + sum c_a a + constant`` over sl(2) generators."""

    quadratic: tuple = field(default_factory=tuple)
    linear: tuple = field(default_factory=tuple)
    constant: object = 0

    def __str__(self):
        parts = [f"({c})*{a}{b}" for c, a, b in self.quadratic]
        parts += [f"({c})*{a}" for c, a in self.linear]
        if self.constant != 0:
            parts.append(f"({self.constant})")
        return " + ".join(parts) or "0"


def lower(c: Sl2Combination) -> DiffOp:
    """Expand a generator combination into a differential operator."""
    out = DiffOp()
    for coef, a, b in c.quadratic:
        out = out + compose(as_diffop(a), as_diffop(b)) * coef
    for coef, a in c.linear:
        out = out + as_diffop(a) * coef
    if c.constant != 0:
        out = out + DiffOp([Poly.const(c.constant)])
    return out


def check_preserves(op, space: PolySpace | int) -> MatrixReport:
    """Matrix report of a generator, combination or operator on ``P_n``."""
    if isinstance(op, Sl2Generator):
        op = as_diffop(op)
    elif isinstance(op, Sl2Combination):
        op = lower(op)
    return matrix_on(op, space)
