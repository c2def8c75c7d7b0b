"""The particular integral ``i_par(n) = prod_{j=0}^{n} (J0(n) + j)``.

``J0(n) tau^p = (p - n) tau^p``, so ``i_par(n)`` multiplies ``tau^p`` by
``prod_j (p - n + j)``, which vanishes for ``0 <= p <= n``.  It therefore
annihilates ``P_n`` and its commutator with any operator preserving
``P_n`` maps ``P_n`` to zero.  The commutator is generally not the zero
operator; only its restriction is checked.
"""
from __future__ import annotations

from dataclasses import dataclass

from .diffop import DiffOp, Poly, apply, compose, identity
from .elliptic import LatticeInvariants
from .model import Family, build_operator, is_qes_integer
from .sl2 import as_diffop, j0

__all__ = ["ParticularIntegral", "CommutatorCheck", "build_ipar", "check_commutator"]


@dataclass(frozen=True)
class ParticularIntegral:
    n: int
    operator: DiffOp

    def __call__(self, p: Poly) -> Poly:
        return apply(self.operator, p)


@dataclass(frozen=True)
class CommutatorCheck:
    ok: bool
    n: int
    witness: tuple | None = None  # (degree p, [h, i_par] tau^p) of the first failure


def build_ipar(n: int) -> ParticularIntegral:
    if not is_qes_integer(n):
        raise ValueError(f"i_par needs a non-negative integer n, got {n!r}")
    n = int(n)
    J0 = as_diffop(j0(n))
    op = identity()
    for j in range(n + 1):
        op = compose(op, J0 + identity() * j)
    return ParticularIntegral(n, op)


def check_commutator(fam: Family, inv: LatticeInvariants, n: int | None = None, degrees=None) -> CommutatorCheck:
    """Apply ``[h, i_par(n)]`` to ``tau^p`` for ``p <= n`` (or ``degrees``).

    ``h`` is the family operator; ``n`` defaults to ``fam.n``.  Each image is
    computed as ``h(i_par(tau^p)) - i_par(h(tau^p))`` so the commutator
    operator is never formed.
    """
    n = fam.n if n is None else n
    ipar = build_ipar(n)
    h = build_operator(fam, inv)
    for p in degrees if degrees is not None else range(int(n) + 1):
        m = Poly.monomial(p)
        img = apply(h, ipar(m)) - ipar(apply(h, m))
        if img:
            return CommutatorCheck(False, int(n), (p, img))
    return CommutatorCheck(True, int(n))
