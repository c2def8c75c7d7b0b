"""Weierstrass elliptic functions on a period lattice.

The engine evaluates ``wp`` and ``wp'`` from the Laurent expansion at the
origin: the argument is reduced into the fundamental cell, halved until it
sits well inside the disc of convergence, and then doubled back with the
duplication formula written as a rational function of ``wp`` alone,

    wp(2z)  = wp/4 + (12 g2 wp^2 + 36 g3 wp + g2^2) / (16 (4 wp^3 - g2 wp - g3))
    wp'(2z) = R'(wp(z)) wp'(z) / 2

which keeps the relative error of ``wp`` from compounding across doublings.

Lattice invariants are obtained from Eisenstein q-series after Gauss
reduction of the period basis; the roots come from theta constants.

Conventions
-----------
* Roots are ordered by descending real part, ties broken by descending
  imaginary part.  For a rectangular lattice this gives ``e1 > e2 > e3``
  with ``e1 = wp(omega1)``, ``e2 = wp(omega1 + omega3)``, ``e3 = wp(omega3)``.
* The discriminant is ``g2**3 - 27 * g3**2``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Number

import numpy as np

__all__ = [
    "LatticeError",
    "PoleError",
    "LatticeInvariants",
    "Lattice",
    "RectangularLattice",
    "GeneralLattice",
    "roots_from_invariants",
    "invariants_from_lattice",
    "lattice_from_invariants",
    "wp",
    "wp_prime",
    "wp_and_prime",
    "is_exact",
]

POLE_DISTANCE = 1e-10
IMAG_CLEANUP = 1e-13
DEGENERACY_RTOL = 1e-12
_LAURENT_TERMS = 16


class LatticeError(ValueError):
    """Raised for degenerate or numerically unusable lattices."""


class PoleError(ValueError):
    """Raised when an argument lies within ``POLE_DISTANCE`` of a lattice point."""


def is_exact(*values) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


def _as_complex(v) -> complex:
    return complex(v)


def _clean(z: complex, scale: float) -> complex:
    if abs(z.imag) <= IMAG_CLEANUP * scale:
        return complex(z.real, 0.0)
    return z


def _order_key(v, scale: float):
    z = complex(v)
    # round so that real parts equal up to rounding compare as ties
    return (-round(z.real / scale, 9), -z.imag)


# ---------------------------------------------------------------------------
# invariants and roots
# ---------------------------------------------------------------------------


def _cubic(e, g2, g3):
    return 4 * e**3 - g2 * e - g3


def _rational_guess(z: complex, g2, g3):
    if abs(z.imag) > 1e-9 * max(1.0, abs(z)):
        return None
    r = Fraction(z.real).limit_denominator(10**6)
    return r if _cubic(r, g2, g3) == 0 else None


def _exact_sqrt(q: Fraction):
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def _numeric_roots(g2: complex, g3: complex) -> list[complex]:
    raw = np.roots([4.0, 0.0, -g2, -g3]) if (g2, g3) != (0, 0) else np.zeros(3)
    out = []
    for e in raw:
        e = complex(e)
        for _ in range(3):
            d = 12 * e * e - g2
            if abs(d) < 1e-12 * max(1.0, abs(g2)):
                break
            step = _cubic(e, g2, g3) / d
            e -= step
            if abs(step) <= 1e-17 * max(1.0, abs(e)):
                break
        out.append(e)
    return out


def roots_from_invariants(g2, g3) -> tuple:
    """Roots of ``4 e**3 - g2 e - g3`` in canonical order.

    Exact (int or Fraction) invariants give exact Fraction roots whenever the
    roots are rational; the remaining roots are returned as complex floats.

    Examples
    --------
    >>> roots_from_invariants(4, 0)
    (Fraction(1, 1), Fraction(0, 1), Fraction(-1, 1))
    """
    scale = max(1.0, abs(complex(g2)) ** 0.5, abs(complex(g3)) ** (1 / 3))
    numeric = _numeric_roots(complex(g2), complex(g3))
    roots: list = []
    if is_exact(g2, g3):
        g2, g3 = Fraction(g2), Fraction(g3)
        rational = next((r for r in map(lambda z: _rational_guess(z, g2, g3), numeric) if r is not None), None)
        if rational is not None:
            disc = g2 - 3 * rational * rational
            s = _exact_sqrt(disc)
            if s is not None:
                roots = [rational, (-rational + s) / 2, (-rational - s) / 2]
            else:
                # the other two are the roots of 4e^2 + 4 r e + 4 r^2 - g2
                sq = cmath.sqrt(complex(disc))
                roots = [rational, complex(-rational + sq) / 2, complex(-rational - sq) / 2]
                roots = [r if isinstance(r, Fraction) else _clean(r, scale) for r in roots]
    if not roots:
        roots = [_clean(z, scale) for z in numeric]
    roots.sort(key=lambda v: _order_key(v, scale))
    return tuple(roots)


@dataclass(frozen=True)
class LatticeInvariants:
    """Invariants ``g2, g3`` of a Weierstrass cubic together with its roots.

    Use :meth:`from_invariants` or :meth:`from_roots` rather than the raw
    constructor; both fill in ``roots`` and ``discriminant`` consistently.
    ``discriminant`` may be supplied independently (lattice construction
    computes it from the eta product, which stays accurate when the lattice
    is close to degenerate).
    """

    g2: Number
    g3: Number
    roots: tuple
    discriminant: Number

    @classmethod
    def from_invariants(cls, g2, g3) -> "LatticeInvariants":
        return cls(g2, g3, roots_from_invariants(g2, g3), g2**3 - 27 * g3**2)

    @classmethod
    def from_roots(cls, e1, e2, e3=None) -> "LatticeInvariants":
        """Build from two roots (the third is ``-e1 - e2``); exact if inputs are."""
        if e3 is None:
            e3 = -e1 - e2
        g2 = -4 * (e1 * e2 + e1 * e3 + e2 * e3)
        g3 = 4 * e1 * e2 * e3
        scale = max(1.0, *(abs(complex(e)) for e in (e1, e2, e3)))
        roots = tuple(sorted((e1, e2, e3), key=lambda v: _order_key(v, scale)))
        return cls(g2, g3, roots, g2**3 - 27 * g3**2)

    @property
    def exact(self) -> bool:
        return is_exact(self.g2, self.g3, *self.roots)

    @property
    def scale(self) -> float:
        return max(1.0, abs(complex(self.g2)), abs(complex(self.g3)))

    @property
    def degenerate(self) -> bool:
        """True when the cubic has (numerically) repeated roots."""
        ref = max(1.0, abs(complex(self.g2)) ** 3, 27 * abs(complex(self.g3)) ** 2)
        return abs(complex(self.discriminant)) < DEGENERACY_RTOL * ref

    def root(self, k: int):
        """Root ``e_k`` for ``k`` in ``{1, 2, 3}``."""
        if k not in (1, 2, 3):
            raise ValueError(f"root index must be 1, 2 or 3, got {k!r}")
        return self.roots[k - 1]

    def cubic_residuals(self) -> list[float]:
        return [abs(complex(_cubic(e, self.g2, self.g3))) for e in self.roots]

    def numeric(self) -> "LatticeInvariants":
        return LatticeInvariants(
            complex(self.g2),
            complex(self.g3),
            tuple(complex(e) for e in self.roots),
            complex(self.discriminant),
        )


# ---------------------------------------------------------------------------
# lattices
# ---------------------------------------------------------------------------


class Lattice:
    """Period lattice spanned by ``2*omega1`` and ``2*omega3``."""

    omega1: complex
    omega3: complex

    @property
    def periods(self) -> tuple[complex, complex]:
        return 2 * complex(self.omega1), 2 * complex(self.omega3)

    @property
    def half_periods(self) -> tuple[complex, complex, complex]:
        w1, w3 = complex(self.omega1), complex(self.omega3)
        return w1, w1 + w3, w3

    def reduced_basis(self) -> tuple[complex, complex]:
        """Gauss-reduced period basis ``(p1, p2)`` with ``Im(p2/p1) > 0``."""
        return _gauss_reduce(*self.periods)

    @property
    def shortest_period(self) -> float:
        return abs(self.reduced_basis()[0])

    def reduce(self, z):
        """Translate ``z`` into the cell centred on the origin (vectorised)."""
        p1, p2 = self.reduced_basis()
        z = np.asarray(z, dtype=complex)
        det = (p1.conjugate() * p2).imag
        a = (z * p2.conjugate()).imag / -det
        b = (z * p1.conjugate()).imag / det
        return z - np.round(a) * p1 - np.round(b) * p2

    def distance_to_lattice(self, z, scale: float = 1.0):
        """Distance from ``z`` to the nearest point of ``scale * Lattice``."""
        p1, p2 = self.reduced_basis()
        z = np.asarray(z, dtype=complex) / scale
        r = self.reduce(z)
        best = np.abs(r)
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                best = np.minimum(best, np.abs(r - i * p1 - j * p2))
        return best * scale


@dataclass(frozen=True)
class RectangularLattice(Lattice):
    """Rectangular lattice with periods ``real_period`` and ``1j * tau_im``."""

    tau_im: float
    real_period: float = 1.0

    def __post_init__(self):
        if not self.tau_im > 0 or not self.real_period > 0:
            raise LatticeError("periods of a rectangular lattice must be positive")

    @property
    def omega1(self) -> complex:
        return complex(self.real_period / 2, 0.0)

    @property
    def omega3(self) -> complex:
        return complex(0.0, self.tau_im / 2)


@dataclass(frozen=True)
class GeneralLattice(Lattice):
    omega1: complex
    omega3: complex

    def __post_init__(self):
        if abs((complex(self.omega3) / complex(self.omega1)).imag) < 1e-14:
            raise LatticeError("half-periods are linearly dependent over the reals")


def _gauss_reduce(p1: complex, p2: complex) -> tuple[complex, complex]:
    if abs(p2) < abs(p1):
        p1, p2 = p2, p1
    for _ in range(200):
        m = round((p2 / p1).real)
        p2 = p2 - m * p1
        if abs(p2) < abs(p1):
            p1, p2 = p2, p1
        else:
            break
    if (p2 / p1).imag < 0:
        p2 = -p2
    return p1, p2


def _q_series(tau: complex):
    q = cmath.exp(2j * math.pi * tau)
    e4 = e6 = 0j
    eta_log = 0j
    for n in range(1, 200):
        qn = q**n
        if abs(qn) < 1e-18:
            break
        e4 += n**3 * qn / (1 - qn)
        e6 += n**5 * qn / (1 - qn)
        eta_log += cmath.log(1 - qn)
    else:
        raise LatticeError("q-series did not converge; lattice aspect ratio too extreme")
    return q, 1 + 240 * e4, 1 - 504 * e6, eta_log


def _theta_constants(tau: complex):
    qt = cmath.exp(1j * math.pi * tau)
    t2 = t3 = t4 = 0j
    for n in range(0, 200):
        a = qt ** (n * (n + 1))
        b = qt ** ((n + 1) ** 2)
        t2 += a
        t3 += b
        t4 += (-1) ** (n + 1) * b
        if abs(a) < 1e-18 and abs(b) < 1e-18:
            break
    t2 *= 2 * cmath.exp(1j * math.pi * tau / 4)
    return t2, 1 + 2 * t3, 1 + 2 * t4


def invariants_from_lattice(lat: Lattice) -> LatticeInvariants:
    """Invariants, roots and discriminant of a period lattice."""
    p1, p2 = lat.reduced_basis()
    tau = p2 / p1
    q, e4, e6, eta_log = _q_series(tau)
    g2 = (4 * math.pi**4 / 3) * e4 / p1**4
    g3 = (8 * math.pi**6 / 27) * e6 / p1**6
    log_disc = 12 * cmath.log(2 * math.pi) + 2j * math.pi * tau + 24 * eta_log - 12 * cmath.log(p1)
    disc = cmath.exp(log_disc)
    if disc == 0 or not cmath.isfinite(disc) or not cmath.isfinite(g2):
        raise LatticeError("lattice aspect ratio too extreme for double precision")
    t2, t3, t4 = _theta_constants(tau)
    c = (math.pi / p1) ** 2 / 3
    e_a = c * (t3**4 + t4**4)
    e_b = c * (t2**4 - t4**4)
    e_c = -c * (t2**4 + t3**4)
    scale = max(1.0, abs(g2) ** 0.5, abs(g3) ** (1 / 3))
    g2, g3 = _clean(g2, scale**2), _clean(g3, scale**3)
    if abs(g3) < 1e-13 * scale**3:
        g3 = complex(0.0, g3.imag)
    roots = sorted((_clean(e, scale) for e in (e_a, e_b, e_c)), key=lambda v: _order_key(v, scale))
    return LatticeInvariants(g2, g3, tuple(roots), _clean(disc, abs(disc)))


def _agm(a: complex, b: complex) -> complex:
    for _ in range(100):
        a1 = (a + b) / 2
        b1 = cmath.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
        if abs(a - b) <= 1e-16 * abs(a):
            break
    return a


def lattice_from_invariants(inv: LatticeInvariants, rtol: float = 1e-9) -> Lattice:
    """Recover a period lattice from ``(g2, g3)`` with the AGM.

    Each candidate half-period ``pi / (2 M(sqrt(e_a - e_b), sqrt(e_a - e_c)))``
    is accepted only if the lattice it spans reproduces ``g2`` and ``g3``.
    Real roots with positive discriminant yield a :class:`RectangularLattice`.
    """
    if inv.degenerate:
        raise LatticeError("degenerate invariants (discriminant ~ 0) have no lattice")
    e = [complex(r) for r in inv.roots]
    halves = []
    for a in range(3):
        b, c = [i for i in range(3) if i != a]
        halves.append(math.pi / (2 * _agm(cmath.sqrt(e[a] - e[b]), cmath.sqrt(e[a] - e[c]))))
    g2, g3 = complex(inv.g2), complex(inv.g3)
    ref2, ref3 = max(1.0, abs(g2)), max(1.0, abs(g3))
    for i, j in ((0, 2), (0, 1), (1, 2)):
        w1, w3 = halves[i], halves[j]
        if abs((w3 / w1).imag) < 1e-12:
            continue
        cand = GeneralLattice(w1, w3)
        got = invariants_from_lattice(cand)
        if abs(got.g2 - g2) <= rtol * ref2 and abs(got.g3 - g3) <= rtol * ref3:
            real = all(abs(x.imag) == 0 for x in e) and complex(inv.discriminant).real > 0
            if real and abs(w1.imag) < 1e-14 * abs(w1) and abs(w3.real) < 1e-14 * abs(w3):
                return RectangularLattice(tau_im=2 * abs(w3), real_period=2 * abs(w1))
            return cand
    raise LatticeError("could not recover a period lattice from the invariants")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _laurent_coeffs(g2: complex, g3: complex, terms: int = _LAURENT_TERMS) -> tuple:
    c = [0j] * (terms + 2)
    c[2] = g2 / 20
    c[3] = g3 / 28
    for k in range(4, terms + 2):
        c[k] = 3 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
    return tuple(c)


def _radius_estimate(c: tuple) -> float:
    est = math.inf
    for k in range(len(c) // 2, len(c)):
        if abs(c[k]) > 0:
            est = min(est, abs(c[k]) ** (-1 / (2 * k - 2)))
    return est


def wp_and_prime(x, inv: LatticeInvariants, lat: Lattice | None = None):
    """Evaluate ``wp`` and ``wp'`` at ``x`` (scalar or array).

    Parameters
    ----------
    x : complex or array_like
        Evaluation point(s).
    inv : LatticeInvariants
        Supplies ``g2`` and ``g3``.
    lat : Lattice, optional
        When given, arguments are reduced modulo the lattice first, which is
        the accurate path far from the origin.  Without a lattice the
        halving/doubling chain is still valid for any non-lattice point.

    Raises
    ------
    PoleError
        If any point lies within ``POLE_DISTANCE`` of a lattice point.
    """
    g2, g3 = complex(inv.g2), complex(inv.g3)
    scalar = np.ndim(x) == 0
    z = np.atleast_1d(np.asarray(x, dtype=complex))
    c = _laurent_coeffs(g2, g3)
    if lat is not None:
        z = lat.reduce(z)
        radius = lat.shortest_period
        near = lat.distance_to_lattice(z)
    else:
        radius = _radius_estimate(c)
        near = np.abs(z)
    if np.any(near < POLE_DISTANCE):
        raise PoleError("argument within 1e-10 of a lattice point")
    zmax = float(np.max(np.abs(z)))
    halvings = max(0, math.ceil(math.log2(4 * zmax / radius))) if radius < math.inf else 0
    zs = z / 2.0**halvings
    z2 = zs * zs
    p = np.zeros_like(zs)
    dp = np.zeros_like(zs)
    for k in range(len(c) - 1, 1, -1):
        p = p * z2 + c[k]
        dp = dp * z2 + (2 * k - 2) * c[k]
    # p holds sum c_k z2^(k-2); dp holds sum (2k-2) c_k z2^(k-2)
    w = 1 / z2 + p * z2
    dw = -2 / (z2 * zs) + dp * zs
    for _ in range(halvings):
        f = 4 * w**3 - g2 * w - g3
        q = 12 * g2 * w * w + 36 * g3 * w + g2 * g2
        df = 12 * w * w - g2
        dq = 24 * g2 * w + 36 * g3
        r_prime = 0.25 + (dq * f - q * df) / (16 * f * f)
        w, dw = w / 4 + q / (16 * f), r_prime * dw / 2
    if scalar:
        return complex(w[0]), complex(dw[0])
    return w.reshape(np.shape(x)), dw.reshape(np.shape(x))


def wp(x, inv: LatticeInvariants, lat: Lattice | None = None):
    """Weierstrass ``wp(x; g2, g3)``."""
    return wp_and_prime(x, inv, lat)[0]


def wp_prime(x, inv: LatticeInvariants, lat: Lattice | None = None):
    """Derivative ``wp'(x; g2, g3)``."""
    return wp_and_prime(x, inv, lat)[1]
