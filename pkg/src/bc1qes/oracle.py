"""x-space check of algebraic eigenfunctions against the original Hamiltonian.

A candidate ``Psi(x) = P(wp(x)) * Psi0(x)`` and energy ``E`` are plugged
into ``H = -1/2 d^2/dx^2 + kappa2 wp(2x) + kappa3 wp(x)``.  The second
derivative is taken numerically from values of ``Psi`` near ``x`` only,
so the check never touches the tau-space algebra it is meant to test.

Two stencils are available:

``"circle"`` (default)
    ``Psi''(x) = 2/(N r^2) sum_k Psi(x + r w_k) w_k^{-2}`` over the ``N``-th
    roots of unity ``w_k``: the trapezoid rule for the Cauchy integral.
    ``Psi`` is analytic within distance ``d`` of ``x`` (``d`` = distance to
    the half-period lattice, where the gauge factor branches), and with
    ``r = d / 4`` the error decays like ``4^-N``.
``"fd"``
    8th-order central finite differences along the real period with step
    ``h = d / nodes`` (default 96).  Kept as an independent cross-check of
    the circle stencil; it is several orders less accurate.

Multivalued gauge factors are evaluated as ratios to their value at the
stencil centre, ``exp(a Log(f(z) / f(x)))``; this fixes one continuous
branch on the stencil and the relative residual does not depend on which
branch is chosen at ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffop import Poly
from .elliptic import Lattice, LatticeInvariants, lattice_from_invariants, wp, wp_and_prime
from .model import CouplingConstants, Family, coupling_map, format_family, gauge_factor

__all__ = [
    "ResidualReport",
    "Wavefunction",
    "StencilError",
    "reconstruct",
    "residual",
    "sample_points",
    "wp_double",
    "wp_double_mismatch",
    "potential_in_tau",
    "DEFAULT_TOLERANCE",
    "local_residual",
]

DEFAULT_TOLERANCE = 1e-8
EXCLUSION = 0.05
DEFAULT_NODES = {"circle": 32, "fd": 96}
FD_WEIGHTS = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])


class StencilError(ValueError):
    """The stencil would touch a branch point or pole of the wavefunction."""


@dataclass(frozen=True)
class ResidualReport:
    family: str
    couplings: CouplingConstants
    energy: complex
    tolerance: float
    sample_points: tuple
    residuals: tuple
    method: str = "circle"
    skipped: int = 0

    @property
    def max_residual(self) -> float:
        return max(self.residuals)

    @property
    def median_residual(self) -> float:
        return float(np.median(self.residuals))

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance


@dataclass(frozen=True)
class Wavefunction:
    """``Psi(x) = P(wp(x)) wp'(x)^m prod (wp(x) - e_i)^r_i``, principal branches."""

    poly: Poly
    mu_exponent: complex
    root_exponents: tuple
    inv: LatticeInvariants
    lat: Lattice

    def _factors(self, z):
        w, dw = wp_and_prime(z, self.inv, self.lat)
        return np.asarray(w), np.asarray(dw)

    def _log_gauge(self, w, dw, ref=None):
        """Log of the gauge factor; relative to ``ref=(w0, dw0)`` if given."""
        out = np.zeros_like(w)
        if self.mu_exponent != 0:
            q = dw if ref is None else dw / ref[1]
            out = out + self.mu_exponent * np.log(q)
        for e, r in zip(self.inv.roots, self.root_exponents):
            if r != 0:
                q = (w - complex(e)) if ref is None else (w - complex(e)) / (ref[0] - complex(e))
                out = out + complex(r) * np.log(q)
        return out

    def __call__(self, x):
        w, dw = self._factors(x)
        return self.poly(w) * np.exp(self._log_gauge(w, dw))

    def local(self, x0: complex, z):
        """Values at ``z`` on the branch continuous from ``x0``, divided by the gauge at ``x0``."""
        w0, dw0 = wp_and_prime(x0, self.inv, self.lat)
        w, dw = self._factors(z)
        return self.poly(w) * np.exp(self._log_gauge(w, dw, ref=(w0, dw0)))


def _lattice(inv: LatticeInvariants, lat: Lattice | None) -> Lattice:
    return lat if lat is not None else lattice_from_invariants(inv.numeric())


def reconstruct(fam: Family, inv: LatticeInvariants, lat: Lattice | None, eig) -> Wavefunction:
    """Wavefunction of an eigenpair (or bare polynomial) of the family."""
    poly = getattr(eig, "poly", eig)
    if not isinstance(poly, Poly):
        poly = Poly(poly)
    g = gauge_factor(fam)
    poly = Poly([complex(c) for c in poly.coeffs])
    return Wavefunction(poly, complex(g.mu_exponent), tuple(complex(r) for r in g.root_exponents), inv.numeric(), _lattice(inv, lat))


def sample_points(lat: Lattice, count: int = 25, seed: int = 0) -> list[complex]:
    """Deterministic points ``s * 2 omega1`` with ``s`` in (0,1) away from 0, 1/2 and 1."""
    rng = np.random.default_rng(seed)
    period = 2 * complex(lat.omega1)
    out = []
    while len(out) < count:
        s = rng.uniform(0.0, 1.0)
        if min(s, abs(s - 0.5), 1 - s) > EXCLUSION:
            out.append(s * period)
    return out


def _half_lattice_distance(lat: Lattice, x: complex) -> float:
    return float(lat.distance_to_lattice(2 * x)) / 2


def _second_derivative(psi: Wavefunction, x0: complex, method: str, nodes: int):
    d = _half_lattice_distance(psi.lat, x0)
    if d < 1e-6:
        raise StencilError(f"x={x0} is too close to a half period")
    if method == "circle":
        r = d / 4
        wk = np.exp(2j * np.pi * np.arange(nodes) / nodes)
        vals = psi.local(x0, x0 + r * wk)
        return 2 * np.sum(vals * wk**-2) / (nodes * r * r)
    if method == "fd":
        u = complex(psi.lat.omega1)
        u /= abs(u)
        h = d / nodes
        z = x0 + h * u * np.arange(-4, 5)
        vals = psi.local(x0, z)
        return np.dot(FD_WEIGHTS, vals) / (h * h * u * u)
    raise ValueError(f"unknown stencil {method!r}")


def local_residual(psi: Wavefunction, couplings: CouplingConstants, energy, x0: complex, method="circle", nodes=None):
    """``(H Psi - E Psi)(x0)`` and ``Psi(x0)``, both divided by the gauge factor at x0."""
    if nodes is None:
        nodes = DEFAULT_NODES[method]
    d2 = _second_derivative(psi, x0, method, nodes)
    w0 = wp(x0, psi.inv, psi.lat)
    w2 = wp(2 * x0, psi.inv, psi.lat)
    p0 = psi.poly(w0)
    k2, k3 = complex(couplings.kappa2), complex(couplings.kappa3)
    h = -0.5 * d2 + (k2 * w2 + k3 * w0) * p0
    return h - complex(energy) * p0, p0


def residual(
    fam: Family,
    inv: LatticeInvariants,
    lat: Lattice | None,
    eig,
    tolerance: float = DEFAULT_TOLERANCE,
    couplings: CouplingConstants | None = None,
    energy=None,
    samples: int = 25,
    seed: int = 0,
    method: str = "circle",
    nodes: int | None = None,
    floor: float = 1e-30,
) -> ResidualReport:
    """Relative eigen-residual ``|H Psi - E Psi| / max(|Psi|, floor)`` at sample points.

    Parameters
    ----------
    eig : Eigenpair or Poly
        Supplies the polynomial factor (and the energy unless ``energy`` is given).
    couplings : CouplingConstants, optional
        Defaults to :func:`bc1qes.model.coupling_map` of ``fam``.
    """
    lat = _lattice(inv, lat)
    psi = reconstruct(fam, inv, lat, eig)
    k = couplings if couplings is not None else coupling_map(fam)
    E = energy if energy is not None else eig.energy
    pts, res = [], []
    skipped = 0
    norm = max(psi.poly.norm_inf(), 1.0)
    seed_pts = sample_points(lat, samples * 4, seed)
    for x in seed_pts:
        if len(pts) == samples:
            break
        r, p0 = local_residual(psi, k, E, x, method, nodes)
        # zeros of P make the relative residual meaningless; skip them
        if abs(p0) < 1e-6 * norm:
            skipped += 1
            continue
        pts.append(complex(x))
        res.append(float(abs(r) / max(abs(p0), floor)))
    return ResidualReport(format_family(fam), k, complex(E), tolerance, tuple(pts), tuple(res), method, skipped)


def wp_double(x, inv: LatticeInvariants, lat: Lattice | None = None, method: str = "direct"):
    """``wp(2x)`` by direct evaluation or from ``tau = wp(x)`` via duplication.

    The duplication form is
    ``tau/4 + (12 g2 tau^2 + 36 g3 tau + g2^2) / (16 (4 tau^3 - g2 tau - g3))``.
    """
    inv = inv.numeric()
    if method == "direct":
        return wp(2 * np.asarray(x), inv, lat) if np.ndim(x) else wp(2 * x, inv, lat)
    if method != "duplication":
        raise ValueError(f"unknown method {method!r}")
    t = wp(x, inv, lat)
    g2, g3 = inv.g2, inv.g3
    return t / 4 + (12 * g2 * t * t + 36 * g3 * t + g2 * g2) / (16 * (4 * t**3 - g2 * t - g3))


def wp_double_mismatch(x, inv: LatticeInvariants, lat: Lattice | None = None):
    """Relative difference between the two ``wp(2x)`` evaluations."""
    a = np.asarray(wp_double(x, inv, lat, "direct"))
    b = np.asarray(wp_double(x, inv, lat, "duplication"))
    return np.abs(a - b) / np.maximum(np.abs(a), 1.0)


def potential_in_tau(tau, couplings: CouplingConstants, inv: LatticeInvariants):
    """``kappa2 wp(2x) + kappa3 wp(x)`` as a rational function of ``tau = wp(x)``.

    Equal to ``(kappa2 + 4 kappa3)/4 tau + kappa2/16 (12 g2 tau^2 + 36 g3 tau + g2^2)/F(tau)``.
    """
    g2, g3 = inv.g2, inv.g3
    k2, k3 = couplings.kappa2, couplings.kappa3
    F = 4 * tau**3 - g2 * tau - g3
    return (k2 + 4 * k3) * tau / 4 + k2 * (12 * g2 * tau * tau + 36 * g3 * tau + g2 * g2) / (16 * F)
