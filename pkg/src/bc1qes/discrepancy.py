"""Adjudication of mutually inconsistent coupling and normalisation formulas.

Each :class:`Question` lists competing candidates.  A candidate is scored
by the x-space oracle: the eigenpairs of the family operator on ``P_n``
(the tau-space ground truth) are lifted to x-space with the candidate's
couplings or energy and checked against the Hamiltonian.  A question is
resolved when exactly one candidate passes on every parameter draw.

Questions that are purely algebraic (the sign of the energy shift in the
gauge relation, the g2 term of the third-family operator) are scored by
exact tau-space identities as well.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .diffop import PolySpace
from .elliptic import GeneralLattice, LatticeInvariants, RectangularLattice, invariants_from_lattice
from .model import (
    PRINTED_COUPLINGS,
    First,
    Second,
    Third,
    build_operator,
    build_sl2_form,
    conjugate,
    derived_couplings,
    energy_offset,
    first_kind_operator,
)
from .oracle import DEFAULT_TOLERANCE, residual
from .sl2 import lower
from .spectrum import eigenpairs, family_eigenpairs

__all__ = ["Candidate", "Question", "DiscrepancyReport", "build_report", "REPORT_VERSION"]

REPORT_VERSION = 1

# parameter draws shared by every question: (parameter, lattice)
DRAWS = (
    (0.37, RectangularLattice(1.0)),
    (1.3, RectangularLattice(1.3)),
    (-0.6, GeneralLattice(0.5, 0.25 + 0.6j)),
)


@dataclass
class Candidate:
    label: str
    formula: str
    max_residual: float
    passes: bool
    method: str = "oracle"


@dataclass
class Question:
    id: str
    question: str
    candidates: list = field(default_factory=list)

    @property
    def winners(self) -> list[str]:
        return [c.label for c in self.candidates if c.passes]

    @property
    def resolved(self) -> bool:
        return len(self.winners) == 1

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "candidates": [asdict(c) for c in self.candidates],
            "oracle_consistent": self.winners,
            "resolved": self.resolved,
        }


@dataclass
class DiscrepancyReport:
    tolerance: float
    questions: list

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "tolerance": self.tolerance,
            "draws": [{"param": p, "half_periods": [[complex(w).real, complex(w).imag] for w in (lat.omega1, lat.omega3)]} for p, lat in DRAWS],
            "questions": [q.to_dict() for q in self.questions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _round(x: float) -> float:
    """Three significant digits, so the report is stable against last-bit noise."""
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.2e}")


def _score(make_family, n: int, couplings_for, energy_for=None, samples: int = 25, tolerance=DEFAULT_TOLERANCE, printed_op=False):
    """Worst oracle residual over the draws and all eigenpairs."""
    worst = 0.0
    for p, lat in DRAWS:
        fam = make_family(p, n)
        inv = invariants_from_lattice(lat)
        if printed_op:
            pairs = eigenpairs(build_operator(fam, inv, printed=True), PolySpace(n), energy_offset(fam, inv))
        else:
            pairs = family_eigenpairs(fam, inv)
        k = couplings_for(fam)
        for e in pairs:
            E = energy_for(fam, inv, e) if energy_for else None
            rep = residual(fam, inv, lat, e, tolerance, couplings=k, energy=E, samples=samples)
            worst = max(worst, rep.max_residual)
    return _round(worst)


def _candidate(label, formula, worst, tolerance):
    return Candidate(label, formula, worst, worst < tolerance)


def _coupling_question(qid, text, make_family, kind, n, variants, tolerance, samples):
    q = Question(qid, text)
    table = PRINTED_COUPLINGS[kind]
    for label, formula in variants:
        fn = derived_couplings if label == "derived" else table[label]
        worst = _score(make_family, n, fn, samples=samples, tolerance=tolerance)
        q.candidates.append(_candidate(label, formula, worst, tolerance))
    return q


def _energy_sign_question(tolerance) -> Question:
    """``phi^-1 (h_first + s 2 E0) phi`` equals the family operator for which sign s."""
    q = Question(
        "gauge-energy-sign",
        "sign of the energy shift in (tau-e_k)^(mu-1/2) (h_first +- 2 E0) (tau-e_k)^(1/2-mu)",
    )
    inv = LatticeInvariants.from_roots(Fraction(7, 3), Fraction(-1, 5))
    fams = [Second(Fraction(2, 7), 3, 2), Third(Fraction(3, 4), 2, 1), Second(Fraction(-5, 3), 1, 3)]
    for sign, label in ((1, "+2E0"), (-1, "-2E0")):
        ok = True
        for fam in fams:
            k3 = derived_couplings(fam).kappa3
            E0 = energy_offset(fam, inv).value
            exps = [
                (Fraction(1, 2) - fam.param) if ((i == fam.k) == (fam.kind == "second")) else 0 for i in (1, 2, 3)
            ]
            h = first_kind_operator(fam.param, k3, inv)
            try:
                ok &= conjugate(h + 2 * sign * E0, exps, inv.roots) == build_operator(fam, inv)
            except ValueError:
                ok = False
        q.candidates.append(Candidate(label, f"h_first {label}", 0.0 if ok else 1.0, ok, "exact"))
    return q


def _third_g2_question(tolerance, samples) -> Question:
    q = Question("third-operator-g2-term", "g2 coefficient in the first-order term of the third-family operator")
    inv = LatticeInvariants.from_roots(Fraction(7, 3), Fraction(-1, 5))
    for printed, label, formula in ((False, "(1+2nu)", "-(1+2nu) g2/4"), (True, "(5+2nu)", "-(5+2nu) g2/4")):
        fam = Third(Fraction(3, 4), 2, 1)
        same = build_operator(fam, inv, printed=printed) == lower(build_sl2_form(fam, inv))
        worst = _score(lambda p, n: Third(p, n, 1), 2, derived_couplings, samples=samples, tolerance=tolerance, printed_op=printed)
        c = _candidate(label, formula, worst, tolerance)
        c.method = f"oracle; equals sl(2) form: {same}"
        q.candidates.append(c)
    return q


def _n1_energy_question(tolerance, samples) -> Question:
    q = Question("first-n1-energy-normalisation", "energy of P = tau -+ (1/2) sqrt(g2/3) relative to the printed +-(1+2mu) sqrt(3 g2)")

    def energy(c):
        def f(fam, inv, e):
            s = complex(inv.g2) ** 0.5
            lam_printed = (1 + 2 * fam.mu) * math_sqrt3 * s
            # pair by the constant term: tau - sqrt(g2/3)/2 goes with +lam_printed
            sign = 1 if complex(e.poly.coeff(0)).real * s.real <= 0 else -1
            return c * sign * lam_printed
        return f

    math_sqrt3 = math.sqrt(3)
    for c, label in ((1, "E = printed"), (-1, "E = -printed"), (0.5, "E = printed/2"), (-0.5, "E = -printed/2")):
        worst = _score(lambda p, n: First(p, n), 1, derived_couplings, energy_for=energy(c), samples=samples, tolerance=tolerance)
        q.candidates.append(_candidate(label, label, worst, tolerance))
    return q


def build_report(tolerance: float = DEFAULT_TOLERANCE, samples: int = 25) -> DiscrepancyReport:
    """Run every adjudication.  Deterministic: fixed draws and oracle seed."""
    first = lambda p, n: First(p, n)  # noqa: E731
    second = lambda p, n: Second(p, n, 1)  # noqa: E731
    third = lambda p, n: Third(p, n, 2)  # noqa: E731
    qs = [
        _coupling_question(
            "first-kappa3-n1", "kappa3 of the first family at n=1", first, "first", 1,
            [
                ("general-n product", "(n+2mu)(n+2mu+1)"),
                ("tilde-kappa3 identity", "2mu(1+2mu) + n(2n+1+6mu)"),
                ("n=1 example", "2(1+2mu)(1+mu)"),
            ],
            tolerance, samples,
        ),
        _coupling_question(
            "first-kappa3-n2", "kappa3 of the first family at n=2", first, "first", 2,
            [("general-n product", "(n+2mu)(n+2mu+1)"), ("tilde-kappa3 identity", "2mu(1+2mu) + n(2n+1+6mu)")],
            tolerance, samples,
        ),
        _coupling_question(
            "first-zero-mode", "couplings of the first family at n=0", first, "first", 0,
            [("zero-mode (n=0)", "kappa2=2mu(mu-1), kappa3=2mu(1+2mu)")],
            tolerance, samples,
        ),
        _coupling_question(
            "second-zero-mode", "couplings of the second family at n=0", second, "second", 0,
            [("zero-mode (n=0)", "kappa2=2mu(mu-1), kappa3=(1+2mu)(1-mu)"), ("derived", "kappa2=2mu(mu-1), kappa3=1+2mu")],
            tolerance, samples,
        ),
        _coupling_question(
            "second-kappa2", "couplings of the second family at n=2", second, "second", 2,
            [
                ("general-n", "kappa2=mu(mu-1), kappa3=2n^2+n(3+2mu)+(1+2mu)(1-mu)"),
                ("tilde-kappa3 identity", "kappa2=2mu(mu-1), kappa3=(1-mu)(1+2mu)+2n(n-1)+n(2mu+5)"),
                ("derived", "kappa2=2mu(mu-1), kappa3=2n^2+n(3+2mu)+(1+2mu)"),
            ],
            tolerance, samples,
        ),
        _coupling_question(
            "third-zero-mode", "couplings of the third family at n=0", third, "third", 0,
            [("zero-mode (n=0)", "kappa2=2nu(nu-1), kappa3=nu(1-nu)"), ("derived", "kappa2=2nu(nu-1), kappa3=3-2nu")],
            tolerance, samples,
        ),
        _coupling_question(
            "third-kappa2", "couplings of the third family at n=2", third, "third", 2,
            [
                ("general-n", "kappa2=nu(nu-1), kappa3=2n^2+n(5-2nu)+nu(1-2nu)"),
                ("tilde-kappa3 identity", "kappa2=2nu(nu-1), kappa3=nu(3-2nu)+2n(n-1)+n(7-2nu)"),
                ("derived", "kappa2=2nu(nu-1), kappa3=2n^2+n(5-2nu)+(3-2nu)"),
            ],
            tolerance, samples,
        ),
        _n1_energy_question(tolerance, samples),
        _energy_sign_question(tolerance),
        _third_g2_question(tolerance, samples),
    ]
    return DiscrepancyReport(tolerance, qs)
