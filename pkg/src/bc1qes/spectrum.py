"""Eigenpairs of the algebraic operators on ``P_n`` and their branch structure in g2.

Two arithmetic modes:

* exact, when the matrix of the operator on ``P_n`` has rational entries:
  the characteristic polynomial is factored over Q (sympy), algebraic
  multiplicities are the factor exponents and geometric multiplicities
  come from exact ranks;
* floating, otherwise: eigenvalues from a dense QR eigensolver, clustered,
  simple eigenpairs refined by Newton's method on the bordered system, and
  geometric multiplicities from SVD rank with threshold ``1e-9 * scale``.
"""
from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import sympy
from scipy.optimize import linear_sum_assignment

from .diffop import DiffOp, MatrixReport, Poly, PolySpace, matrix_on
from .elliptic import LatticeInvariants, _order_key, is_exact, roots_from_invariants
from .model import Family, build_operator, energy_offset, is_qes_integer

__all__ = [
    "Eigenpair",
    "EigenvalueStructure",
    "StructureReport",
    "LeakageError",
    "ContinuationError",
    "eigenpairs",
    "detect_structure",
    "CirclePath",
    "SegmentPath",
    "parse_path",
    "SheetTrace",
    "trace_branches",
    "permutation_cycles",
    "branch_points",
]

JORDAN_RTOL = 1e-9
CLUSTER_RTOL = 1e-6
LEAK_RTOL = 1e-12


class LeakageError(ValueError):
    """The operator does not preserve the polynomial space."""


class ContinuationError(RuntimeError):
    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (at step {step})")
        self.step = step


@dataclass(frozen=True)
class Eigenpair:
    h_eigenvalue: complex
    energy: complex
    poly: Poly
    algebraic_multiplicity: int
    geometric_multiplicity: int

    @property
    def jordan(self) -> bool:
        return self.geometric_multiplicity < self.algebraic_multiplicity


@dataclass(frozen=True)
class EigenvalueStructure:
    value: complex
    algebraic: int
    geometric: int
    eigenvectors: tuple

    @property
    def jordan(self) -> bool:
        return self.geometric < self.algebraic


@dataclass(frozen=True)
class StructureReport:
    n: int
    exact: bool
    eigenvalues: tuple

    @property
    def has_jordan(self) -> bool:
        return any(e.jordan for e in self.eigenvalues)

    @property
    def degenerate(self) -> bool:
        return any(e.algebraic > 1 for e in self.eigenvalues)


# ---------------------------------------------------------------------------
# linear algebra helpers
# ---------------------------------------------------------------------------


def _scale(M: np.ndarray) -> float:
    return max(1.0, float(np.abs(M).sum(axis=1).max(initial=0.0)))


def _echelon_monic(vectors: Sequence[Sequence], tol: float = 0.0) -> list[list]:
    """Column-reduce a basis so each vector is monic in a distinct top degree.

    Works on Fractions (``tol=0``) or complex floats.
    """
    vecs = [list(v) for v in vectors]
    out = []
    dim = len(vecs[0]) if vecs else 0
    for deg in range(dim - 1, -1, -1):
        if not vecs:
            break
        piv = max(range(len(vecs)), key=lambda i: abs(complex(vecs[i][deg])))
        if abs(complex(vecs[piv][deg])) <= tol * max(abs(complex(x)) for x in vecs[piv]):
            continue
        v = vecs.pop(piv)
        lead = v[deg]
        v = [x / lead for x in v]
        for d in range(deg + 1, dim):
            v[d] = 0 * v[d]
        v[deg] = 1 + 0 * v[deg]
        vecs = [[a - w[deg] * b for a, b in zip(w, v)] for w in vecs]
        out.append(v)
    return out


def _monic_vector(v: np.ndarray) -> np.ndarray:
    ref = np.abs(v).max()
    nz = np.nonzero(np.abs(v) > 1e-12 * ref)[0]
    v = v / v[nz[-1]]
    v[nz[-1]] = 1
    v[nz[-1] + 1 :] = 0
    return v


def _newton_eigenpair(M: np.ndarray, lam: complex, v: np.ndarray, iters: int = 3):
    """Refine a simple eigenpair with Newton's method on ``(M - lam) v = 0, v_j = 1``."""
    N = M.shape[0]
    j = int(np.argmax(np.abs(v)))
    v = v / v[j]
    for _ in range(iters):
        J = np.zeros((N + 1, N + 1), dtype=complex)
        J[:N, :N] = M - lam * np.eye(N)
        J[:N, N] = -v
        J[N, j] = 1.0
        r = np.concatenate([(M - lam * np.eye(N)) @ v, [v[j] - 1.0]])
        try:
            d = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        v = v + d[:N]
        lam = lam + d[N]
        if np.abs(d).max() <= 1e-16 * max(1.0, abs(lam)):
            break
    return lam, v


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in np.argsort(values.real, kind="stable"):
        for g in groups:
            if abs(values[g[0]] - values[i]) <= tol or abs(np.mean(values[g]) - values[i]) <= tol:
                g.append(int(i))
                break
        else:
            groups.append([int(i)])
    return groups


def _float_structure(M: np.ndarray) -> list[EigenvalueStructure]:
    N = M.shape[0]
    scale = _scale(M)
    vals = np.linalg.eigvals(M) if N else np.array([])
    out = []
    for g in _cluster(vals, CLUSTER_RTOL * scale):
        lam = complex(np.mean(vals[g]))
        m = len(g)
        A = M - lam * np.eye(N)
        _, s, vh = np.linalg.svd(A)
        geo = max(1, int(np.sum(s <= JORDAN_RTOL * scale)))
        geo = min(geo, m)
        if m == 1:
            lam, v = _newton_eigenpair(M, lam, vh[-1].conj())
            lam = complex(lam)
            vecs = [_monic_vector(v)]
        else:
            basis = [vh[-1 - i].conj() for i in range(geo)]
            vecs = [np.array(v) for v in _echelon_monic(basis, tol=1e-10)]
        out.append(EigenvalueStructure(lam, m, geo, tuple(vecs)))
    return out


def _exact_structure(rows) -> list[EigenvalueStructure]:
    N = len(rows)
    M = sympy.Matrix(N, N, lambda i, j: sympy.Rational(Fraction(rows[i][j]).numerator, Fraction(rows[i][j]).denominator))
    lam = sympy.Symbol("lam")
    _, factors = sympy.factor_list(M.charpoly(lam).as_expr(), lam)
    Mf = np.array([[complex(x) for x in r] for r in rows])
    out = []
    for q, mult in factors:
        qp = sympy.Poly(q, lam)
        d = qp.degree()
        if d == 1:
            a, b = qp.all_coeffs()
            val = -b / a
            null = (M - val * sympy.eye(N)).nullspace()
            vecs = [[Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in v] for v in null]
            vecs = _echelon_monic(vecs)
            out.append(EigenvalueStructure(Fraction(int(sympy.fraction(val)[0]), int(sympy.fraction(val)[1])), mult, len(vecs), tuple(vecs)))
            continue
        # irreducible factor of degree d: each conjugate root has the same structure
        qM = sympy.zeros(N, N)
        for c in qp.all_coeffs():
            qM = qM * M + c * sympy.eye(N)
        geo = (N - qM.rank()) // d
        coeffs = [complex(c) for c in qp.all_coeffs()]
        for r in np.roots(coeffs):
            r = complex(r)
            for _ in range(4):
                p = np.polyval(coeffs, r)
                dp = np.polyval(np.polyder(coeffs), r)
                if dp == 0:
                    break
                r -= p / dp
            _, s, vh = np.linalg.svd(Mf - r * np.eye(N))
            if mult == 1 and geo == 1:
                r, v = _newton_eigenpair(Mf, r, vh[-1].conj())
                r = complex(r)
                vecs = [_monic_vector(v)]
            else:
                vecs = [np.array(v) for v in _echelon_monic([vh[-1 - i].conj() for i in range(geo)], tol=1e-10)]
            out.append(EigenvalueStructure(r, mult, geo, tuple(vecs)))
    return out


def _report(op: DiffOp, space) -> MatrixReport:
    if not isinstance(space, PolySpace):
        space = PolySpace(space)
    rep = matrix_on(op, space)
    if rep.exact:
        ok = rep.preserves
    else:
        ok = rep.leakage_norm <= LEAK_RTOL * max(1.0, op.max_abs_coeff())
    if not ok:
        p, leak = rep.first_leak()
        raise LeakageError(f"operator does not preserve P_{rep.n}: tau^{p} maps to terms {leak} above degree {rep.n}")
    return rep


def detect_structure(op: DiffOp, space, exact: bool | None = None) -> StructureReport:
    """Distinct eigenvalues of ``op`` on ``P_n`` with multiplicities and eigenvectors."""
    rep = _report(op, space)
    use_exact = rep.exact if exact is None else (exact and rep.exact)
    if use_exact:
        items = _exact_structure(rep.matrix)
    else:
        items = _float_structure(rep.to_numpy())
    return StructureReport(rep.n, use_exact, tuple(items))


def eigenpairs(op: DiffOp, space, offset=0, exact: bool | None = None) -> list[Eigenpair]:
    """Eigenpairs of ``op`` on ``P_n``.

    One entry per independent eigenvector; each entry carries the algebraic
    and geometric multiplicity of its eigenvalue.  The energy is
    ``offset - lam / 2``.  Sorted by (real, imaginary) part of the energy.

    Raises
    ------
    LeakageError
        If ``op`` maps ``P_n`` outside itself.
    """
    off = getattr(offset, "value", offset)
    rep = detect_structure(op, space, exact=exact)
    out = []
    for item in rep.eigenvalues:
        for v in item.eigenvectors:
            lam = item.value
            energy = off - lam * Fraction(1, 2) if is_exact(lam, off) else complex(off) - complex(lam) / 2
            poly = Poly(list(v)) if isinstance(lam, Fraction) else Poly([complex(x) for x in v])
            out.append(Eigenpair(lam, energy, poly, int(item.algebraic), int(item.geometric)))
    out.sort(key=lambda e: (round(complex(e.energy).real, 12), round(complex(e.energy).imag, 12), e.poly.degree))
    return out


def family_eigenpairs(fam: Family, inv: LatticeInvariants, exact: bool | None = None) -> list[Eigenpair]:
    """Eigenpairs of a family operator; ``fam.n`` must be a non-negative integer."""
    if not is_qes_integer(fam.n):
        raise ValueError(f"polynomial eigenfunctions need a non-negative integer n, got n={fam.n}")
    op = build_operator(fam, inv)
    return eigenpairs(op, PolySpace(int(fam.n)), energy_offset(fam, inv), exact=exact)


__all__.append("family_eigenpairs")


# ---------------------------------------------------------------------------
# branch tracing in g2
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CirclePath:
    """``g2(t) = center + radius * exp(2 pi i (t + phase))``, closed."""

    radius: float
    center: complex = 0
    phase: float = 0.0
    turns: int = 1
    closed = True

    def __call__(self, t: float) -> complex:
        return self.center + self.radius * cmath.exp(2j * cmath.pi * (self.turns * t + self.phase))


@dataclass(frozen=True)
class SegmentPath:
    a: complex
    b: complex
    closed = False

    def __call__(self, t: float) -> complex:
        return self.a + (self.b - self.a) * t


def parse_path(text: str):
    """``circle:r=1,c=0[,turns=2]`` or ``segment:a=1,b=4``."""
    m = re.match(r"^\s*(circle|segment)\s*:(.*)$", text)
    if not m:
        raise ValueError(f"expected 'circle:r=..,c=..' or 'segment:a=..,b=..', got {text!r}")
    kv = {}
    for item in filter(None, (s.strip() for s in m.group(2).split(","))):
        k, _, v = item.partition("=")
        kv[k.strip()] = complex(v.strip().replace("i", "j"))
    if m.group(1) == "circle":
        return CirclePath(kv["r"].real, kv.get("c", 0), turns=int(kv.get("turns", 1).real))
    return SegmentPath(kv["a"], kv["b"])


@dataclass(frozen=True)
class SheetTrace:
    path: tuple
    branches: tuple  # branches[s][i]: eigenvalue of branch i at path point s
    closed: bool
    permutation: tuple | None

    @property
    def cycles(self) -> str:
        return permutation_cycles(self.permutation) if self.permutation is not None else ""


def permutation_cycles(perm: Sequence[int]) -> str:
    """Cycle notation with 1-based labels, fixed points omitted; identity is ``()``."""
    seen, parts = set(), []
    for i in range(len(perm)):
        if i in seen or perm[i] == i:
            seen.add(i)
            continue
        cyc, j = [], i
        while j not in seen:
            seen.add(j)
            cyc.append(j + 1)
            j = perm[j]
        parts.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(parts) or "()"


def _match(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    cost = np.abs(prev[:, None] - new[None, :])
    _, cols = linear_sum_assignment(cost)
    return new[cols]


def _continue_roots(prev_roots, g2, g3):
    roots = np.array([complex(r) for r in roots_from_invariants(complex(g2), complex(g3))])
    return tuple(_match(np.array(prev_roots, dtype=complex), roots))


def trace_branches(
    fam: Family,
    path: Callable[[float], complex],
    g3,
    steps: int = 200,
    max_halvings: int = 20,
) -> SheetTrace:
    """Follow the h-eigenvalues of the family operator along a path in g2.

    Eigenvalues at consecutive points are paired by minimum total
    displacement (Hungarian assignment) after linear extrapolation.  A step
    is accepted when every matched eigenvalue moves by less than half its
    distance to the nearest other eigenvalue; otherwise it is halved.  For
    the second and third families the root ``e_k`` is continued along the
    path as well, so ``k`` labels a continuous root, not a sorted position.
    """
    if not is_qes_integer(fam.n):
        raise ValueError(f"branch tracing needs a non-negative integer n, got n={fam.n}")
    n = int(fam.n)
    g3 = complex(g3)

    def spectrum_at(g2, roots):
        inv = LatticeInvariants(complex(g2), g3, roots, complex(g2) ** 3 - 27 * g3**2)
        M = matrix_on(build_operator(fam, inv), n).to_numpy()
        return np.linalg.eigvals(M), _scale(M)

    g2_0 = complex(path(0.0))
    roots = tuple(complex(r) for r in roots_from_invariants(g2_0, g3))
    vals, _ = spectrum_at(g2_0, roots)
    vals = np.array(sorted(vals, key=lambda v: (round(v.real, 10), round(v.imag, 10))))
    ts, pts, branches = [0.0], [g2_0], [vals]
    h_nom = 1.0 / steps
    t, step = 0.0, 0
    while t < 1.0 - 1e-15:
        h = min(h_nom, 1.0 - t)
        for _ in range(max_halvings + 1):
            t_new = t + h
            g2 = complex(path(t_new))
            new_roots = _continue_roots(roots, g2, g3)
            new, scale = spectrum_at(g2, new_roots)
            prev = branches[-1]
            pred = prev
            if len(branches) > 1:
                slope = (branches[-1] - branches[-2]) / (ts[-1] - ts[-2])
                pred = prev + slope * h
            matched = _match(pred, new)
            move = np.abs(matched - pred)
            gaps = np.array([min([abs(prev[i] - prev[j]) for j in range(len(prev)) if j != i], default=np.inf) for i in range(len(prev))])
            floor = 1e-9 * scale
            if np.all((move < 0.5 * gaps) | (move <= floor)):
                break
            h /= 2
        else:
            raise ContinuationError("eigenvalues could not be matched after maximal refinement", step)
        t, roots = t_new, new_roots
        ts.append(t)
        pts.append(g2)
        branches.append(matched)
        step += 1
    perm = None
    closed = bool(getattr(path, "closed", False))
    if closed:
        # branch i ends where branch perm[i] started
        _, cols = linear_sum_assignment(np.abs(branches[-1][:, None] - branches[0][None, :]))
        perm = tuple(int(c) for c in cols)
    return SheetTrace(tuple(pts), tuple(tuple(complex(x) for x in b) for b in branches), closed, perm)


def branch_points(fam: Family, g3) -> list[complex]:
    """Values of g2 where two h-eigenvalues of a first-family operator collide.

    Computed as the roots of the discriminant, in the eigenvalue variable,
    of the characteristic polynomial of the operator on ``P_n``; entries of
    that matrix are polynomial in g2 only for the first family.
    """
    if fam.kind != "first":
        raise ValueError("branch points are computed for the first family only")
    if not is_qes_integer(fam.n):
        raise ValueError("branch points need integer n")
    g2s, lam = sympy.symbols("g2 lam")
    n = int(fam.n)
    mu = sympy.nsimplify(fam.mu) if is_exact(fam.mu) else sympy.sympify(complex(fam.mu))
    g3s = sympy.nsimplify(g3) if is_exact(g3) else sympy.sympify(complex(g3))
    K = 2 * sympy.Integer(n) * (2 * n + 1 + 6 * mu)
    M = sympy.zeros(n + 1, n + 1)
    # h(tau^p) = [4 p(p-1) + 6 p (1+2mu) - K] tau^{p+1} - g2 [p(p-1) + p(1+2mu)/2] tau^{p-1} - g3 p(p-1) tau^{p-2}
    for p in range(n + 1):
        if p + 1 <= n:
            M[p + 1, p] = 4 * p * (p - 1) + 6 * p * (1 + 2 * mu) - K
        if p >= 1:
            M[p - 1, p] = -g2s * (p * (p - 1) + p * (1 + 2 * mu) / 2)
        if p >= 2:
            M[p - 2, p] = -g3s * p * (p - 1)
    if n == 0:
        return []
    cp = M.charpoly(lam).as_expr()
    disc = sympy.Poly(sympy.discriminant(cp, lam), g2s)
    if disc.is_zero:
        return []
    roots = [complex(r) for r in disc.nroots()]
    return sorted(roots, key=lambda z: _order_key(z, 1.0))
