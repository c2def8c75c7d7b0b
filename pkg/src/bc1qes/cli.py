"""Command-line interface: ``bc1qes {roots,spectrum,verify,sweep,discrepancies}``.

Output is JSON (default) or CSV.  JSON has the top-level keys
``config, results, checks, discrepancies, version``; complex numbers are
``[re, im]`` pairs.

Exit codes: 0 success, 2 usage error or refused input, 3 an algebraic
check failed, 4 an oracle check failed, 5 both kinds failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass

from . import __version__
from .diffop import PolySpace, matrix_on
from .discrepancy import build_report
from .elliptic import (
    LatticeError,
    LatticeInvariants,
    RectangularLattice,
    invariants_from_lattice,
    lattice_from_invariants,
)
from .integral import check_commutator
from .model import (
    PRINTED_COUPLINGS,
    CouplingConstants,
    FamilyParseError,
    build_operator,
    build_sl2_form,
    coupling_map,
    format_family,
    is_qes_integer,
    parse_family,
    parse_scalar,
)
from .oracle import DEFAULT_TOLERANCE, residual
from .sl2 import lower
from .spectrum import ContinuationError, family_eigenpairs, parse_path, trace_branches

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_ALGEBRA, EXIT_ORACLE, EXIT_BOTH = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    family: str | None
    g2: object
    g3: object
    tau_im: float | None
    fmt: str
    tolerance: float
    seed: int

    def to_dict(self):
        d = asdict(self)
        d["g2"], d["g3"] = _num(self.g2), _num(self.g3)
        return d


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def _num(x):
    """Complex-valued quantities as ``[re, im]``; None passes through."""
    if x is None:
        return None
    z = complex(x)
    return [z.real, z.imag]


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def _csv(header, rows, footer=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    if footer is not None:
        buf.write("# " + json.dumps(footer, sort_keys=True) + "\n")
    return buf.getvalue()


def _doc(cfg: RunConfig, results, checks=None, discrepancies=None):
    return {
        "config": cfg.to_dict(),
        "results": results,
        "checks": checks or [],
        "discrepancies": discrepancies or [],
        "version": {"schema": SCHEMA_VERSION, "package": __version__},
    }


# ---------------------------------------------------------------------------
# inputs
# ---------------------------------------------------------------------------


def _tolerance(value):
    tol = value if value is not None else float(os.environ.get("BC1QES_TOLERANCE", DEFAULT_TOLERANCE))
    if not tol > 0:
        raise UsageError(f"tolerance must be positive, got {tol}")
    return tol


def _invariants(args):
    """Exactly one of ``--g2/--g3`` and ``--tau-im``; returns (inv, lattice or None)."""
    has_g = args.g2 is not None or args.g3 is not None
    if has_g and args.tau_im is not None:
        raise UsageError("give either --g2/--g3 or --tau-im, not both")
    if args.tau_im is not None:
        lat = RectangularLattice(args.tau_im)
        return invariants_from_lattice(lat), lat
    if args.g2 is None or args.g3 is None:
        raise UsageError("both --g2 and --g3 are required (or use --tau-im)")
    try:
        inv = LatticeInvariants.from_invariants(parse_scalar(args.g2), parse_scalar(args.g3))
    except FamilyParseError as e:
        raise UsageError(str(e)) from None
    return inv, None


def _lattice_or_none(inv, lat):
    if lat is not None:
        return lat
    try:
        return lattice_from_invariants(inv.numeric())
    except LatticeError:
        return None


def _family(text):
    try:
        return parse_family(text)
    except (FamilyParseError, ValueError) as e:
        raise UsageError(str(e)) from None


def _require_integer_n(fam):
    if not is_qes_integer(fam.n):
        raise UsageError(
            f"n={fam.n} is not a non-negative integer. The sl(2) form of the operator exists for any n, "
            "but a finite invariant subspace P_n, and with it polynomial eigenfunctions, exists only "
            "for integer n >= 0."
        )


def _config(args, inv, family=None):
    return RunConfig(
        args.command,
        family,
        inv.g2 if inv else None,
        inv.g3 if inv else None,
        getattr(args, "tau_im", None),
        args.format,
        _tolerance(getattr(args, "tolerance", None)),
        getattr(args, "seed", 0),
    )


def _couplings(args, fam):
    k = coupling_map(fam, as_printed=bool(getattr(args, "as_printed", False)))
    if getattr(args, "kappa3", None) is not None:
        k = CouplingConstants(k.kappa2, parse_scalar(args.kappa3))
    return k


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_roots(args) -> tuple[str, int]:
    inv, lat = _invariants(args)
    cfg = _config(args, inv)
    res = inv.cubic_residuals()
    rows = [{"index": i + 1, "root": _num(e), "cubic_residual": r} for i, (e, r) in enumerate(zip(inv.roots, res))]
    if args.format == "csv":
        return _csv(["index", "re", "im", "cubic_residual"], [[r["index"], *r["root"], r["cubic_residual"]] for r in rows]), EXIT_OK
    doc = _doc(cfg, {"roots": rows, "discriminant": _num(inv.discriminant), "g2": _num(inv.g2), "g3": _num(inv.g3)})
    return _dump(doc), EXIT_OK


def _spectrum_rows(fam, inv, lat, couplings, tol, seed):
    rows = []
    for e in family_eigenpairs(fam, inv):
        r = None
        if lat is not None:
            r = residual(fam, inv, lat, e, tol, couplings=couplings, seed=seed).max_residual
        rows.append(
            {
                "h_eigenvalue": _num(e.h_eigenvalue),
                "energy": _num(e.energy),
                "poly": [_num(c) for c in e.poly.coeffs],
                "algebraic_multiplicity": e.algebraic_multiplicity,
                "geometric_multiplicity": e.geometric_multiplicity,
                "jordan": e.jordan,
                "oracle_residual": r,
            }
        )
    return rows


def cmd_spectrum(args) -> tuple[str, int]:
    fam = _family(args.family)
    _require_integer_n(fam)
    inv, lat = _invariants(args)
    cfg = _config(args, inv, format_family(fam))
    lat = _lattice_or_none(inv, lat)
    k = _couplings(args, fam)
    rows = _spectrum_rows(fam, inv, lat, k, cfg.tolerance, cfg.seed)
    if args.format == "csv":
        n = int(fam.n)
        header = ["index", "lambda_re", "lambda_im", "energy_re", "energy_im", "alg", "geom", "jordan", "oracle_residual"]
        header += [f"p{i}_{part}" for i in range(n + 1) for part in ("re", "im")]
        out = []
        for i, r in enumerate(rows):
            coeffs = r["poly"] + [[0.0, 0.0]] * (n + 1 - len(r["poly"]))
            out.append(
                [i + 1, *r["h_eigenvalue"], *r["energy"], r["algebraic_multiplicity"], r["geometric_multiplicity"],
                 r["jordan"], r["oracle_residual"], *[x for c in coeffs for x in c]]
            )
        return _csv(header, out), EXIT_OK
    doc = _doc(cfg, {"couplings": {"kappa2": _num(k.kappa2), "kappa3": _num(k.kappa3)}, "eigenpairs": rows})
    return _dump(doc), EXIT_OK


def _printed_variants(fam, inv, lat, tol, seed):
    out = []
    pairs = family_eigenpairs(fam, inv)
    variants = [("derived (default)", lambda f: coupling_map(f))] + list(PRINTED_COUPLINGS[fam.kind].items())
    for label, fn in variants:
        try:
            k = fn(fam)
        except ValueError:
            continue  # stated for another n
        worst = max(residual(fam, inv, lat, e, tol, couplings=k, seed=seed).max_residual for e in pairs)
        out.append({"formula": label, "kappa2": _num(k.kappa2), "kappa3": _num(k.kappa3), "max_residual": worst, "passes": worst < tol})
    return out


def cmd_verify(args) -> tuple[str, int]:
    fam = _family(args.family)
    _require_integer_n(fam)
    inv, lat = _invariants(args)
    cfg = _config(args, inv, format_family(fam))
    lat = _lattice_or_none(inv, lat)
    k = _couplings(args, fam)
    op = build_operator(fam, inv)
    n = int(fam.n)
    checks = []
    low = lower(build_sl2_form(fam, inv))
    sl2_ok = op == low if op.exact else op.allclose(low, 1e-12 * max(1.0, op.max_abs_coeff()))
    checks.append({"name": "sl2_equivalence", "kind": "algebraic", "passed": bool(sl2_ok)})
    rep = matrix_on(op, PolySpace(n))
    leak_ok = rep.preserves if rep.exact else rep.leakage_norm <= 1e-12 * max(1.0, op.max_abs_coeff())
    checks.append({"name": "invariant_subspace", "kind": "algebraic", "passed": bool(leak_ok), "leakage": rep.leakage_norm})
    cc = check_commutator(fam, inv)
    checks.append({"name": "particular_integral", "kind": "algebraic", "passed": cc.ok, "witness_degree": cc.witness[0] if cc.witness else None})
    if lat is None:
        checks.append({"name": "oracle", "kind": "oracle", "passed": False, "error": "no period lattice for degenerate invariants"})
    else:
        for i, e in enumerate(family_eigenpairs(fam, inv)):
            r = residual(fam, inv, lat, e, cfg.tolerance, couplings=k, seed=cfg.seed)
            checks.append(
                {"name": f"oracle_residual[{i + 1}]", "kind": "oracle", "passed": r.passed, "energy": _num(e.energy),
                 "max_residual": r.max_residual, "median_residual": r.median_residual}
            )
    disc = _printed_variants(fam, inv, lat, cfg.tolerance, cfg.seed) if args.as_printed and lat is not None else []
    alg_fail = any(not c["passed"] for c in checks if c["kind"] == "algebraic")
    orc_fail = any(not c["passed"] for c in checks if c["kind"] == "oracle")
    code = EXIT_BOTH if alg_fail and orc_fail else EXIT_ALGEBRA if alg_fail else EXIT_ORACLE if orc_fail else EXIT_OK
    results = {"couplings": {"kappa2": _num(k.kappa2), "kappa3": _num(k.kappa3)}, "passed": code == EXIT_OK}
    if args.format == "csv":
        rows = [[c["name"], c["kind"], c["passed"], c.get("max_residual", "")] for c in checks]
        return _csv(["check", "kind", "passed", "max_residual"], rows), code
    return _dump(_doc(cfg, results, checks, disc)), code


def cmd_sweep(args) -> tuple[str, int]:
    fam = _family(args.family)
    _require_integer_n(fam)
    try:
        path = parse_path(args.path)
        g3 = complex(parse_scalar(args.g3))
    except (ValueError, KeyError, FamilyParseError) as e:
        raise UsageError(f"bad path or g3: {e}") from None
    cfg = RunConfig(args.command, format_family(fam), None, g3, None, args.format, _tolerance(None), 0)
    try:
        tr = trace_branches(fam, path, g3, args.steps)
    except ContinuationError as e:
        return _dump(_doc(cfg, {"error": str(e), "step": e.step})), EXIT_ALGEBRA
    summary = {"closed": tr.closed, "permutation": tr.cycles if tr.closed else None,
               "mapping": list(tr.permutation) if tr.permutation is not None else None}
    if args.format == "csv":
        rows = [[s, *_num(g2), b + 1, *_num(lam)] for s, (g2, vals) in enumerate(zip(tr.path, tr.branches)) for b, lam in enumerate(vals)]
        return _csv(["step", "g2_re", "g2_im", "branch", "lambda_re", "lambda_im"], rows, footer=summary), EXIT_OK
    results = {"path": [_num(z) for z in tr.path], "branches": [[_num(v) for v in row] for row in tr.branches], **summary}
    return _dump(_doc(cfg, results)), EXIT_OK


def cmd_discrepancies(args) -> tuple[str, int]:
    tol = _tolerance(getattr(args, "tolerance", None))
    rep = build_report(tol)
    cfg = RunConfig(args.command, None, None, None, None, "json", tol, 0)
    d = rep.to_dict()
    doc = _doc(cfg, {"draws": d["draws"]}, discrepancies=d["questions"])
    return _dump(doc), EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bc1qes", description="Quasi-exactly-solvable BC1 elliptic model.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def inv_opts(sp):
        sp.add_argument("--g2", help="invariant g2 (exact rationals like 1/3 are kept exact)")
        sp.add_argument("--g3", help="invariant g3")
        sp.add_argument("--tau-im", type=float, help="rectangular lattice with periods 1 and i*TAU_IM")

    def common(sp):
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--tolerance", type=float, help="oracle tolerance (default $BC1QES_TOLERANCE or 1e-8)")
        sp.add_argument("--seed", type=int, default=0, help="seed for oracle sample points")

    sp = sub.add_parser("roots", help="roots of 4t^3 - g2 t - g3")
    inv_opts(sp)
    common(sp)

    for name, hlp in (("spectrum", "eigenpairs on P_n"), ("verify", "algebraic and oracle checks")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("family", help="e.g. first:mu=1/4,n=2  second:mu=0.25,n=2,k=1  third:nu=0.5,n=1,k=3")
        inv_opts(sp)
        common(sp)
        sp.add_argument("--as-printed", action="store_true", help="use the printed coupling formulas")
        sp.add_argument("--kappa3", help="override kappa3")

    sp = sub.add_parser("sweep", help="trace eigenvalue branches along a path in g2")
    sp.add_argument("family")
    sp.add_argument("--path", required=True, help="circle:r=1,c=0[,turns=2] or segment:a=1,b=4")
    sp.add_argument("--g3", required=True)
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("discrepancies", help="oracle adjudication of the conflicting printed formulas")
    sp.add_argument("--tolerance", type=float)
    sp.add_argument("--format", choices=("json",), default="json")
    return p


COMMANDS = {
    "roots": cmd_roots,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "discrepancies": cmd_discrepancies,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text, code = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"bc1qes {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
