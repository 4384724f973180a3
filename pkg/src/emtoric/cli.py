"""Command-line driver: Futaki reports, classification of the worked examples,
and ambitoric solves with verification.

Every numeric field ``key`` in an output record is accompanied by ``key.err``,
an absolute error estimate (0 for exact rational values).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

EXIT_OK, EXIT_USAGE, EXIT_INCONSISTENT, EXIT_NOT_POSITIVE, EXIT_NUMERIC = 0, 2, 3, 4, 5

DEFAULTS = {"tol": 1e-10, "quad_order": 8, "margin": 0.05, "fd_step": 1e-3, "threads": 1}
EPS = 2.220446049250313e-16


# ---------------------------------------------------------------------------
# polytope documents

@dataclass
class PolytopeSpec:
    """Facets as ((n1, n2), offset) with label <n, mu> + offset, plus optional name and f."""

    facets: list
    name: str | None = None
    f: tuple | None = None

    def polytope(self):
        from .polytope import from_facets
        return from_facets([(tuple(n), b) for n, b in self.facets], name=self.name or "")

    def killing(self):
        from .algebra import AffinePoly2
        return None if self.f is None else AffinePoly2(*self.f)


def _locate(text: str, token: str, nth: int = 0) -> tuple:
    """1-based (line, column) of the nth occurrence of token, or (1, 1)."""
    pos = -1
    for _ in range(nth + 1):
        pos = text.find(token, pos + 1)
        if pos < 0:
            return 1, 1
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


def parse_scalar(v, where: str = "value"):
    """Exact rational from "p/q" strings and JSON integers; JSON reals stay float."""
    from .errors import SpecParseError
    if isinstance(v, bool):
        raise SpecParseError(f"{where}: boolean is not a number")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise SpecParseError(f"{where}: cannot parse rational {v!r}") from None
    raise SpecParseError(f"{where}: expected a number or a \"p/q\" string")


def format_scalar(v):
    if isinstance(v, Rational):
        return str(Fraction(v))
    return float(v)


def _load_json(text: str):
    from .errors import SpecParseError
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(exc.msg, exc.lineno, exc.colno) from None


def _triple(v, text: str, key: str):
    from .errors import SpecParseError
    line, col = _locate(text, f'"{key}"')
    if not isinstance(v, list) or len(v) != 3:
        raise SpecParseError(f'"{key}" must be a list of three numbers', line, col)
    try:
        return tuple(parse_scalar(c, key) for c in v)
    except SpecParseError as exc:
        raise SpecParseError(str(exc).rsplit(" (line", 1)[0], line, col) from None


def parse_spec(text: str) -> PolytopeSpec:
    from .errors import SpecParseError
    doc = _load_json(text)
    if not isinstance(doc, dict):
        raise SpecParseError("document must be an object", 1, 1)
    if "facets" not in doc:
        raise SpecParseError('missing "facets"', 1, 1)
    facets = []
    raw = doc["facets"]
    if not isinstance(raw, list):
        raise SpecParseError('"facets" must be a list', *_locate(text, '"facets"'))
    for i, fc in enumerate(raw):
        line, col = _locate(text, '"normal"', i)
        try:
            if not isinstance(fc, dict) or set(fc) != {"normal", "offset"}:
                raise SpecParseError('each facet needs exactly "normal" and "offset"')
            n = fc["normal"]
            if not isinstance(n, list) or len(n) != 2:
                raise SpecParseError("normal must have two entries")
            normal = (parse_scalar(n[0], "normal"), parse_scalar(n[1], "normal"))
            facets.append((normal, parse_scalar(fc["offset"], "offset")))
        except SpecParseError as exc:
            raise SpecParseError(f"facet {i}: " + str(exc).rsplit(" (line", 1)[0], line, col) from None
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise SpecParseError('"name" must be a string', *_locate(text, '"name"'))
    f = _triple(doc["f"], text, "f") if doc.get("f") is not None else None
    return PolytopeSpec(facets, name, f)


def serialize_spec(spec: PolytopeSpec) -> str:
    doc = {}
    if spec.name is not None:
        doc["name"] = spec.name
    doc["facets"] = [{"normal": [format_scalar(n[0]), format_scalar(n[1])], "offset": format_scalar(b)}
                     for n, b in spec.facets]
    if spec.f is not None:
        doc["f"] = [format_scalar(c) for c in spec.f]
    return json.dumps(doc, indent=2) + "\n"


def spec_from_polytope(poly, f=None, name: str | None = None) -> PolytopeSpec:
    facets = [((fc.u[0], fc.u[1]), fc.lam) for fc in poly.facets]
    ftuple = None if f is None else (f.f0, f.f1, f.f2)
    return PolytopeSpec(facets, name if name is not None else (poly.name or None), ftuple)


# ---------------------------------------------------------------------------
# output records

@dataclass
class Record:
    command: str
    entries: list = field(default_factory=list)
    status: str = "ok"

    def num(self, key: str, value, err=0.0) -> None:
        self.entries.append((key, value, err))

    def text(self, key: str, value: str) -> None:
        self.entries.append((key, value, None))

    def render(self, fmt: str) -> str:
        if fmt == "structured":
            out = {"command": self.command, "status": self.status}
            for key, value, err in self.entries:
                if err is None:
                    out[key] = value
                else:
                    out[key] = {"value": _fmt_value(value), "err": _fmt_err(err)}
            return json.dumps(out, indent=2) + "\n"
        lines = [f"command = {self.command}", f"status = {self.status}"]
        for key, value, err in self.entries:
            if err is None:
                lines.append(f"{key} = {value}")
            else:
                lines.append(f"{key} = {_fmt_value(value)}")
                lines.append(f"{key}.err = {_fmt_err(err)}")
        return "\n".join(lines) + "\n"


def _fmt_value(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, Rational):
        return str(Fraction(v))
    return float(v)


def _fmt_err(e) -> float:
    e = float(e)
    # two significant digits keep records stable under round-off noise
    return float(f"{e:.2g}") if math.isfinite(e) else e


def _numbers(text: str, n: int | None = None) -> tuple:
    """Comma-separated scalars from a command-line argument."""
    try:
        vals = tuple(parse_scalar(s if "." not in s and "e" not in s.lower() else float(s))
                     for s in text.split(","))
    except Exception:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as numbers") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
    return vals


def _triple_arg(text: str) -> tuple:
    return _numbers(text, 3)


def _positive_rational(text: str):
    v = _numbers(text, 1)[0]
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# commands

def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_futaki(spec: PolytopeSpec, f=None, tol: float = DEFAULTS["tol"],
               order: int = DEFAULTS["quad_order"]) -> Record:
    """c, F(mu1), F(mu2) and the extremal affine function zeta for (polytope, f)."""
    from .algebra import AffinePoly2
    from .futaki import extremal_affine, futaki_report
    if f is None:
        f = spec.killing()
    if f is None:
        raise UsageError('no Killing potential: give "f" in the document or --f')
    if not isinstance(f, AffinePoly2):
        f = AffinePoly2(*f)
    poly = spec.polytope()
    rep = futaki_report(poly, f, tol, order)
    exact = isinstance(rep.c, Fraction)
    if exact:
        zeta_err = [0.0] * 3
    else:
        coarse = extremal_affine(poly, f, min(1e-6, tol * 1e3), order)
        zeta_err = [abs(float(a) - float(b)) + EPS * abs(float(a)) for a, b in
                    zip((rep.extremal_affine.f0, rep.extremal_affine.f1, rep.extremal_affine.f2),
                        (coarse.f0, coarse.f1, coarse.f2))]
    rec = Record("futaki")
    rec.text("polytope", poly.name or "unnamed")
    rec.text("f", _affine_str(f))
    rec.num("c", rep.c, rep.c_err)
    rec.num("futaki_mu1", rep.F_mu1, rep.F_mu1_err)
    rec.num("futaki_mu2", rep.F_mu2, rep.F_mu2_err)
    z = rep.extremal_affine
    for name, v, e in zip(("zeta0", "zeta1", "zeta2"), (z.f0, z.f1, z.f2), zeta_err):
        rec.num(name, v, e)
    rec.text("vanishes", str(rep.vanishes(max(1e-7, 10 * max(rep.F_mu1_err, rep.F_mu2_err)))).lower())
    return rec


def _affine_str(f) -> str:
    return ",".join(str(_fmt_value(c)) for c in (f.f0, f.f1, f.f2))


def square_branches(lam) -> tuple:
    """Expected non-constant solutions on the square: (axis, value) with value = sqrt(...)."""
    lam = Fraction(lam) if isinstance(lam, Rational) else float(lam)
    if lam > 2:
        return 2, math.sqrt(float(1 - 2 / lam))
    if lam < Fraction(1, 2):
        return 1, math.sqrt(float(1 - 2 * lam))
    return None, None


def cmd_classify_square(lam, tol: float = DEFAULTS["tol"]) -> Record:
    """All positive affine f (f0 = 1) with vanishing Futaki invariant on the square."""
    from .futaki import find_vanishing_f, futaki_report
    from .polytope import square
    if not lam > 0:
        raise UsageError("lambda must be positive")
    poly = square(lam)
    sols = find_vanishing_f(poly, tol=tol)
    rec = Record("classify-square")
    rec.num("lambda", lam, 0.0)
    nonconst = []
    for f in sols:
        rep = futaki_report(poly, f, tol)
        res = abs(float(rep.F_mu1)) + abs(float(rep.F_mu2))
        # slope of F along the solution curve bounds the error in f from the residual
        if abs(float(f.f1)) + abs(float(f.f2)) > 1e-4:
            nonconst.append((f, res))
    axis, expected = square_branches(lam)
    rec.text("verdict", "non-constant solutions" if nonconst else "cscK only")
    rec.num("n_solutions", len(nonconst), 0.0)
    for i, (f, res) in enumerate(nonconst):
        rec.num(f"solution{i}.f0", f.f0, 0.0)
        rec.num(f"solution{i}.f1", f.f1, max(res, EPS))
        rec.num(f"solution{i}.f2", f.f2, max(res, EPS))
    rec.text("closed_form_interval", "lambda in (0,1/2) or (2,inf)")
    rec.text("consistent_with_closed_form",
             str((axis is not None) == bool(nonconst)).lower())
    return rec


def cmd_classify_wpp(a0: int, a1: int, a2: int, tol: float = DEFAULTS["tol"],
                     margin: float = DEFAULTS["margin"]) -> Record:
    """Existence of a conformally Kaehler Einstein-Maxwell metric on the weighted projective plane.

    f must be proportional to the extremal affine function of constant weight;
    existence means it is positive on the simplex. The Bochner-flat potential
    then has f-weighted scalar curvature s~ constant and f proportional to s_J.
    """
    from .algebra import AffinePoly2
    from .futaki import extremal_affine
    from .polytope import wpp_simplex
    from .verify import bryant_potential, conformally_einstein_detect, f_extremal_fit, scalar_from_potential
    w = (a0, a1, a2)
    if any(not isinstance(a, int) or a <= 0 for a in w):
        raise UsageError("weights must be positive integers")
    poly = wpp_simplex(*w)
    eps = extremal_affine(poly, AffinePoly2(1))
    vmin = min(eps(v) for v in poly.vertices)
    s = sorted(w, reverse=True)
    criterion = s[0] < s[1] + s[2]
    exists = vmin > 0
    rec = Record("classify-wpp")
    rec.text("weights", ",".join(map(str, w)))
    rec.text("exists", str(exists).lower())
    rec.text("criterion_a0_lt_a1_plus_a2", str(criterion).lower())
    rec.num("extremal_affine.min_vertex", vmin, 0.0)
    if exists:
        scale = Fraction(1) / eps.f0 if isinstance(eps.f0, Rational) and eps.f0 != 0 else 1
        f = AffinePoly2(eps.f0 * scale, eps.f1 * scale, eps.f2 * scale)
        for name, v in zip(("f0", "f1", "f2"), (f.f0, f.f1, f.f2)):
            rec.num(name, v, 0.0)
        sf = scalar_from_potential(bryant_potential(*w), f, poly, margin=margin * poly.diameter())
        zeta, dev = f_extremal_fit(sf.s_Jf, sf.points, f)
        verdict = conformally_einstein_detect(sf.s_J, f(sf.points))
        rec.num("s_tilde", zeta.f0, dev)
        rec.num("s_tilde.slope_norm", math.hypot(zeta.f1, zeta.f2), dev)
        rec.text("conformally_einstein", str(bool(verdict)).lower())
        rec.num("einstein_ratio", verdict.ratio, verdict.spread * abs(verdict.ratio))
    if exists != criterion:
        rec.status = "inconsistent-verdicts"
    return rec


def _boundary(doc: dict, text: str):
    from .ambitoric import AmbitoricBoundary
    from .errors import SpecParseError
    vals = {}
    for key in ("alpha", "beta", "r_alpha", "r_beta"):
        if key not in doc:
            raise SpecParseError(f'missing "{key}"', 1, 1)
        v = doc[key]
        line, col = _locate(text, f'"{key}"')
        if not isinstance(v, list) or len(v) != 2:
            raise SpecParseError(f'"{key}" must list two numbers', line, col)
        vals[key] = [parse_scalar(c, key) for c in v]
    try:
        return AmbitoricBoundary(*vals["alpha"], *vals["beta"], *vals["r_alpha"], *vals["r_beta"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def boundary_from_rectangle(poly):
    """Product boundary data of an axis-parallel rectangle: label (alpha - x)/r and so on."""
    from .ambitoric import AmbitoricBoundary
    xs, ys = {}, {}
    for fc in poly.facets:
        u1, u2 = fc.u
        if u2 == 0:
            # label u1 x + lam vanishes at x = -lam/u1; r = -1/u1
            xs["inf" if u1 < 0 else "0"] = (-fc.lam / u1, -1 / u1)
        elif u1 == 0:
            ys["inf" if u2 < 0 else "0"] = (-fc.lam / u2, -1 / u2)
        else:
            raise UsageError("product type needs an axis-parallel rectangle")
    if len(poly.facets) != 4 or len(xs) != 2 or len(ys) != 2:
        raise UsageError("product type needs an axis-parallel rectangle")
    return AmbitoricBoundary(xs["0"][0], xs["inf"][0], ys["0"][0], ys["inf"][0],
                             xs["0"][1], xs["inf"][1], ys["0"][1], ys["inf"][1])


def _poly_coeffs(rec: Record, name: str, P, err: float) -> None:
    for k, c in enumerate(P.coeffs):
        rec.num(f"{name}{k}", c, 0.0 if isinstance(c, Rational) else err)


def cmd_solve_ambitoric(text: str, kind: str | None = None, f=None, tol: float = DEFAULTS["tol"],
                        order: int = DEFAULTS["quad_order"], margin: float = DEFAULTS["margin"],
                        fd_step: float = DEFAULTS["fd_step"]) -> Record:
    """Solve the boundary problem of the chosen type and verify the solution.

    ``text`` is either a polytope document of an axis-parallel rectangle
    (product type) or boundary data with keys alpha, beta, r_alpha, r_beta
    (two entries each) and the type-specific keys f, calabi_alpha, q, p,
    orientation and basis ("default" or "balanced").
    """
    from .algebra import AffinePoly2, Quadric
    from .ambitoric import (balanced_basis, default_basis, em_scalar, solve_calabi, solve_product,
                            solve_regular)
    from .errors import SpecParseError
    from .futaki import futaki_report
    from .verify import check_boundary_H, residual_modified_abreu
    doc = _load_json(text)
    if not isinstance(doc, dict):
        raise SpecParseError("document must be an object", 1, 1)
    kind = kind or doc.get("type") or "product"
    if "facets" in doc:
        spec = parse_spec(text)
        if kind != "product":
            raise UsageError("a polytope document can only drive the product type")
        bnd = boundary_from_rectangle(spec.polytope())
        f = f if f is not None else spec.f
    else:
        bnd = _boundary(doc, text)
        if f is None and doc.get("f") is not None:
            f = _triple(doc["f"], text, "f")
    if kind == "product":
        if f is None:
            raise UsageError('product type needs "f" or --f')
        sol = solve_product(bnd, AffinePoly2(*f), tol)
    elif kind == "calabi":
        a = doc.get("calabi_alpha")
        sol = solve_calabi(bnd, None if a is None else parse_scalar(a, "calabi_alpha"), tol)
    elif kind == "regular":
        for key in ("q", "p"):
            if key not in doc:
                raise UsageError(f'regular type needs "{key}"')
        q, p = Quadric(*_triple(doc["q"], text, "q")), Quadric(*_triple(doc["p"], text, "p"))
        orient = doc.get("orientation", "+")
        if orient not in ("+", "-"):
            raise UsageError('orientation must be "+" or "-"')
        basis = doc.get("basis", "balanced")
        if basis == "balanced":
            basis = balanced_basis(q, bnd, orient)
        elif basis == "default":
            basis = default_basis(q, orient)
        elif isinstance(basis, list) and len(basis) == 2:
            basis = tuple(Quadric(*_triple(b, text, "basis")) for b in basis)
        else:
            raise UsageError('basis must be "default", "balanced" or two quadrics')
        sol = solve_regular(bnd, q, p, orient, basis, tol)
    else:
        raise UsageError(f"unknown type {kind!r}")

    rec = Record("solve-ambitoric")
    rec.text("type", sol.kind)
    res_err = max(float(sol.residual), EPS)
    rec.num("system_residual", sol.residual, EPS)
    _poly_coeffs(rec, "A", sol.A, res_err)
    _poly_coeffs(rec, "B", sol.B, res_err)
    if sol.kind == "regular":
        ans = sol.ansatz
        _poly_coeffs(rec, "R", ans.R, res_err)
        for name, Q in (("rho", ans.rho), ("q", ans.q), ("p", ans.p)):
            for k, c in enumerate((Q.q0, Q.q1, Q.q2)):
                rec.num(f"{name}{k}", c, 0.0 if isinstance(c, Rational) else res_err)
    fk = sol.f
    for name, v in zip(("f0", "f1", "f2"), (fk.f0, fk.f1, fk.f2)):
        rec.num(name, v, 0.0 if isinstance(v, Rational) else res_err)
    for which, rep in sorted(sol.positivity.items()):
        rec.text(f"positivity.{which}", rep.verdict)
    rec.text("positive", str(sol.positive).lower())

    poly = sol.polytope
    H = sol.h_field()
    fut = futaki_report(poly, fk, tol, order)
    c_poly = float(fut.c)
    es = em_scalar(sol.ansatz, domain=bnd)
    c_em = float(es.c) if es.c is not None else float("nan")
    rec.num("c", sol.c, abs(float(sol.c) - c_poly) + fut.c_err)
    rec.num("c_const", fut.c, fut.c_err)
    rec.num("futaki_mu1", fut.F_mu1, fut.F_mu1_err)
    rec.num("futaki_mu2", fut.F_mu2, fut.F_mu2_err)
    rec.num("em_scalar_c", c_em, abs(c_em - c_poly))
    rec.num("em_scalar_rel_dev", abs(c_em - c_poly) / max(1.0, abs(c_poly)), fut.c_err / max(1.0, abs(c_poly)))
    diam = poly.diameter()
    ab = residual_modified_abreu(H, fk, poly, margin=margin * diam)
    ab_fd = residual_modified_abreu(H.without_closed_form(fd_step), fk, poly, margin=margin * diam)
    rec.num("abreu_residual", ab.residual, 64 * EPS * max(1.0, abs(ab.c)))
    rec.num("abreu_residual_fd", ab_fd.residual, abs(ab_fd.residual - ab.residual))
    bd = check_boundary_H(H, poly)
    rec.num("boundary_worst", bd.worst, 64 * EPS)
    rec.num("interior_min_eig", bd.interior_min_eig, 64 * EPS * max(1.0, abs(bd.interior_min_eig)))
    rec.text("boundary_passed", str(bd.passed).lower())
    ok = (bd.passed and ab_fd.residual < 1e-4 and abs(c_em - c_poly) <= 1e-6 * max(1.0, abs(c_poly)))
    rec.text("verified", str(ok).lower())
    return rec


# ---------------------------------------------------------------------------
# entry point

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=DEFAULTS["tol"],
                   help="quadrature / linear-algebra tolerance (default %(default)g)")
    p.add_argument("--quad-order", type=_positive_int, default=DEFAULTS["quad_order"],
                   help="Gauss order of the adaptive quadrature (default %(default)d)")
    p.add_argument("--margin", type=float, default=DEFAULTS["margin"],
                   help="interior margin for PDE checks, as a fraction of the diameter (default %(default)g)")
    p.add_argument("--fd-step", type=float, default=DEFAULTS["fd_step"],
                   help="finite-difference step for the PDE residual (default %(default)g)")
    p.add_argument("--threads", type=_positive_int, default=DEFAULTS["threads"],
                   help="cap on numeric library threads (default %(default)d)")
    p.add_argument("--format", choices=("text", "structured"), default="text",
                   help="key = value lines or one JSON document (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emtoric", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("futaki", help="c, F(mu1), F(mu2) and zeta of a labelled polygon")
    p.add_argument("spec", help="polytope document (JSON), '-' for stdin")
    p.add_argument("--f", type=_triple_arg, help="Killing potential f0,f1,f2 (overrides the document)")
    _add_common(p)

    p = sub.add_parser("classify-square", help="vanishing-Futaki f on the square with labels L^lambda")
    p.add_argument("lam", metavar="LAMBDA", type=_positive_rational)
    _add_common(p)

    p = sub.add_parser("classify-wpp", help="existence on the weighted projective plane")
    for name in ("a0", "a1", "a2"):
        p.add_argument(name, type=_positive_int)
    _add_common(p)

    p = sub.add_parser("solve-ambitoric", help="solve and verify an ambitoric boundary problem")
    p.add_argument("data", help="polytope document or boundary data (JSON), '-' for stdin")
    p.add_argument("--type", dest="kind", choices=("product", "calabi", "regular"))
    p.add_argument("--f", type=_triple_arg, help="Killing potential f0,f1,f2 (product type)")
    _add_common(p)
    return parser


def _limit_threads(n: int) -> None:
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def run(argv=None) -> tuple:
    """Parse arguments and run a command; returns (exit code, stdout text, stderr text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_USAGE if exc.code else EXIT_OK), "", ""
    _limit_threads(args.threads)
    from .errors import (EMToricError, InconsistentSystem, NonPositiveScalarCurvature, NotPositive,
                         NumericError, SpecParseError)
    try:
        if args.command == "futaki":
            rec = cmd_futaki(parse_spec(_read(args.spec)), args.f, args.tol, args.quad_order)
        elif args.command == "classify-square":
            rec = cmd_classify_square(args.lam, args.tol)
        elif args.command == "classify-wpp":
            rec = cmd_classify_wpp(args.a0, args.a1, args.a2, args.tol, args.margin)
        else:
            rec = cmd_solve_ambitoric(_read(args.data), args.kind, args.f, args.tol, args.quad_order,
                                      args.margin, args.fd_step)
    except (UsageError, SpecParseError) as exc:
        return EXIT_USAGE, "", f"emtoric: error: {exc}\n"
    except InconsistentSystem as exc:
        rec = Record(args.command, status="inconsistent")
        rec.text("error", str(exc))
        rec.num("residual", exc.residual, EPS)
        return EXIT_INCONSISTENT, rec.render(args.format), f"emtoric: {exc}\n"
    except (NotPositive, NonPositiveScalarCurvature) as exc:
        rec = Record(args.command, status="not-positive")
        rec.text("error", str(exc))
        witness = getattr(exc, "witness", None)
        if witness is not None:
            rec.num("witness", witness, EPS * max(1.0, abs(float(witness))))
        which = getattr(exc, "which", "")
        if which:
            rec.text("function", which)
        return EXIT_NOT_POSITIVE, rec.render(args.format), f"emtoric: {exc}\n"
    except NumericError as exc:
        return EXIT_NUMERIC, "", f"emtoric: numeric failure: {exc}\n"
    except (EMToricError, ValueError) as exc:
        return EXIT_USAGE, "", f"emtoric: error: {exc}\n"
    return EXIT_OK, rec.render(args.format), ""


def main(argv=None) -> int:
    code, out, err = run(argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
