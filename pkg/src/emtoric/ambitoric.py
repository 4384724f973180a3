"""Explicit ambitoric metrics of product, Calabi and regular (+/-) type.

Each ansatz is described by one-variable polynomials A(x), B(y) on a
rectangle [alpha0, alpha_inf] x [beta0, beta_inf] in auxiliary coordinates
(x, y). The momentum map sends the rectangle to a labelled quadrilateral.

Boundary convention: every line x = alpha (resp. y = beta) is the zero set of
an affine function ``ell`` oriented like alpha - x (resp. beta - y), and the
labels are ``ell / r``. With this orientation the boundary conditions read
A(alpha_k) = 0, A'(alpha_k) = -2 r_{alpha,k}, B(beta_k) = 0,
B'(beta_k) = -2 r_{beta,k}, for all three types.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .algebra import (AffinePoly2, Poly4, Quadric, ad_half, coords_in_basis, inner, is_exact,
                      poisson_bracket, to_scalar, transvectant2)
from .errors import (CoordinateSingularity, InconsistentSystem, NonPositiveScalarCurvature,
                     NotPositive)
from .fields import HField, sympy_hfield
from .linalg import exact_consistent_solve, lstsq_residual, to_sympy
from .polytope import LabelledPolytope, from_facets

DEFAULT_TOL = 1e-9

__all__ = [
    "AmbitoricBoundary", "ProductAnsatz", "CalabiAnsatz", "RegularAnsatz", "AmbitoricSolution",
    "PositivityReport", "EMScalar", "solve_regular", "solve_product", "solve_calabi", "h_field",
    "em_scalar", "duality_transform", "inverse_duality", "moment_transform", "positivity_check",
    "default_basis", "balanced_basis", "killing_potential", "induced_polytope",
]


# ---------------------------------------------------------------------------
# data types

@dataclass(frozen=True)
class AmbitoricBoundary:
    """Compactification data: intervals for x and y and the label factors r."""

    alpha0: object
    alpha_inf: object
    beta0: object
    beta_inf: object
    r_alpha0: object
    r_alpha_inf: object
    r_beta0: object
    r_beta_inf: object

    def __post_init__(self):
        for name in ("alpha0", "alpha_inf", "beta0", "beta_inf",
                     "r_alpha0", "r_alpha_inf", "r_beta0", "r_beta_inf"):
            object.__setattr__(self, name, to_scalar(getattr(self, name)))
        if not self.alpha0 < self.alpha_inf or not self.beta0 < self.beta_inf:
            raise ValueError("need alpha0 < alpha_inf and beta0 < beta_inf")
        if not (self.r_alpha0 < 0 < self.r_alpha_inf and self.r_beta0 < 0 < self.r_beta_inf):
            raise ValueError("need r_0 < 0 < r_inf for both variables")

    @property
    def alphas(self) -> tuple:
        return (self.alpha0, self.alpha_inf)

    @property
    def betas(self) -> tuple:
        return (self.beta0, self.beta_inf)

    @property
    def r_alpha(self) -> tuple:
        return (self.r_alpha0, self.r_alpha_inf)

    @property
    def r_beta(self) -> tuple:
        return (self.r_beta0, self.r_beta_inf)

    def is_exact(self) -> bool:
        return is_exact(*self.alphas, *self.betas, *self.r_alpha, *self.r_beta)

    def check_regular(self) -> None:
        if not 0 < self.beta0 < self.beta_inf < self.alpha0 < self.alpha_inf:
            raise ValueError("regular type needs 0 < beta0 < beta_inf < alpha0 < alpha_inf")

    def corners(self) -> list:
        return [(a, b) for a in self.alphas for b in self.betas]

    def perturbed(self, name: str, factor) -> "AmbitoricBoundary":
        """Copy with one r multiplied by ``factor``."""
        return replace(self, **{name: getattr(self, name) * to_scalar(factor)})


@dataclass(frozen=True)
class ProductAnsatz:
    """H = diag(A(mu1), B(mu2)); ``axis`` is the variable f depends on (0: x, 1: y, None)."""

    A: Poly4
    B: Poly4
    f: AffinePoly2
    axis: int | None = 0

    kind = "product"


@dataclass(frozen=True)
class CalabiAnsatz:
    """Calabi type, momenta (x, x y), Killing potential f = x + alpha (constant if alpha is None)."""

    A: Poly4
    B: Poly4
    alpha: object = None

    kind = "calabi"

    @property
    def f(self) -> AffinePoly2:
        if self.alpha is None:
            return AffinePoly2(1, 0, 0)
        return AffinePoly2(self.alpha, 1, 0)


@dataclass(frozen=True)
class RegularAnsatz:
    """A = p rho + R, B = p rho - R on the regular ambitoric metric g_+ or g_- built from q."""

    q: Quadric
    p: Quadric
    rho: Quadric
    R: Poly4
    orientation: str = "+"
    basis: tuple | None = None

    kind = "regular"

    def __post_init__(self):
        if self.orientation not in ("+", "-"):
            raise ValueError("orientation must be '+' or '-'")
        if self.basis is None:
            object.__setattr__(self, "basis", default_basis(self.q, self.orientation))

    @property
    def A(self) -> Poly4:
        return self.p * self.rho + self.R

    @property
    def B(self) -> Poly4:
        return self.p * self.rho - self.R

    @property
    def p_basis(self) -> tuple:
        """The basis (p1, p2) of the orthogonal complement of q indexing the momenta."""
        if self.orientation == "+":
            return tuple(ad_half(self.q, w) for w in self.basis)
        return tuple(self.basis)

    def em_consistent(self, tol: float = 0.0) -> bool:
        d1 = inner(self.rho, self.p)
        d2 = inner(transvectant2(self.p, self.R), self.q)
        return abs(d1) <= tol and abs(d2) <= tol

    @property
    def f(self) -> AffinePoly2:
        return killing_potential(self)


@dataclass
class PositivityReport:
    verdict: str  # "positive", "vanishes" or "negative"
    witness: float | None
    interval: tuple
    method: str

    @property
    def positive(self) -> bool:
        return self.verdict == "positive"


@dataclass
class AmbitoricSolution:
    ansatz: object
    boundary: AmbitoricBoundary
    residual: float
    positivity: dict
    c: object
    rank: int = 8
    _polytope: LabelledPolytope | None = field(default=None, repr=False)
    _hfield: HField | None = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return self.ansatz.kind

    @property
    def A(self) -> Poly4:
        return self.ansatz.A

    @property
    def B(self) -> Poly4:
        return self.ansatz.B

    @property
    def f(self) -> AffinePoly2:
        return killing_potential(self.ansatz)

    @property
    def positive(self) -> bool:
        return all(rep.positive for rep in self.positivity.values())

    @property
    def polytope(self) -> LabelledPolytope:
        if self._polytope is None:
            self._polytope = induced_polytope(self.ansatz, self.boundary)
        return self._polytope

    def h_field(self) -> HField:
        if self._hfield is None:
            self._hfield = h_field(self.ansatz, domain=self.boundary)
        return self._hfield


# ---------------------------------------------------------------------------
# polynomial helpers

def _taylor_shift(P: Poly4, s) -> Poly4:
    """Coefficients of t -> P(t - s), i.e. P written in the variable t = z + s."""
    c = P.coeffs
    out = [0 * c[0]] * 5
    for k, ck in enumerate(c):
        for j in range(k + 1):
            out[j] = out[j] + ck * math.comb(k, j) * (-s) ** (k - j)
    return Poly4(out)


def _corner_min(q: Quadric, bnd: AmbitoricBoundary) -> float:
    """Minimum of the polarization q(x, y) over the rectangle (it is bilinear)."""
    return min(q.polar(a, b) for a, b in bnd.corners())


def _is_exact_all(*items) -> bool:
    vals = []
    for it in items:
        if isinstance(it, Quadric):
            vals += list(it.vector())
        elif isinstance(it, Poly4):
            vals += list(it.coeffs)
        elif isinstance(it, AffinePoly2):
            vals += list(it.vector())
        elif isinstance(it, AmbitoricBoundary):
            vals.append(Fraction(1) if it.is_exact() else 1.0)
        elif it is not None:
            vals.append(it)
    return is_exact(*vals)


def _linear_system(equations: Callable, n: int, exact: bool):
    """Matrix and right-hand side of the affine map v -> equations(v) = M v - b."""
    zero = [Fraction(0) if exact else 0.0] * n
    b = [-e for e in equations(zero)]
    cols = []
    for k in range(n):
        e = list(zero)
        e[k] = Fraction(1) if exact else 1.0
        cols.append([val + bk for val, bk in zip(equations(e), b)])
    mat = [[cols[k][i] for k in range(n)] for i in range(len(b))]
    return mat, b


def _solve(equations: Callable, n: int, exact: bool, tol: float):
    """Solve the overdetermined linear system; returns (solution, residual, rank)."""
    mat, rhs = _linear_system(equations, n, exact)
    if exact:
        sol, rank = exact_consistent_solve(mat, rhs)
        if sol is not None:
            return sol, 0.0, rank
        fsol, res, frank = lstsq_residual(mat, rhs)
        if rank < n and res < tol:
            # consistent but underdetermined: the minimum-norm float solution is used
            return list(fsol), res, rank
        raise InconsistentSystem(f"boundary conditions and constraints are inconsistent "
                                 f"(relative residual {max(res, tol):.3g})", max(res, tol))
    sol, res, rank = lstsq_residual(mat, rhs)
    if res >= tol:
        raise InconsistentSystem(f"boundary conditions and constraints are inconsistent "
                                 f"(relative residual {res:.3g})", res)
    return list(sol), res, rank


def _boundary_equations(A: Poly4, B: Poly4, bnd: AmbitoricBoundary) -> list:
    dA, dB = A.deriv(), B.deriv()
    eqs = []
    for a, r in zip(bnd.alphas, bnd.r_alpha):
        eqs += [A(a), dA(a) + 2 * r]
    for b, r in zip(bnd.betas, bnd.r_beta):
        eqs += [B(b), dB(b) + 2 * r]
    return eqs


def _positivity(A: Poly4, B: Poly4, bnd: AmbitoricBoundary) -> dict:
    return {"A": positivity_check(A, bnd.alphas), "B": positivity_check(B, bnd.betas)}


def _require_positive(pos: dict) -> None:
    for name, rep in pos.items():
        if not rep.positive:
            raise NotPositive(f"{name} is not positive on {tuple(float(v) for v in rep.interval)} "
                              f"({rep.verdict} at {rep.witness})", rep.witness, name)


# ---------------------------------------------------------------------------
# positivity

def positivity_check(P: Poly4, interval: Sequence, samples: int = 2048) -> PositivityReport:
    """Sign of P on the open interval (a, b).

    Rational input is decided exactly with Sturm sequences; float input by
    polynomial root isolation plus sampling at Chebyshev nodes.
    """
    a, b = interval
    if P.is_exact() and is_exact(a, b):
        return _positivity_exact(P, Fraction(a), Fraction(b))
    return _positivity_float(P, float(a), float(b), samples)


def _positivity_exact(P: Poly4, a: Fraction, b: Fraction) -> PositivityReport:
    z = sp.Symbol("z")
    poly = sp.Poly([to_sympy(c) for c in reversed(P.coeffs)], z)
    if poly.is_zero:
        return PositivityReport("vanishes", float((a + b) / 2), (a, b), "sturm")
    A_, B_ = to_sympy(a), to_sympy(b)
    # count_roots works on the closed interval via Sturm sequences
    inside = poly.count_roots(A_, B_) - int(poly.eval(A_) == 0) - int(poly.eval(B_) == 0)
    if inside == 0:
        mid = poly.eval((A_ + B_) / 2)
        verdict = "positive" if mid > 0 else "negative"
        return PositivityReport(verdict, None if mid > 0 else float((a + b) / 2), (a, b), "sturm")
    roots = sorted({r for r in sp.real_roots(poly) if A_ < r < B_}, key=lambda r: float(r))
    cuts = [A_] + roots + [B_]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        t = sp.nsimplify((float(lo) + float(hi)) / 2, rational=True)
        if not lo < t < hi:
            t = (lo + hi) / 2
        if poly.eval(t) < 0:
            return PositivityReport("negative", float(t), (a, b), "sturm")
    return PositivityReport("vanishes", float(roots[0]), (a, b), "sturm")


def _positivity_float(P: Poly4, a: float, b: float, samples: int) -> PositivityReport:
    c = np.array([float(v) for v in P.coeffs])
    scale = max(np.max(np.abs(c)), 1e-300)
    if np.max(np.abs(c)) == 0:
        return PositivityReport("vanishes", (a + b) / 2, (a, b), "sampling")
    k = np.arange(samples)
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * (k + 0.5) / samples)
    vals = np.polynomial.polynomial.polyval(nodes, c)
    if np.any(vals < 0):
        i = int(np.argmin(vals))
        return PositivityReport("negative", float(nodes[i]), (a, b), "sampling")
    trimmed = np.trim_zeros(c, "b")
    roots = np.roots(trimmed[::-1]) if len(trimmed) > 1 else np.array([])
    width = b - a
    for r in roots:
        if abs(r.imag) <= 1e-7 * max(1.0, abs(r.real)) and a + 1e-7 * width < r.real < b - 1e-7 * width:
            return PositivityReport("vanishes", float(r.real), (a, b), "sampling")
    # near-double roots hide between samples; the derivative bound catches them
    dvals = np.abs(np.polynomial.polynomial.polyval(nodes, np.polynomial.polynomial.polyder(c)))
    h = np.pi * width / (2 * samples)
    interior = (nodes > a + 0.05 * width) & (nodes < b - 0.05 * width)
    if np.any(interior & (vals - dvals * h <= 1e-14 * scale)):
        i = int(np.argmin(np.where(interior, vals, np.inf)))
        return PositivityReport("vanishes", float(nodes[i]), (a, b), "sampling")
    return PositivityReport("positive", None, (a, b), "sampling")


# ---------------------------------------------------------------------------
# product and Calabi types

def solve_product(bnd: AmbitoricBoundary, f: AffinePoly2, tol: float = DEFAULT_TOL,
                  require_positive: bool = True) -> AmbitoricSolution:
    """Product type, H = diag(A(mu1), B(mu2)), with f depending on one momentum only.

    The factor along the variable f depends on has degree <= 4, the other
    degree <= 2. Writing f = f1 (t) with t the shifted variable, the
    constraints are t-coefficient a1 = 0 and a2 = -b2. Constant f gives the
    cscK product with both factors of degree <= 2.
    """
    f = f if isinstance(f, AffinePoly2) else AffinePoly2(*f)
    if f.f1 != 0 and f.f2 != 0:
        raise ValueError("product type needs f depending on at most one momentum")
    axis = None if f.is_constant() else (0 if f.f1 != 0 else 1)
    if axis == 0 and not all(f(a, 0) > 0 for a in bnd.alphas):
        raise NotPositive("f is not positive on the x interval", None, "f")
    if axis == 1 and not all(f(0, b) > 0 for b in bnd.betas):
        raise NotPositive("f is not positive on the y interval", None, "f")
    if axis is None and not f.f0 > 0:
        raise NotPositive("f is not positive", None, "f")
    exact = _is_exact_all(bnd, f)
    zero = Fraction(0) if exact else 0.0

    def split(v):
        # unknowns: the quartic factor (5 coefficients) then the quadric factor (3)
        quart = Poly4(v[:5])
        quad = Poly4(list(v[5:8]) + [zero, zero])
        return (quart, quad) if axis != 1 else (quad, quart)

    def equations(v):
        A, B = split(v)
        eqs = _boundary_equations(A, B, bnd)
        if axis is None:
            quart = Poly4(v[:5])
            eqs += [quart.coeffs[3], quart.coeffs[4]]
        else:
            quart, quad = Poly4(v[:5]), Poly4(list(v[5:8]) + [zero, zero])
            s = f.f0 / (f.f1 if axis == 0 else f.f2)
            shifted = _taylor_shift(quart, s)
            eqs += [shifted.coeffs[1], shifted.coeffs[2] + quad.coeffs[2]]
        return eqs

    sol, res, rank = _solve(equations, 8, exact, tol)
    A, B = split(sol)
    ans = ProductAnsatz(A, B, f, axis)
    pos = _positivity(A, B, bnd)
    if require_positive:
        _require_positive(pos)
    return AmbitoricSolution(ans, bnd, res, pos, _scalar_constant(ans), rank)


def solve_calabi(bnd: AmbitoricBoundary, alpha=None, tol: float = DEFAULT_TOL,
                 require_positive: bool = True) -> AmbitoricSolution:
    """Calabi type with momenta (x, x y) and f = x + alpha (f = 1 when alpha is None).

    Constraints, with A written in the variable t = x + alpha:
    a2 = -b2 and 2 a0 = -alpha a1. The constant-f limit needs a4 = 0 and
    a2 = -b2 in x itself.
    """
    if not bnd.alpha0 > 0:
        raise ValueError("Calabi type needs 0 < alpha0")
    if alpha is not None:
        alpha = to_scalar(alpha)
        if not all(a + alpha > 0 for a in bnd.alphas):
            raise NotPositive("x + alpha is not positive on the x interval", None, "f")
    exact = _is_exact_all(bnd, alpha)
    zero = Fraction(0) if exact else 0.0

    def split(v):
        return Poly4(v[:5]), Poly4(list(v[5:8]) + [zero, zero])

    def equations(v):
        A, B = split(v)
        eqs = _boundary_equations(A, B, bnd)
        if alpha is None:
            eqs += [A.coeffs[4], A.coeffs[2] + B.coeffs[2]]
        else:
            t = _taylor_shift(A, alpha).coeffs
            eqs += [t[2] + B.coeffs[2], 2 * t[0] + alpha * t[1]]
        return eqs

    sol, res, rank = _solve(equations, 8, exact, tol)
    A, B = split(sol)
    ans = CalabiAnsatz(A, B, alpha)
    pos = _positivity(A, B, bnd)
    if require_positive:
        _require_positive(pos)
    return AmbitoricSolution(ans, bnd, res, pos, _scalar_constant(ans), rank)


# ---------------------------------------------------------------------------
# regular type

def default_basis(q: Quadric, orientation: str = "+") -> tuple:
    """A basis completing q: (w1, w2) for '+', (p1, p2) = (1/2){q, w_i} for '-'.

    The pair is taken from {1, 2z, z^2} to maximize |det(q, w1, w2)|.
    """
    std = [Quadric(1, 0, 0), Quadric(0, 1, 0), Quadric(0, 0, 1)]
    best, best_det = None, -1.0
    for i, j in itertools.combinations(range(3), 2):
        m = [q.vector(), std[i].vector(), std[j].vector()]
        d = abs(float(np.linalg.det(np.array([[float(c) for c in row] for row in m]))))
        if d > best_det + 1e-12:
            best, best_det = (std[i], std[j]), d
    if best_det <= 1e-14:
        raise ValueError("q must be nonzero")
    if orientation == "+":
        return best
    return tuple(ad_half(q, w) for w in best)


def balanced_basis(q: Quadric, bnd: AmbitoricBoundary, orientation: str = "+",
                   max_denominator: int = 64) -> tuple:
    """A basis in which the induced quadrilateral is roughly isotropic.

    The default basis is composed with the inverse square root of the
    covariance of the four corner images, rounded to small rationals so exact
    input stays exact.
    """
    base = default_basis(q, orientation)
    ans = RegularAnsatz(q, q, Quadric(), Poly4([0]), orientation, base)
    tr = moment_transform(q.to_float(), tuple(b.to_float() for b in
                                              (base if orientation == "+" else ans.p_basis)), orientation)
    pts = np.array([tr(float(a), float(b)) for a, b in bnd.corners()])
    cov = np.cov(pts.T)
    evals, evecs = np.linalg.eigh(cov)
    M = evecs @ np.diag(1.0 / np.sqrt(np.maximum(evals, 1e-300))) @ evecs.T
    Mr = [[Fraction(float(v)).limit_denominator(max_denominator) for v in row] for row in M]
    if Mr[0][0] * Mr[1][1] - Mr[0][1] * Mr[1][0] == 0:
        return base
    if not q.is_exact():
        Mr = [[float(v) for v in row] for row in Mr]
    return tuple(base[0].scale(Mr[i][0]) + base[1].scale(Mr[i][1]) for i in range(2))


def _p_coords(ans: RegularAnsatz, target: Quadric) -> list:
    """Coordinates of an element of the complement of q in the basis (p1, p2)."""
    p1, p2 = ans.p_basis
    # the third basis vector q is never needed: target is orthogonal to q
    coords = coords_in_basis(target, [p1, p2, ans.q if inner(ans.q, ans.q) != 0 else _complement(ans)])
    return coords[:2]


def _complement(ans: RegularAnsatz) -> Quadric:
    """A quadric completing (p1, p2) to a basis, used when q is null."""
    p1, p2 = ans.p_basis
    for w in (Quadric(1, 0, 0), Quadric(0, 1, 0), Quadric(0, 0, 1)):
        m = np.array([[float(c) for c in v.vector()] for v in (p1, p2, w)])
        if abs(np.linalg.det(m)) > 1e-12:
            return w
    raise ValueError("degenerate basis")


def _w_coords(ans: RegularAnsatz, target: Quadric) -> list:
    """Coordinates of target in the basis (q, w1, w2), i.e. the affine function target(x,y)/q(x,y)."""
    w1, w2 = ans.basis
    return coords_in_basis(target, [ans.q, w1, w2])


def killing_potential(ans) -> AffinePoly2:
    """The Killing potential f of the ansatz as an affine function of the momenta."""
    if ans.kind in ("product", "calabi"):
        return ans.f
    if ans.orientation == "+":
        return AffinePoly2(*_w_coords(ans, ans.p))
    if inner(ans.p, ans.q) != 0 and abs(float(inner(ans.p, ans.q))) > 1e-12:
        raise ValueError("for the '-' orientation p must be orthogonal to q")
    c = _p_coords(ans, ans.p)
    return AffinePoly2(0 * c[0], c[0], c[1])


def _normal(q: Quadric, z) -> Quadric:
    """p_z(t) = q(z, t)(t - z)."""
    a = q.q2 * z + q.q1
    b = q.q1 * z + q.q0
    return Quadric.from_coeffs([-z * b, b - z * a, a])


def _regular_labels(ans: RegularAnsatz, bnd: AmbitoricBoundary) -> list:
    """Affine functions ell_alpha, ell_beta (zero on x = alpha, y = beta), oriented like alpha - x, beta - y."""
    q = ans.q
    out = []
    if ans.orientation == "+":
        for z, sign in ((bnd.alpha0, 1), (bnd.alpha_inf, 1), (bnd.beta0, -1), (bnd.beta_inf, -1)):
            sq = Quadric(z * z, -z, 1)  # (t - z)^2
            out.append(AffinePoly2(*_w_coords(ans, sq)).scale(sign))
        return out
    half_q = lambda z: q(z) / 2
    for z, side in ((bnd.alpha0, 1), (bnd.alpha_inf, 1), (bnd.beta0, -1), (bnd.beta_inf, -1)):
        c = _p_coords(ans, _normal(q, z))
        out.append(-AffinePoly2(side * half_q(z), c[0], c[1]))
    return out


def _ell(ans, bnd: AmbitoricBoundary) -> list:
    if ans.kind == "product":
        return [AffinePoly2(a, -1, 0) for a in bnd.alphas] + [AffinePoly2(b, 0, -1) for b in bnd.betas]
    if ans.kind == "calabi":
        return [AffinePoly2(a * a, -a, 0) for a in bnd.alphas] + [AffinePoly2(0, b, -1) for b in bnd.betas]
    return _regular_labels(ans, bnd)


def induced_polytope(ans, bnd: AmbitoricBoundary) -> LabelledPolytope:
    """The labelled quadrilateral with labels ell / r."""
    ells = _ell(ans, bnd)
    rs = list(bnd.r_alpha) + list(bnd.r_beta)
    labels = [l.scale(1 / r if not isinstance(r, Rational) else Fraction(1) / r) for l, r in zip(ells, rs)]
    return from_facets(labels, name=f"{ans.kind} quadrilateral")


def solve_regular(bnd: AmbitoricBoundary, q: Quadric, p: Quadric, orientation: str = "+",
                  basis: tuple | None = None, tol: float = DEFAULT_TOL,
                  require_positive: bool = True) -> AmbitoricSolution:
    """Solve for (R, rho) from the boundary conditions and the Einstein-Maxwell constraints.

    Unknowns: five coefficients of R and three of rho. Equations: <rho, p> = 0,
    <(p, R)^(2), q> = 0 and the eight boundary conditions on A = p rho + R,
    B = p rho - R.
    """
    bnd.check_regular()
    if _corner_min(q, bnd) <= 0:
        raise NotPositive("q(x, y) is not positive on the rectangle", None, "q")
    exact = _is_exact_all(bnd, q, p)

    def unpack(v):
        return Poly4(v[:5]), Quadric(*v[5:8])

    def equations(v):
        R, rho = unpack(v)
        A, B = p * rho + R, p * rho - R
        return [inner(rho, p), inner(transvectant2(p, R), q)] + _boundary_equations(A, B, bnd)

    sol, res, rank = _solve(equations, 8, exact, tol)
    R, rho = unpack(sol)
    ans = RegularAnsatz(q, p, rho, R, orientation, basis)
    pos = _positivity(ans.A, ans.B, bnd)
    if require_positive:
        # A and B first, so that a sign change is reported with its abscissa
        _require_positive(pos)
    if _corner_min(p, bnd) <= 0:
        raise NotPositive("p(x, y) is not positive on the rectangle", None, "p")
    return AmbitoricSolution(ans, bnd, res, pos, _regular_constant(ans), rank)


# ---------------------------------------------------------------------------
# moment maps and H fields

def moment_transform(q: Quadric, basis: Sequence[Quadric], orientation: str = "+") -> Callable:
    """(x, y) -> (mu1, mu2): w_i(x,y)/q(x,y) for '+', p_i(x,y)/(x - y) for '-'."""

    def transform(x, y):
        if orientation == "+":
            den = q.polar(x, y)
            if np.any(np.asarray(den) == 0):
                raise CoordinateSingularity("q(x, y) vanishes")
        else:
            den = x - y
            if np.any(np.asarray(den) == 0):
                raise CoordinateSingularity("x = y")
        return basis[0].polar(x, y) / den, basis[1].polar(x, y) / den

    return transform


def _sym(v):
    return to_sympy(v) if isinstance(v, Rational) else sp.Float(float(v), 17)


def _sym_poly(P: Poly4, z):
    return sum(_sym(c) * z ** k for k, c in enumerate(P.coeffs))


def _sym_quad(Q: Quadric, z):
    return _sym_poly(Q.to_poly4(), z)


def _sym_polar(Q: Quadric, x, y):
    return _sym(Q.q2) * x * y + _sym(Q.q1) * (x + y) + _sym(Q.q0)


def _xy_model(ans):
    """Sympy data (H in momentum indices, momentum map, f) in the coordinates (x, y)."""
    x, y = sp.symbols("x y", real=True)
    A, B = _sym_poly(ans.A, x), _sym_poly(ans.B, y)
    if ans.kind == "product":
        H = sp.Matrix([[A, 0], [0, B]])
        mu = (x, y)
    elif ans.kind == "calabi":
        H = sp.Matrix([[A, y * A], [y * A, x ** 2 * B + y ** 2 * A]]) / x
        mu = (x, x * y)
    else:
        ps = ans.p_basis
        qxy = _sym_polar(ans.q, x, y)
        den = (x - y) ** 3 * qxy if ans.orientation == "-" else (x - y) * qxy ** 3
        H = sp.Matrix(2, 2, lambda i, j: (A * _sym_quad(ps[i], y) * _sym_quad(ps[j], y)
                                          + B * _sym_quad(ps[i], x) * _sym_quad(ps[j], x)) / den)
        if ans.orientation == "+":
            mu = tuple(_sym_polar(w, x, y) / qxy for w in ans.basis)
        else:
            mu = tuple(_sym_polar(pi, x, y) / (x - y) for pi in ps)
    fa = killing_potential(ans)
    f = _sym(fa.f0) + _sym(fa.f1) * mu[0] + _sym(fa.f2) * mu[1]
    return (x, y), H, mu, f


def _quad_roots(a, b, c):
    """Both roots of a z^2 + b z + c (elementwise, real part of the discriminant)."""
    disc = np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(a != 0, (-b + disc) / (2 * a), -c / np.where(b != 0, b, np.nan))
        r2 = np.where(a != 0, (-b - disc) / (2 * a), r1)
    return r1, r2


def _rect_distance(X, Y, domain):
    if domain is None:
        return np.zeros_like(X)
    a0, a1 = (float(v) for v in domain.alphas)
    b0, b1 = (float(v) for v in domain.betas)
    dx = np.maximum(np.maximum(a0 - X, X - a1), 0.0)
    dy = np.maximum(np.maximum(b0 - Y, Y - b1), 0.0)
    return np.hypot(dx, dy)


def _inverse(ans, domain: AmbitoricBoundary | None = None) -> Callable:
    """Momenta (..., 2) -> coordinates (x, y) with x > y for the regular types.

    The '-' moment map can fold two coordinate pairs onto one momentum; the
    preimage closest to the ``domain`` rectangle is then returned.
    """
    if ans.kind == "product":
        return lambda mu: (mu[..., 0], mu[..., 1])
    if ans.kind == "calabi":
        def inv(mu):
            with np.errstate(divide="ignore", invalid="ignore"):
                return mu[..., 0], mu[..., 1] / mu[..., 0]
        return inv
    q = ans.q
    if ans.orientation == "+":
        # (x - z)(y - z)/q(x,y) = a_{t^2}(mu) - z a_{2t}(mu) + z^2 a_1(mu) vanishes at z = x, y
        aff = [np.array([float(c) for c in _w_coords(ans, w)])
               for w in (Quadric(1, 0, 0), Quadric(0, 1, 0), Quadric(0, 0, 1))]

        def inv(mu):
            ev = [a[0] + a[1] * mu[..., 0] + a[2] * mu[..., 1] for a in aff]
            r1, r2 = _quad_roots(ev[0], -ev[1], ev[2])
            return np.maximum(r1, r2), np.minimum(r1, r2)
        return inv

    # '-': (x - z) q(y, z)/(x - y) = q(z)/2 + c(z).mu and (y - z) q(x, z)/(x - y) = -q(z)/2 + c(z).mu
    cz = np.zeros((3, 2))
    for k, zval in enumerate((Fraction(0), Fraction(1), Fraction(-1))):
        cz[k] = [float(v) for v in _p_coords(ans, _normal(q, zval if q.is_exact() else float(zval)))]
    # c(z) = c0 + c1 z + c2 z^2 from its values at z = 0, 1, -1
    c0 = cz[0]
    c1 = (cz[1] - cz[2]) / 2
    c2 = (cz[1] + cz[2]) / 2 - cz[0]
    qc = [float(v) for v in q.coeffs()]
    transform = moment_transform(q.to_float(), tuple(b.to_float() for b in ans.p_basis), "-")

    def inv(mu):
        lin = [mu @ c for c in (c0, c1, c2)]
        xs = _quad_roots(qc[2] / 2 + lin[2], qc[1] / 2 + lin[1], qc[0] / 2 + lin[0])
        ys = _quad_roots(-qc[2] / 2 + lin[2], -qc[1] / 2 + lin[1], -qc[0] / 2 + lin[0])
        best_x = best_y = None
        best = None
        for X in xs:
            for Y in ys:
                with np.errstate(divide="ignore", invalid="ignore"):
                    m1, m2 = transform(X, Y) if np.all(X != Y) else (np.full_like(X, np.nan),) * 2
                err = np.hypot(m1 - mu[..., 0], m2 - mu[..., 1])
                scale = 1.0 + np.hypot(mu[..., 0], mu[..., 1])
                # exact preimages are ranked by their distance to the rectangle
                err = np.where(err <= 1e-8 * scale, 1e-8 * scale + _rect_distance(X, Y, domain), 1.0 + err)
                err = np.where((X > Y) & np.isfinite(err), err, np.inf)
                if best is None:
                    best, best_x, best_y = err, X, Y
                else:
                    take = err < best
                    best = np.where(take, err, best)
                    best_x = np.where(take, X, best_x)
                    best_y = np.where(take, Y, best_y)
        return best_x, best_y
    return inv


def _singular(ans) -> Callable | None:
    if ans.kind == "calabi":
        return lambda X, Y: np.asarray(X) == 0
    if ans.kind == "regular":
        return lambda X, Y: ~np.isfinite(X) | ~np.isfinite(Y) | (np.asarray(X) == np.asarray(Y))
    return None


def h_field(ans, basis: Sequence[Quadric] | None = None,
            domain: AmbitoricBoundary | None = None) -> HField:
    """Closed-form H of the ansatz in momentum coordinates, with first and second derivatives.

    ``domain`` (the compactification rectangle) selects the branch of the
    inverse moment map where it is not unique.
    """
    if basis is not None and ans.kind == "regular":
        ans = replace(ans, basis=tuple(basis))
    xy, H, mu, _ = _xy_model(ans)
    return sympy_hfield(H, mu, xy, _inverse(ans, domain), name=f"{ans.kind} ambitoric",
                        singular=_singular(ans))


# ---------------------------------------------------------------------------
# scalar curvature

@dataclass
class EMScalar:
    s_tilde: Callable
    is_constant: bool
    c: object


def _scalar_expr(ans):
    """Sympy expression of -f^5 sum_ij (H_ij / f^3)_{,ij} in (x, y)."""
    (x, y), H, mu, f = _xy_model(ans)
    Jm = sp.Matrix([[sp.diff(mu[i], v) for v in (x, y)] for i in range(2)])
    M = Jm.inv()

    def D(e, i):
        return M[0, i] * sp.diff(e, x) + M[1, i] * sp.diff(e, y)

    total = sum(D(D(H[i, j] / f ** 3, i), j) for i in range(2) for j in range(2))
    return (x, y), -f ** 5 * total


def _scalar_constant(ans):
    """The constant scalar curvature of a product or Calabi solution."""
    (x, y), expr = _scalar_expr(ans)
    if ans.kind == "product":
        pt = {x: sp.Rational(1, 3), y: sp.Rational(2, 7)}
    else:
        pt = {x: sp.Rational(5, 3), y: sp.Rational(2, 7)}
    val = sp.simplify(expr.subs(pt))
    if val.is_Rational:
        return Fraction(int(val.p), int(val.q))
    return float(val)


def em_scalar(ans, domain: AmbitoricBoundary | None = None) -> EMScalar:
    """Scalar curvature s of f^-2 g, as a function of the momenta.

    Regular type: s is constant exactly when {p, (p, R)^(2)} = kappa q, and
    then c = kappa (with {q, w} = q'w - w'q). The pointwise function always
    comes from the symbolic weighted Abreu operator.
    """
    (x, y), expr = _scalar_expr(ans)
    fn = sp.lambdify((x, y), expr, modules="numpy", cse=True)
    inv = _inverse(ans, domain)

    def s_tilde(mu):
        X, Y = inv(np.asarray(mu, dtype=float))
        return np.broadcast_to(np.asarray(fn(X, Y), dtype=float), np.shape(X))

    if ans.kind != "regular":
        return EMScalar(s_tilde, True, _scalar_constant(ans))
    num = poisson_bracket(ans.p, transvectant2(ans.p, ans.R))
    kappa, const = _proportional_to(num, ans.q)
    return EMScalar(s_tilde, const, kappa if const else None)


def _regular_constant(ans: RegularAnsatz):
    kappa, const = _proportional_to(poisson_bracket(ans.p, transvectant2(ans.p, ans.R)), ans.q)
    return kappa if const else None


def _proportional_to(a: Quadric, q: Quadric):
    """(k, True) when a = k q, else (None, False)."""
    av, qv = a.vector(), q.vector()
    i = max(range(3), key=lambda k: abs(float(qv[k])))
    k = av[i] / qv[i]
    if a.is_exact() and q.is_exact():
        ok = all(av[j] == k * qv[j] for j in range(3))
    else:
        scale = max(1.0, max(abs(float(v)) for v in av))
        ok = all(abs(float(av[j]) - float(k) * float(qv[j])) <= 1e-9 * scale for j in range(3))
    return (k, True) if ok else (None, False)


# ---------------------------------------------------------------------------
# duality

def duality_transform(qbar: Quadric, pi: Quadric, P: Poly4, bnd: AmbitoricBoundary | None = None,
                      basis: tuple | None = None) -> RegularAnsatz:
    """Einstein-Maxwell datum dual to the extremal datum (qbar, pi, P).

    The extremal metric has A = qbar pi + P, B = qbar pi - P and scalar
    curvature sbar = -{qbar, (qbar, P)^(2)}(x,y)/qbar(x,y). The dual keeps A, B
    and uses p = qbar, q = -{qbar, (qbar, P)^(2)}, so that f = p/q = 1/sbar.
    """
    q = -poisson_bracket(qbar, transvectant2(qbar, P))
    if q.is_zero():
        raise NonPositiveScalarCurvature("the extremal scalar curvature vanishes identically")
    if bnd is not None:
        if _corner_min(qbar, bnd) <= 0:
            raise ValueError("qbar(x, y) must be positive on the rectangle")
        if _corner_min(q, bnd) <= 0:
            raise NonPositiveScalarCurvature("the extremal scalar curvature is not positive on the rectangle")
    ans = RegularAnsatz(q, qbar, pi, P, "+", basis)
    assert not (q.is_exact() and qbar.is_exact()) or inner(ans.p, ans.q) == 0
    return ans


def inverse_duality(ans: RegularAnsatz) -> tuple:
    """Extremal datum (qbar, pi, P) = (p, rho, R) of an Einstein-Maxwell ansatz."""
    return ans.p, ans.rho, ans.R
