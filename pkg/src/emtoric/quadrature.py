"""Quadrature of rational integrands phi / f^k over polygons, boundaries and segments.

Interior integrals use a centroid fan of triangles, each mapped from the square
by the Duffy transform and integrated with tensor Gauss-Legendre, refined by
adaptive quadrisection.  Facets and segments use adaptive 1D Gauss-Legendre.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Mapping

import numpy as np

from .algebra import AffinePoly2, to_scalar
from .errors import NoConvergence, NonPositiveWeight
from .polytope import CreaseSegment, LabelledPolytope, facet_measure

DEFAULT_TOL = 1e-10
DEFAULT_ORDER = 12
MAX_DEPTH = 12
MAX_DEGREE = 6
MAX_POWER = 7
# refinement gives up beyond this many active triangles instead of exhausting memory
MAX_ACTIVE = 8192
ROUNDOFF = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class Integrand:
    """phi(mu) / f(mu)^k with phi a bivariate polynomial given as {(i, j): coeff}."""

    numerator: tuple
    f: AffinePoly2
    k: int

    def __init__(self, numerator, f: AffinePoly2 | None = None, k: int = 0):
        if isinstance(numerator, AffinePoly2):
            terms = {(0, 0): numerator.f0, (1, 0): numerator.f1, (0, 1): numerator.f2}
        elif isinstance(numerator, Mapping):
            terms = dict(numerator)
        else:
            terms = {(0, 0): numerator}
        terms = {tuple(key): to_scalar(v) for key, v in terms.items() if v != 0}
        if any(i + j > MAX_DEGREE for i, j in terms):
            raise ValueError(f"numerator degree exceeds {MAX_DEGREE}")
        if not 0 <= k <= MAX_POWER:
            raise ValueError(f"power k must lie in 0..{MAX_POWER}")
        object.__setattr__(self, "numerator", tuple(sorted(terms.items())))
        object.__setattr__(self, "f", f if f is not None else AffinePoly2(1))
        object.__setattr__(self, "k", int(k))

    def numerator_value(self, mu: np.ndarray) -> np.ndarray:
        x, y = mu[..., 0], mu[..., 1]
        out = np.zeros(x.shape)
        for (i, j), c in self.numerator:
            out = out + float(c) * x ** i * y ** j
        return out

    def __call__(self, mu: np.ndarray) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        val = self.numerator_value(mu)
        if self.k:
            val = val / self.f(mu) ** self.k
        return val


def _check_weight(poly: LabelledPolytope, integrand) -> None:
    if isinstance(integrand, Integrand) and integrand.k > 0:
        vals = [integrand.f(float(v[0]), float(v[1])) for v in poly.vertices]
        if min(vals) <= 0:
            raise NonPositiveWeight("f must be positive at every vertex")


def _as_callable(integrand) -> Callable:
    if isinstance(integrand, Integrand):
        return integrand
    return lambda mu: np.asarray(integrand(mu), dtype=float) * np.ones(mu.shape[:-1])


@lru_cache(maxsize=None)
def gauss_legendre_01(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


@lru_cache(maxsize=None)
def duffy_rule(order: int):
    """Nodes (s, t) and weights on the reference triangle {s, t >= 0, s + t <= 1}."""
    x, w = gauss_legendre_01(order)
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    s = u.ravel()
    t = (v * (1 - u)).ravel()
    weights = (wu * wv * (1 - u)).ravel()
    return np.stack([s, t], axis=-1), weights


def _fan(poly: LabelledPolytope) -> np.ndarray:
    v = poly.vertex_array()
    c = v.mean(axis=0)
    n = len(v)
    return np.array([[c, v[i], v[(i + 1) % n]] for i in range(n)])


def _tri_quad(tris: np.ndarray, g: Callable, order: int):
    """Integral of g over each triangle, plus the integral of |g|."""
    st, w = duffy_rule(order)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    e1, e2 = b - a, c - a
    jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    pts = a[:, None, :] + st[None, :, 0:1] * e1[:, None, :] + st[None, :, 1:2] * e2[:, None, :]
    vals = g(pts)
    return (vals @ w) * jac, (np.abs(vals) @ w) * jac


def _children(tris: np.ndarray) -> np.ndarray:
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
    kids = np.stack([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ], axis=1)
    return kids.reshape(-1, 3, 2)


def _tri_areas(tris: np.ndarray) -> np.ndarray:
    a, b = tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]
    return np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]) / 2


def _adaptive_triangles(tris: np.ndarray, g: Callable, tol: float, order: int,
                        max_depth: int, abs_floor: float = 0.0):
    total_area = float(np.sum(_tri_areas(tris)))
    parent, absval = _tri_quad(tris, g, order)
    scale = max(float(np.sum(absval)), abs_floor)
    budget = tol * scale
    accepted, errors = [], []
    for _ in range(max_depth + 1):
        if len(tris) > MAX_ACTIVE:
            break
        kids = _children(tris)
        kid_vals, kid_abs = _tri_quad(kids, g, order)
        kid_sum = kid_vals.reshape(-1, 4).sum(axis=1)
        diff = np.abs(kid_sum - parent)
        area = _tri_areas(tris)
        # local share of the budget, floored at round-off of the local |g| integral
        noise = ROUNDOFF * kid_abs.reshape(-1, 4).sum(axis=1)
        local_tol = np.maximum(budget * area / total_area, noise) + 1e-300
        ok = diff <= local_tol
        accepted.extend(kid_sum[ok].tolist())
        errors.extend(diff[ok].tolist())
        # point singularities: stop once the whole unresolved remainder fits the budget
        if ok.all() or math.fsum(errors) + float(np.sum(diff[~ok])) <= budget:
            accepted.extend(kid_sum[~ok].tolist())
            errors.extend(diff[~ok].tolist())
            return math.fsum(accepted), math.fsum(errors)
        bad = ~ok
        tris = kids.reshape(-1, 4, 3, 2)[bad].reshape(-1, 3, 2)
        parent = kid_vals.reshape(-1, 4)[bad].ravel()
    raise NoConvergence(f"interior quadrature did not converge within depth {max_depth}")


def integrate_interior(poly: LabelledPolytope, integrand, tol: float = DEFAULT_TOL,
                       order: int = DEFAULT_ORDER, max_depth: int = MAX_DEPTH,
                       return_error: bool = False):
    """Integral of the integrand over the polygon with respect to d(mu)."""
    _check_weight(poly, integrand)
    val, err = _adaptive_triangles(_fan(poly), _as_callable(integrand), tol, order, max_depth)
    return (val, err) if return_error else val


def _adaptive_segment(p0: np.ndarray, p1: np.ndarray, g: Callable, tol: float,
                      order: int, max_depth: int, scale_hint: float = 0.0):
    x, w = gauss_legendre_01(order)

    def quad(a, b):
        # a, b: arrays of parameter intervals in [0, 1]
        t = a[:, None] + (b - a)[:, None] * x[None, :]
        pts = p0 + t[..., None] * (p1 - p0)
        vals = g(pts)
        return (vals @ w) * (b - a), (np.abs(vals) @ w) * (b - a)

    a, b = np.array([0.0]), np.array([1.0])
    parent, absval = quad(a, b)
    scale = max(float(absval.sum()), scale_hint)
    accepted, errors = [], []
    for _ in range(max_depth + 1):
        m = (a + b) / 2
        ka = np.stack([a, m], axis=1).ravel()
        kb = np.stack([m, b], axis=1).ravel()
        kv, kabs = quad(ka, kb)
        ksum = kv.reshape(-1, 2).sum(axis=1)
        diff = np.abs(ksum - parent)
        noise = ROUNDOFF * kabs.reshape(-1, 2).sum(axis=1)
        ok = diff <= np.maximum(tol * scale * (b - a), noise) + 1e-300
        accepted.extend(ksum[ok].tolist())
        errors.extend(diff[ok].tolist())
        if ok.all() or math.fsum(errors) + float(np.sum(diff[~ok])) <= tol * scale:
            accepted.extend(ksum[~ok].tolist())
            errors.extend(diff[~ok].tolist())
            return math.fsum(accepted), math.fsum(errors)
        bad = ~ok
        a = ka.reshape(-1, 2)[bad].ravel()
        b = kb.reshape(-1, 2)[bad].ravel()
        parent = kv.reshape(-1, 2)[bad].ravel()
    raise NoConvergence(f"segment quadrature did not converge within depth {max_depth}")


def integrate_segment(segment, density, integrand, tol: float = DEFAULT_TOL,
                      order: int = DEFAULT_ORDER, max_depth: int = MAX_DEPTH,
                      return_error: bool = False):
    """density * int_0^1 g(v0 + t (v1 - v0)) dt for a segment (v0, v1)."""
    if isinstance(segment, CreaseSegment):
        v0, v1 = segment.v0, segment.v1
    else:
        v0, v1 = segment
    p0 = np.array([float(c) for c in v0])
    p1 = np.array([float(c) for c in v1])
    val, err = _adaptive_segment(p0, p1, _as_callable(integrand), tol, order, max_depth)
    d = float(density)
    return (d * val, abs(d) * err) if return_error else d * val


def integrate_boundary(poly: LabelledPolytope, integrand, tol: float = DEFAULT_TOL,
                       order: int = DEFAULT_ORDER, max_depth: int = MAX_DEPTH,
                       return_error: bool = False, facets=None):
    """Integral over the boundary (or the listed facets) with respect to d(sigma)."""
    _check_weight(poly, integrand)
    g = _as_callable(integrand)
    idx = range(len(poly.facets)) if facets is None else facets
    vals, errs = [], []
    for j in idx:
        fm = facet_measure(poly, j)
        v, e = integrate_segment((fm.v0, fm.v1), fm.density, g, tol, order, max_depth, True)
        vals.append(v)
        errs.append(e)
    val, err = math.fsum(vals), math.fsum(errs)
    return (val, err) if return_error else val


# ---------------------------------------------------------------------------
# fixed rules for fast vectorized evaluation

class FixedRule:
    """Precomputed nodes and weights for repeated integration over one polygon.

    Interior: fan triangles uniformly quadrisected ``level`` times.
    Boundary: every facet split into 2**blevel pieces; weights include d(sigma).
    """

    def __init__(self, poly: LabelledPolytope, order: int = 12, level: int = 2, blevel: int = 2,
                 facets=None):
        tris = _fan(poly)
        for _ in range(level):
            tris = _children(tris)
        st, w = duffy_rule(order)
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        e1, e2 = b - a, c - a
        jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        pts = a[:, None, :] + st[None, :, 0:1] * e1[:, None, :] + st[None, :, 1:2] * e2[:, None, :]
        self.nodes = pts.reshape(-1, 2)
        self.weights = (jac[:, None] * w[None, :]).ravel()
        x, wx = gauss_legendre_01(order)
        n = 2 ** blevel
        bn, bw = [], []
        idx = range(len(poly.facets)) if facets is None else facets
        for j in idx:
            fm = facet_measure(poly, j)
            p0 = np.array([float(cc) for cc in fm.v0])
            p1 = np.array([float(cc) for cc in fm.v1])
            t = ((np.arange(n)[:, None] + x[None, :]) / n).ravel()
            bn.append(p0 + t[:, None] * (p1 - p0))
            bw.append(np.tile(wx / n, n) * float(fm.density))
        self.bnodes = np.concatenate(bn)
        self.bweights = np.concatenate(bw)


# ---------------------------------------------------------------------------
# exact integration of polynomials

def _lin_power(coeffs: tuple, n: int) -> dict:
    """(c0 l0 + c1 l1 + c2 l2)^n as {exponents: coeff}."""
    out = {(0, 0, 0): Fraction(1)}
    for _ in range(n):
        new = {}
        for e, v in out.items():
            for k in range(3):
                if coeffs[k] == 0:
                    continue
                e2 = list(e)
                e2[k] += 1
                e2 = tuple(e2)
                new[e2] = new.get(e2, 0) + v * coeffs[k]
        out = new
    return out


def _poly_mul_dict(a: dict, b: dict) -> dict:
    out = {}
    for ea, va in a.items():
        for eb, vb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + va * vb
    return out


def _terms(numerator) -> dict:
    if isinstance(numerator, Integrand):
        if numerator.k != 0 and not numerator.f.is_constant():
            raise ValueError("exact integration requires k = 0 or constant f")
        scale = Fraction(1)
        if numerator.k:
            scale = Fraction(numerator.f.f0) ** (-numerator.k)
        return {e: Fraction(c) * scale for e, c in numerator.numerator}
    if isinstance(numerator, AffinePoly2):
        return {(0, 0): Fraction(numerator.f0), (1, 0): Fraction(numerator.f1), (0, 1): Fraction(numerator.f2)}
    return {tuple(k): Fraction(v) for k, v in dict(numerator).items()}


def integrate_exact(poly: LabelledPolytope, numerator) -> Fraction:
    """Exact interior integral of a polynomial over a polygon with rational vertices."""
    if not poly.exact:
        raise ValueError("exact integration requires rational vertices")
    terms = _terms(numerator)
    vs = poly.vertices
    total = Fraction(0)
    for i in range(1, len(vs) - 1):
        A, B, C = vs[0], vs[i], vs[i + 1]
        area2 = abs((B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0]))
        for (p, q), c in terms.items():
            if c == 0:
                continue
            poly_l = _poly_mul_dict(_lin_power((A[0], B[0], C[0]), p), _lin_power((A[1], B[1], C[1]), q))
            s = Fraction(0)
            for (a, b, d), v in poly_l.items():
                s += v * Fraction(factorial(a) * factorial(b) * factorial(d), factorial(a + b + d + 2))
            total += c * area2 * s
    return total


def integrate_boundary_exact(poly: LabelledPolytope, numerator, facets=None) -> Fraction:
    """Exact d(sigma)-integral of a polynomial over the boundary."""
    if not poly.exact:
        raise ValueError("exact integration requires rational vertices")
    terms = _terms(numerator)
    total = Fraction(0)
    idx = range(len(poly.facets)) if facets is None else facets
    for j in idx:
        fm = facet_measure(poly, j)
        v0, v1 = fm.v0, fm.v1
        # mu(t) = v0 + t e, written in barycentric form (1 - t) v0 + t v1
        s = Fraction(0)
        for (p, q), c in terms.items():
            px = _poly_mul_dict(_lin_power((v0[0], v1[0], 0), p), _lin_power((v0[1], v1[1], 0), q))
            for (a, b, _), v in px.items():
                s += c * v * Fraction(factorial(a) * factorial(b), factorial(a + b + 1))
        total += fm.density * s
    return total
