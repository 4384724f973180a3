"""Weighted Futaki invariant, extremal affine function, vanishing-f search,
crease stability scan and the relative K-energy (dimension m = 2)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .algebra import AffinePoly2
from .errors import NoConvergence, NonPositiveDefinite, NonPositiveWeight, SingularGram
from .linalg import solve_square
from .polytope import LabelledPolytope, from_facets, split_by_crease
from .quadrature import (DEFAULT_ORDER, DEFAULT_TOL, FixedRule, Integrand, duffy_rule,
                         gauss_legendre_01, integrate_boundary, integrate_boundary_exact,
                         integrate_exact, integrate_interior, integrate_segment)

MONOMIALS = ((0, 0), (1, 0), (0, 1))


def _check_positive(poly: LabelledPolytope, f: AffinePoly2) -> None:
    if min(float(f(float(v[0]), float(v[1]))) for v in poly.vertices) <= 0:
        raise NonPositiveWeight("f must be positive on the polygon")


def _use_exact(poly: LabelledPolytope, f: AffinePoly2) -> bool:
    return poly.exact and f.is_exact() and f.is_constant()


@dataclass
class Moments:
    """B_a = int_boundary e_a f^-3 d(sigma) and I_a = int e_a f^-5 d(mu), e = (1, mu1, mu2)."""

    B: list
    I: list
    B_err: list
    I_err: list
    exact: bool = False

    @property
    def c(self):
        return 2 * self.B[0] / self.I[0]

    @property
    def c_err(self) -> float:
        c = float(self.c)
        return abs(c) * (self.B_err[0] / abs(float(self.B[0])) + self.I_err[0] / abs(float(self.I[0])))

    def futaki(self, phi: AffinePoly2):
        v = phi.vector()
        c = self.c
        return 2 * sum(a * b for a, b in zip(v, self.B)) - c * sum(a * b for a, b in zip(v, self.I))

    def futaki_err(self, phi: AffinePoly2) -> float:
        v = [abs(float(a)) for a in phi.vector()]
        c = abs(float(self.c))
        absI = sum(a * abs(float(b)) for a, b in zip(v, self.I))
        return (2 * sum(a * b for a, b in zip(v, self.B_err)) + c * sum(a * b for a, b in zip(v, self.I_err))
                + self.c_err * absI)


def moments(poly: LabelledPolytope, f: AffinePoly2, tol: float = DEFAULT_TOL,
            order: int = DEFAULT_ORDER) -> Moments:
    _check_positive(poly, f)
    if _use_exact(poly, f):
        f0 = Fraction(f.f0)
        B = [integrate_boundary_exact(poly, {e: 1}) / f0 ** 3 for e in MONOMIALS]
        I = [integrate_exact(poly, {e: 1}) / f0 ** 5 for e in MONOMIALS]
        return Moments(B, I, [0.0] * 3, [0.0] * 3, exact=True)
    B, I, Be, Ie = [], [], [], []
    for e in MONOMIALS:
        v, err = integrate_boundary(poly, Integrand({e: 1}, f, 3), tol, order, return_error=True)
        B.append(v)
        Be.append(err)
        v, err = integrate_interior(poly, Integrand({e: 1}, f, 5), tol, order, return_error=True)
        I.append(v)
        Ie.append(err)
    return Moments(B, I, Be, Ie)


def c_const(poly: LabelledPolytope, f: AffinePoly2, tol: float = DEFAULT_TOL, **kw):
    """c = 2 int_boundary f^-3 d(sigma) / int f^-5 d(mu)."""
    return moments(poly, f, tol, **kw).c


def futaki_affine(poly: LabelledPolytope, f: AffinePoly2, phi: AffinePoly2,
                  tol: float = DEFAULT_TOL, **kw):
    """F(phi) = 2 int_boundary phi f^-3 d(sigma) - c int phi f^-5 d(mu)."""
    return moments(poly, f, tol, **kw).futaki(phi)


def _gram(poly: LabelledPolytope, f: AffinePoly2, tol: float, order: int, exact: bool):
    G = [[None] * 3 for _ in range(3)]
    for a in range(3):
        for b in range(a, 3):
            e = (MONOMIALS[a][0] + MONOMIALS[b][0], MONOMIALS[a][1] + MONOMIALS[b][1])
            if exact:
                val = integrate_exact(poly, {e: 1}) / Fraction(f.f0) ** 5
            else:
                val = integrate_interior(poly, Integrand({e: 1}, f, 5), tol, order)
            G[a][b] = G[b][a] = val
    return G


def extremal_affine(poly: LabelledPolytope, f: AffinePoly2, tol: float = DEFAULT_TOL,
                    order: int = DEFAULT_ORDER, mom: Moments | None = None) -> AffinePoly2:
    """The affine zeta with int zeta psi f^-5 = 2 int_boundary psi f^-3 for all affine psi."""
    mom = mom or moments(poly, f, tol, order)
    G = _gram(poly, f, tol, order, mom.exact)
    rhs = [2 * b for b in mom.B]
    if not mom.exact:
        cond = np.linalg.cond(np.array(G, dtype=float))
        if not np.isfinite(cond) or cond > 1e14:
            raise SingularGram(f"Gram matrix is singular (condition number {cond:.3g})")
    try:
        z = solve_square(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularGram(str(exc)) from exc
    return AffinePoly2(*z)


@dataclass
class FutakiReport:
    c: object
    F_mu1: object
    F_mu2: object
    extremal_affine: AffinePoly2
    c_err: float
    F_mu1_err: float
    F_mu2_err: float
    F_one: float

    def vanishes(self, tol: float = 1e-7) -> bool:
        return abs(float(self.F_mu1)) < tol and abs(float(self.F_mu2)) < tol


def futaki_report(poly: LabelledPolytope, f: AffinePoly2, tol: float = DEFAULT_TOL,
                  order: int = DEFAULT_ORDER) -> FutakiReport:
    mom = moments(poly, f, tol, order)
    F_one = float(mom.futaki(AffinePoly2(1)))
    if abs(F_one) > 1e-9:
        raise AssertionError(f"self-test failed: F(1) = {F_one}")
    zeta = extremal_affine(poly, f, tol, order, mom)
    e1, e2 = AffinePoly2(0, 1, 0), AffinePoly2(0, 0, 1)
    return FutakiReport(mom.c, mom.futaki(e1), mom.futaki(e2), zeta, mom.c_err,
                        mom.futaki_err(e1), mom.futaki_err(e2), F_one)


# ---------------------------------------------------------------------------
# creases

def futaki_crease(poly: LabelledPolytope, f: AffinePoly2, ell: AffinePoly2,
                  tol: float = DEFAULT_TOL, order: int = DEFAULT_ORDER, mom: Moments | None = None):
    """F(max(0, ell)) = 2 int_{boundary, ell > 0} ell f^-3 - c int_{ell >= 0} ell f^-5."""
    _check_positive(poly, f)
    vals = [float(ell(float(v[0]), float(v[1]))) for v in poly.vertices]
    mom = mom or moments(poly, f, tol, order)
    if min(vals) >= 0:
        return mom.futaki(ell)
    if max(vals) <= 0:
        return 0.0
    pos, _, _ = split_by_crease(poly, ell)
    outer = [j for j, o in enumerate(pos.origin) if o >= 0]
    bd = integrate_boundary(pos, Integrand(ell, f, 3), tol, order, facets=outer)
    inner = integrate_interior(pos, Integrand(ell, f, 5), tol, order)
    return 2 * bd - float(mom.c) * inner


def futaki_crease_segment(poly: LabelledPolytope, f: AffinePoly2, ell: AffinePoly2,
                          H: Callable, tol: float = DEFAULT_TOL, order: int = DEFAULT_ORDER):
    """int_F H(d ell, d ell) f^-3 d(sigma) over the crease segment F = {ell = 0}."""
    _, _, seg = split_by_crease(poly, ell)
    dl = np.array([float(ell.f1), float(ell.f2)])

    def g(mu):
        h = np.asarray(H(mu))
        return np.einsum("...ij,i,j->...", h, dl, dl) / f(mu) ** 3

    return integrate_segment(seg, seg.density, g, tol, order)


def _clip(verts: np.ndarray, fid: list, n: np.ndarray, s: float):
    """Clip a convex polygon by <n, mu> - s >= 0; edge i runs from verts[i] to verts[i+1]."""
    out, ofid = [], []
    m = len(verts)
    vals = verts @ n - s
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        va, vb = vals[i], vals[(i + 1) % m]
        if va >= 0:
            out.append(a)
            ofid.append(fid[i] if vb >= 0 else fid[i])
            if vb < 0:
                out.append(a + (b - a) * (va / (va - vb)))
                ofid.append(-1)
        elif vb >= 0:
            out.append(a + (b - a) * (va / (va - vb)))
            ofid.append(fid[i])
    return np.array(out), ofid


class _CreaseEvaluator:
    """Fast fixed-order evaluation of F(max(0, ell)) used by the scan."""

    def __init__(self, poly: LabelledPolytope, f: AffinePoly2, c: float, order: int = 12, sub: int = 1):
        self.verts = poly.vertex_array()
        # edge i of the vertex cycle lies on facet fid[i]
        self.fid = []
        vs = poly.vertices
        for i in range(len(vs)):
            self.fid.append(next(j for j, e in enumerate(poly.edges) if e[0] == vs[i]))
        self.inv_norm = [1 / math.hypot(float(fc.u[0]), float(fc.u[1])) for fc in poly.facets]
        self.f = f
        self.c = c
        self.sub = sub
        self.st, self.w = duffy_rule(order)
        self.x, self.wx = gauss_legendre_01(order)

    def __call__(self, n: np.ndarray, s: float) -> float:
        verts, fid = _clip(self.verts, self.fid, n, s)
        f = self.f
        bd = 0.0
        for i in range(len(verts)):
            if fid[i] < 0:
                continue
            a, b = verts[i], verts[(i + 1) % len(verts)]
            pts = a + self.x[:, None] * (b - a)
            ell = pts @ n - s
            bd += np.linalg.norm(b - a) * self.inv_norm[fid[i]] * np.dot(self.wx, ell / f(pts) ** 3)
        cen = verts.mean(axis=0)
        tris = np.array([[cen, verts[i], verts[(i + 1) % len(verts)]] for i in range(len(verts))])
        for _ in range(self.sub):
            from .quadrature import _children
            tris = _children(tris)
        e1, e2 = tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]
        jac = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        pts = tris[:, 0, None, :] + self.st[None, :, 0:1] * e1[:, None, :] + self.st[None, :, 1:2] * e2[:, None, :]
        ell = pts @ n - s
        inner = float(np.sum(((ell / f(pts) ** 5) @ self.w) * jac))
        return 2 * bd - self.c * inner


@dataclass
class StabilityReport:
    verdict: str
    min_value: float
    witness: AffinePoly2 | None
    affine_futaki: tuple
    evaluated: int = 0
    notes: str = ""


def stability_scan(poly: LabelledPolytope, f: AffinePoly2, n_dir: int = 64, n_off: int = 64,
                   refine_rounds: int = 2, tol: float = DEFAULT_TOL,
                   affine_tol: float = 1e-7, crease_tol: float = 1e-10) -> StabilityReport:
    """Scan simple creases max(0, <n, mu> - s) for a negative Futaki value.

    A positive minimum is only evidence of polystability: the test family is
    a necessary one, never a sufficient one.
    """
    rep = futaki_report(poly, f, tol)
    F1, F2 = float(rep.F_mu1), float(rep.F_mu2)
    if abs(F1) > affine_tol or abs(F2) > affine_tol:
        wit = AffinePoly2(0, 1, 0) if abs(F1) >= abs(F2) else AffinePoly2(0, 0, 1)
        if float(rep.F_mu1 if wit.f1 else rep.F_mu2) > 0:
            wit = -wit
        return StabilityReport("unstable", -max(abs(F1), abs(F2)), wit, (F1, F2),
                               notes="affine Futaki invariant does not vanish")
    ev = _CreaseEvaluator(poly, f, float(rep.c))
    verts = poly.vertex_array()

    def offsets(n):
        h = verts @ n
        return float(h.min()), float(h.max())

    best = (math.inf, None, None)
    count = 0
    thetas = 2 * np.pi * np.arange(n_dir) / n_dir
    fracs = (np.arange(n_off) + 0.5) / n_off
    for th in thetas:
        n = np.array([math.cos(th), math.sin(th)])
        lo, hi = offsets(n)
        for fr in fracs:
            s = lo + fr * (hi - lo)
            v = ev(n, s)
            count += 1
            if v < best[0]:
                best = (v, th, fr)
    dth, dfr = 2 * np.pi / n_dir, 1.0 / n_off
    for _ in range(refine_rounds):
        _, th0, fr0 = best
        for th in th0 + dth * np.linspace(-1, 1, 9):
            n = np.array([math.cos(th), math.sin(th)])
            lo, hi = offsets(n)
            for fr in np.clip(fr0 + dfr * np.linspace(-1, 1, 9), 1e-3, 1 - 1e-3):
                v = ev(n, lo + fr * (hi - lo))
                count += 1
                if v < best[0]:
                    best = (v, th, fr)
        dth, dfr = dth / 4, dfr / 4
    v, th, fr = best
    n = np.array([math.cos(th), math.sin(th)])
    lo, hi = offsets(n)
    s = lo + fr * (hi - lo)
    wit = AffinePoly2(-s, n[0], n[1])
    # confirm the witness with adaptive quadrature
    val = float(futaki_crease(poly, f, wit, tol))
    if val < -crease_tol:
        verdict = "unstable"
    elif val > crease_tol:
        verdict = "polystable-evidence"
    else:
        verdict = "inconclusive"
    return StabilityReport(verdict, val, wit, (F1, F2), count,
                           notes="crease scan is a necessary test only")


def crease_value_fast(poly: LabelledPolytope, f: AffinePoly2, ell: AffinePoly2) -> float:
    """Fixed-order crease value as used inside stability_scan."""
    c = float(c_const(poly, f))
    norm = math.hypot(float(ell.f1), float(ell.f2))
    n = np.array([float(ell.f1), float(ell.f2)]) / norm
    return _CreaseEvaluator(poly, f, c)(n, -float(ell.f0) / norm) * norm


# ---------------------------------------------------------------------------
# vanishing-f search

def _positivity_region(poly: LabelledPolytope, centre: np.ndarray) -> LabelledPolytope:
    """{(a, b) : 1 + a (v - centre)_1 + b (v - centre)_2 > 0 for all vertices v}."""
    d = poly.vertex_array() - centre
    return from_facets([((float(x), float(y)), 1.0) for x, y in d], name="positivity")


class _VanishingSystem:
    """F(a, b) = (F(mu1), F(mu2)) for f = 1 + a X + b Y, X = mu - centre, on a fixed rule."""

    def __init__(self, poly: LabelledPolytope, centre: np.ndarray, level: int = 2, blevel: int = 2,
                 order: int = 10):
        rule = FixedRule(poly, order, level, blevel)
        self.centre = centre
        self.X = rule.nodes - centre
        self.bX = rule.bnodes - centre
        self.E = np.stack([np.ones(len(rule.nodes)), rule.nodes[:, 0], rule.nodes[:, 1]])
        self.bE = np.stack([np.ones(len(rule.bnodes)), rule.bnodes[:, 0], rule.bnodes[:, 1]])
        self.w = rule.weights
        self.bw = rule.bweights

    def __call__(self, ab: np.ndarray, jac: bool = True):
        ab = np.atleast_2d(ab)
        f = 1 + ab @ self.X.T
        bf = 1 + ab @ self.bX.T
        f5 = f ** -5 * self.w
        bf3 = bf ** -3 * self.bw
        B = bf3 @ self.bE.T
        I = f5 @ self.E.T
        c = 2 * B[:, 0] / I[:, 0]
        F = 2 * B[:, 1:] - c[:, None] * I[:, 1:]
        if not jac:
            return F, None
        J = np.zeros((len(ab), 2, 2))
        f6 = f5 / f
        bf4 = bf3 / bf
        for k in range(2):
            dB = -3 * (bf4 * self.bX[:, k]) @ self.bE.T
            dI = -5 * (f6 * self.X[:, k]) @ self.E.T
            dc = 2 * (dB[:, 0] * I[:, 0] - B[:, 0] * dI[:, 0]) / I[:, 0] ** 2
            J[:, :, k] = 2 * dB[:, 1:] - dc[:, None] * I[:, 1:] - c[:, None] * dI[:, 1:]
        return F, J


def _to_f(ab, centre) -> AffinePoly2:
    a, b = float(ab[0]), float(ab[1])
    return AffinePoly2(1 - a * centre[0] - b * centre[1], a, b)


def _normalize_f(f: AffinePoly2) -> AffinePoly2:
    if float(f.f0) > 0:
        return f.scale(1 / float(f.f0))
    return f


def find_vanishing_f(poly: LabelledPolytope, grid: int = 21, iters: int = 60,
                     tol: float = DEFAULT_TOL, dedupe: float = 1e-8,
                     accept: float = 1e-9) -> list:
    """All positive affine f (up to scale) with F(mu1) = F(mu2) = 0.

    Results are normalized to f0 = 1 whenever f0 > 0.
    """
    centre = poly.centroid()
    region = _positivity_region(poly, centre)
    sys_ = _VanishingSystem(poly, centre)
    rv = region.vertex_array()
    lo, hi = rv.min(axis=0), rv.max(axis=0)
    ga = np.linspace(lo[0], hi[0], grid + 2)[1:-1]
    gb = np.linspace(lo[1], hi[1], grid + 2)[1:-1]
    starts = np.stack(np.meshgrid(ga, gb, indexing="ij"), axis=-1).reshape(-1, 2)
    margin = lambda p: region.distance_to_boundary(p)
    starts = starts[margin(starts) > 0.02 * np.linalg.norm(hi - lo)]

    # damped Newton, all starts at once; only unfinished starts are re-evaluated
    x = starts.copy()
    F, J = sys_(x)
    active = np.ones(len(x), dtype=bool)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        Fa, Ja = F[idx], J[idx]
        det = Ja[:, 0, 0] * Ja[:, 1, 1] - Ja[:, 0, 1] * Ja[:, 1, 0]
        good = np.abs(det) > 1e-300
        active[idx[~good]] = False
        idx, Fa, Ja, det = idx[good], Fa[good], Ja[good], det[good]
        step = np.stack([-(Ja[:, 1, 1] * Fa[:, 0] - Ja[:, 0, 1] * Fa[:, 1]) / det,
                         -(-Ja[:, 1, 0] * Fa[:, 0] + Ja[:, 0, 0] * Fa[:, 1]) / det], axis=1)
        norm0 = np.linalg.norm(Fa, axis=1)
        t = np.ones(len(idx))
        moved = np.zeros(len(idx), dtype=bool)
        pending = np.arange(len(idx))
        for _ in range(30):
            cand = x[idx[pending]] + t[pending, None] * step[pending]
            inside = margin(cand) > 0
            Fc = np.full((len(pending), 2), np.inf)
            if inside.any():
                Fc[inside], _ = sys_(cand[inside], jac=False)
            better = np.linalg.norm(Fc, axis=1) < norm0[pending]
            x[idx[pending[better]]] = cand[better]
            moved[pending[better]] = True
            pending = pending[~better]
            if len(pending) == 0:
                break
            t[pending] /= 2
        active[idx[~moved]] = False
        upd = idx[moved]
        if len(upd):
            F[upd], J[upd] = sys_(x[upd])
            active[upd] = np.linalg.norm(F[upd], axis=1) > 1e-14
    cands = [p for p, v in zip(x, np.linalg.norm(F, axis=1)) if v < 1e-6]

    # one-dimensional scans along the axes through the centre
    for axis in (0, 1):
        other = 1 - axis
        ts = np.linspace(lo[axis], hi[axis], 401)[1:-1]
        pts = np.zeros((len(ts), 2))
        pts[:, axis] = ts
        inside = margin(pts) > 1e-9
        pts = pts[inside]
        if len(pts) < 2:
            continue
        Fv, _ = sys_(pts, jac=False)
        if np.max(np.abs(Fv[:, other])) > 1e-8 * max(1.0, np.max(np.abs(Fv[:, axis]))):
            continue
        g = Fv[:, axis]
        for i in range(len(g) - 1):
            if g[i] == 0 or g[i] * g[i + 1] < 0:
                def h(t, axis=axis):
                    p = np.zeros((1, 2))
                    p[0, axis] = t
                    return sys_(p, jac=False)[0][0, axis]
                t0 = brentq(h, pts[i, axis], pts[i + 1, axis], xtol=1e-14) if g[i] != 0 else pts[i, axis]
                p = np.zeros(2)
                p[axis] = t0
                cands.append(p)

    # polish with adaptive quadrature
    uniq = []
    for p in cands:
        if any(np.linalg.norm(p - q) < 1e-5 for q in uniq):
            continue
        uniq.append(np.array(p))
    results = []
    for p in uniq:
        p = _polish(poly, sys_, p, centre, tol)
        if p is None:
            continue
        if any(np.linalg.norm(p - q) < dedupe for q in results):
            continue
        f = _to_f(p, centre)
        mom = moments(poly, f, tol)
        err = max(abs(float(mom.futaki(AffinePoly2(0, 1, 0)))), abs(float(mom.futaki(AffinePoly2(0, 0, 1)))))
        if err < accept * max(1.0, float(mom.c)):
            results.append(p)
    fs = [_normalize_f(_to_f(p, centre)) for p in results]
    fs.sort(key=lambda g: (round(float(g.f1), 9), round(float(g.f2), 9)))
    return fs


def _polish(poly, sys_, p, centre, tol, iters: int = 12):
    region_dist = _positivity_region(poly, centre).distance_to_boundary
    for _ in range(iters):
        f = _to_f(p, centre)
        try:
            mom = moments(poly, f, tol)
        except (NoConvergence, NonPositiveWeight):
            return None
        F = np.array([float(mom.futaki(AffinePoly2(0, 1, 0))), float(mom.futaki(AffinePoly2(0, 0, 1)))])
        if np.linalg.norm(F) < 1e-14 * max(1.0, float(mom.c)):
            return p
        _, J = sys_(p)
        try:
            step = -np.linalg.solve(J[0], F)
        except np.linalg.LinAlgError:
            return None
        if np.linalg.norm(step) < 1e-15:
            return p
        q = p + step
        if region_dist(q[None, :])[0] <= 0:
            return None
        p = q
    return p


# ---------------------------------------------------------------------------
# K-energy

def inset_polygon(poly: LabelledPolytope, delta: float) -> LabelledPolytope:
    """{mu : distance to every facet line >= delta} (float geometry)."""
    fcs = []
    for fc in poly.facets:
        u = (float(fc.u[0]), float(fc.u[1]))
        fcs.append((u, float(fc.lam) - delta * math.hypot(*u)))
    return from_facets(fcs, name=f"{poly.name}[inset {delta:g}]")


def k_energy_relative(poly: LabelledPolytope, f: AffinePoly2, u, u_ref, margin: float | None = None,
                      tol: float = 1e-10, order: int = DEFAULT_ORDER):
    """F(u - u_ref) - int (log det Hess u - log det Hess u_ref) f^-3 d(mu).

    ``u`` and ``u_ref`` expose ``value(mu)`` and ``hessian(mu)``; values only
    matter through their difference.  The log term is integrated over the
    polygon inset by ``margin`` (default 0.05 diam); margin 0 uses all of it.
    """
    _check_positive(poly, f)
    if margin is None:
        margin = 0.05 * poly.diameter()
    mom = moments(poly, f, tol, order)
    c = float(mom.c)

    def diff(mu):
        return u.value(mu) - u_ref.value(mu)

    bd = integrate_boundary(poly, lambda mu: diff(mu) / f(mu) ** 3, tol, order)
    inner = integrate_interior(poly, lambda mu: diff(mu) / f(mu) ** 5, tol, order)
    fut = 2 * bd - c * inner
    region = poly if margin <= 0 else inset_polygon(poly, margin)

    def logdet(mu):
        hu = u.hessian(mu)
        hr = u_ref.hessian(mu)
        su, lu = np.linalg.slogdet(hu)
        sr, lr = np.linalg.slogdet(hr)
        if np.any(su <= 0) or np.any(sr <= 0):
            raise NonPositiveDefinite("Hessian sample is not positive definite")
        return (lu - lr) / f(mu) ** 3

    return fut - integrate_interior(region, logdet, tol, order)
