"""Labelled convex polygons, facet measures and crease subdivisions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .algebra import AffinePoly2, is_exact, to_scalar
from .errors import (DegenerateCrease, EmptyInterior, NonRationalNormal,
                     RedundantFacet, Unbounded)


def _det(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


@dataclass(frozen=True)
class Facet:
    """Label L(mu) = <u, mu> + lam, nonnegative on the polygon."""

    u: tuple
    lam: object

    def label(self) -> AffinePoly2:
        return AffinePoly2(self.lam, self.u[0], self.u[1])

    def __call__(self, mu):
        return self.label()(mu)


@dataclass(frozen=True)
class FacetMeasureDensity:
    index: int
    v0: tuple
    v1: tuple
    density: object

    def point(self, t):
        t = np.asarray(t, dtype=float)
        v0 = np.array([float(c) for c in self.v0])
        v1 = np.array([float(c) for c in self.v1])
        return v0 + t[..., None] * (v1 - v0)

    @property
    def total(self):
        return self.density


@dataclass
class LabelledPolytope:
    """A compact convex polygon {L_j >= 0} together with its labels.

    ``edges[j]`` is the counterclockwise-oriented pair of vertices of facet j.
    """

    facets: list
    vertices: list
    edges: list
    exact: bool
    name: str = ""
    origin: list = field(default_factory=list)
    m: int = 2

    @property
    def labels(self) -> list:
        return [fc.label() for fc in self.facets]

    def vertex_array(self) -> np.ndarray:
        return np.array([[float(c) for c in v] for v in self.vertices])

    def area(self):
        vs = self.vertices
        s = 0
        for i in range(len(vs)):
            s += _det(vs[i], vs[(i + 1) % len(vs)])
        return s / 2 if not self.exact else Fraction(s) / 2

    def centroid(self) -> np.ndarray:
        return self.vertex_array().mean(axis=0)

    def diameter(self) -> float:
        v = self.vertex_array()
        return float(max(np.linalg.norm(a - b) for a in v for b in v))

    def distance_to_boundary(self, mu) -> np.ndarray:
        """Euclidean distance to the boundary for points inside (negative outside)."""
        mu = np.asarray(mu, dtype=float)
        ds = []
        for fc in self.facets:
            u = np.array([float(c) for c in fc.u])
            ds.append((mu @ u + float(fc.lam)) / np.linalg.norm(u))
        return np.min(ds, axis=0)

    def contains(self, mu, tol: float = 0.0) -> np.ndarray:
        return self.distance_to_boundary(mu) >= -tol

    def interior_grid(self, n: int = 40, margin: float = 0.0) -> np.ndarray:
        """Points of a regular n x n bounding-box grid at distance >= margin from the boundary."""
        v = self.vertex_array()
        lo, hi = v.min(axis=0), v.max(axis=0)
        xs = np.linspace(lo[0], hi[0], n + 2)[1:-1]
        ys = np.linspace(lo[1], hi[1], n + 2)[1:-1]
        pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
        d = self.distance_to_boundary(pts)
        keep = d >= margin if margin > 0 else d > 0
        return pts[keep]

    def __repr__(self) -> str:
        return f"LabelledPolytope({self.name or 'unnamed'}, {len(self.facets)} facets)"


def _as_facet(item) -> Facet:
    if isinstance(item, Facet):
        return item
    if isinstance(item, AffinePoly2):
        return Facet((item.f1, item.f2), item.f0)
    u, lam = item
    u = tuple(to_scalar(c) for c in u)
    if len(u) != 2:
        raise ValueError("only planar polytopes are supported")
    return Facet(u, to_scalar(lam))


def _proportional(a: Facet, b: Facet, tol: float) -> bool:
    va = (a.u[0], a.u[1], a.lam)
    vb = (b.u[0], b.u[1], b.lam)
    # positive multiples define the same half-plane
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(va[i] * vb[j] - va[j] * vb[i]) > tol:
                return False
    return _dot(a.u, b.u) > 0


def from_facets(facets: Sequence, name: str = "", origin: Sequence | None = None) -> LabelledPolytope:
    """Build a polygon from labels given as (normal, offset) pairs or AffinePoly2."""
    fcs = [_as_facet(f) for f in facets]
    if len(fcs) < 3:
        raise Unbounded("at least three facets are needed for a compact polygon")
    exact = all(is_exact(fc.u[0], fc.u[1], fc.lam) for fc in fcs)
    scale = max(1.0, *(abs(float(c)) for fc in fcs for c in (*fc.u, fc.lam)))
    tol = 0 if exact else 1e-12 * scale
    for fc in fcs:
        if fc.u[0] == 0 and fc.u[1] == 0:
            raise ValueError("zero normal")

    # boundedness: consecutive distinct normal directions must turn by less than pi
    order = sorted(range(len(fcs)), key=lambda j: math.atan2(float(fcs[j].u[1]), float(fcs[j].u[0])))
    dirs = []
    for j in order:
        u = fcs[j].u
        if dirs and abs(_det(dirs[-1], u)) <= tol and _dot(dirs[-1], u) > 0:
            continue
        dirs.append(u)
    if len(dirs) >= 2 and abs(_det(dirs[-1], dirs[0])) <= tol and _dot(dirs[-1], dirs[0]) > 0:
        dirs.pop()
    if len(dirs) < 3:
        raise Unbounded("inward normals do not positively span the plane")
    for i in range(len(dirs)):
        if _det(dirs[i], dirs[(i + 1) % len(dirs)]) <= tol:
            raise Unbounded("inward normals do not positively span the plane")

    for i in range(len(fcs)):
        for j in range(i + 1, len(fcs)):
            if _proportional(fcs[i], fcs[j], tol):
                raise RedundantFacet(f"facets {i} and {j} define the same half-plane")

    verts = []
    for i in range(len(fcs)):
        for j in range(i + 1, len(fcs)):
            a, b = fcs[i], fcs[j]
            d = _det(a.u, b.u)
            if abs(d) <= tol:
                continue
            # solve <a.u, v> = -a.lam, <b.u, v> = -b.lam
            vx = (-a.lam * b.u[1] + b.lam * a.u[1]) / (Fraction(d) if exact else d)
            vy = (-b.lam * a.u[0] + a.lam * b.u[0]) / (Fraction(d) if exact else d)
            v = (vx, vy)
            if all(fc.u[0] * vx + fc.u[1] * vy + fc.lam >= -tol for fc in fcs):
                if not any(abs(v[0] - w[0]) <= tol and abs(v[1] - w[1]) <= tol for w in verts):
                    verts.append(v)
    if len(verts) < 3:
        raise EmptyInterior("the label inequalities cut out no open region")
    cx = sum(float(v[0]) for v in verts) / len(verts)
    cy = sum(float(v[1]) for v in verts) / len(verts)
    verts.sort(key=lambda v: math.atan2(float(v[1]) - cy, float(v[0]) - cx))
    area2 = sum(_det(verts[i], verts[(i + 1) % len(verts)]) for i in range(len(verts)))
    if area2 <= tol:
        raise EmptyInterior("the label inequalities cut out a degenerate region")

    def on(fc, v):
        return abs(fc.u[0] * v[0] + fc.u[1] * v[1] + fc.lam) <= tol

    edges = []
    for j, fc in enumerate(fcs):
        vs = [v for v in verts if on(fc, v)]
        if len(vs) != 2:
            raise RedundantFacet(f"label {j} does not support an edge")
        a, b = vs
        e = (b[0] - a[0], b[1] - a[1])
        # interior on the left of a counterclockwise edge
        if -e[1] * fc.u[0] + e[0] * fc.u[1] < 0:
            a, b = b, a
        edges.append((a, b))
    for v in verts:
        if sum(on(fc, v) for fc in fcs) != 2:
            raise RedundantFacet("more than two facets meet at a vertex")
    return LabelledPolytope(fcs, verts, edges, exact, name,
                            list(origin) if origin is not None else list(range(len(fcs))))


def facet_measure(poly: LabelledPolytope, j: int) -> FacetMeasureDensity:
    """Density of d(sigma) on facet j, fixed by dL_j ^ d(sigma) = -d(mu)."""
    fc = poly.facets[j]
    v0, v1 = poly.edges[j]
    e = (v1[0] - v0[0], v1[1] - v0[1])
    dens = abs(_det(fc.u, e)) / (Fraction(_dot(fc.u, fc.u)) if poly.exact else _dot(fc.u, fc.u))
    return FacetMeasureDensity(j, v0, v1, dens)


def boundary_measure(poly: LabelledPolytope):
    """Total d(sigma)-length of the boundary."""
    return sum(facet_measure(poly, j).density for j in range(len(poly.facets)))


@dataclass(frozen=True)
class CreaseSegment:
    """The segment F = {l = 0} inside the polygon, with its measure density."""

    v0: tuple
    v1: tuple
    density: object
    crease: AffinePoly2

    def point(self, t):
        return FacetMeasureDensity(-1, self.v0, self.v1, self.density).point(t)


@dataclass
class CreaseSplit:
    positive: LabelledPolytope
    negative: LabelledPolytope
    segment: CreaseSegment

    def __iter__(self):
        return iter((self.positive, self.negative, self.segment))


def split_by_crease(poly: LabelledPolytope, ell: AffinePoly2) -> CreaseSplit:
    """Split into {ell >= 0} and {ell <= 0}; the crease facet is the last label of each piece."""
    if not isinstance(ell, AffinePoly2):
        ell = AffinePoly2(*ell)
    if poly.exact and not ell.is_exact():
        ell_eval = lambda v: float(ell(float(v[0]), float(v[1])))
    else:
        ell_eval = lambda v: ell(v[0], v[1])
    vals = [ell_eval(v) for v in poly.vertices]
    scale = max(1.0, max(abs(float(x)) for x in vals))
    tol = 0 if (poly.exact and ell.is_exact()) else 1e-12 * scale
    if max(vals) <= tol or min(vals) >= -tol:
        raise DegenerateCrease("the crease line misses the interior of the polygon")

    def piece(sign):
        keep, origin = [], []
        for j, (a, b) in enumerate(poly.edges):
            va, vb = sign * ell_eval(a), sign * ell_eval(b)
            if max(va, vb) > tol:
                keep.append(poly.facets[j])
                origin.append(j)
        lab = ell if sign > 0 else -ell
        keep.append(Facet((lab.f1, lab.f2), lab.f0))
        origin.append(-1)
        return from_facets(keep, name=f"{poly.name}[{'+' if sign > 0 else '-'}]", origin=origin)

    pos, neg = piece(1), piece(-1)
    fm = facet_measure(pos, len(pos.facets) - 1)
    return CreaseSplit(pos, neg, CreaseSegment(fm.v0, fm.v1, fm.density, ell))


def _rationalize(x):
    if isinstance(x, Rational):
        return Fraction(x)
    fr = Fraction(float(x)).limit_denominator(10 ** 6)
    if abs(float(fr) - float(x)) > 1e-12 * max(1.0, abs(float(x))):
        raise NonRationalNormal(f"normal component {x!r} is not rational")
    return fr


@dataclass
class VertexReport:
    vertex: tuple
    facets: tuple
    integral: bool
    order: Fraction

    @property
    def smooth(self) -> bool:
        return self.integral and self.order == 1


@dataclass
class DelzantReport:
    vertices: list
    verdict: str


def delzant_check(poly: LabelledPolytope) -> DelzantReport:
    """Index of the lattice spanned by the two normals at each vertex."""
    normals = [tuple(_rationalize(c) for c in fc.u) for fc in poly.facets]
    reports = []
    n = len(poly.facets)
    for j in range(n):
        # the vertex shared by edge j (end) and the edge starting there
        v = poly.edges[j][1]
        k = next(i for i in range(n) if i != j and poly.edges[i][0] == v)
        a, b = normals[j], normals[k]
        integral = all(c.denominator == 1 for c in (*a, *b))
        reports.append(VertexReport(v, (j, k), integral, abs(_det(a, b))))
    verdict = "smooth" if all(r.smooth for r in reports) else "orbifold"
    return DelzantReport(reports, verdict)


def square(lam=1) -> LabelledPolytope:
    """[-1, 1]^2 with labels 1 - x, 1 + x, lam(1 - y), lam(1 + y)."""
    lam = to_scalar(lam)
    return from_facets([((-1, 0), 1), ((1, 0), 1), ((0, -lam), lam), ((0, lam), lam)],
                       name=f"square(lambda={lam})")


def wpp_simplex(a0, a1, a2) -> LabelledPolytope:
    """Unit simplex with labels a1 a2 (1 - mu1 - mu2), a0 a2 mu1, a0 a1 mu2."""
    a0, a1, a2 = (to_scalar(a) for a in (a0, a1, a2))
    return from_facets([((-a1 * a2, -a1 * a2), a1 * a2), ((a0 * a2, 0), 0), ((0, a0 * a1), 0)],
                       name=f"wpp({a0},{a1},{a2})")


def unit_simplex() -> LabelledPolytope:
    return wpp_simplex(1, 1, 1)


def rectangle(x0, x1, y0, y1) -> LabelledPolytope:
    """Axis-parallel rectangle with primitive labels."""
    return from_facets([((1, 0), -to_scalar(x0)), ((-1, 0), to_scalar(x1)),
                        ((0, 1), -to_scalar(y0)), ((0, -1), to_scalar(y1))], name="rectangle")
