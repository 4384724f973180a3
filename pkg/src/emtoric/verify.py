"""Independent checks of candidate metrics: modified Abreu residual, toric
boundary conditions, scalar curvature from potentials, f-extremal fits and
the conformally-Einstein detector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AffinePoly2
from .errors import BoundaryTooClose, NonSymmetric, ZeroScalar
from .fields import (HField, HessianPotential, LogPotential, PolynomialPotential,
                     SumPotential, SymplecticPotential, blend, constant_field)
from .polytope import LabelledPolytope, facet_measure, wpp_simplex

__all__ = [
    "HField", "SymplecticPotential", "LogPotential", "PolynomialPotential", "SumPotential",
    "HessianPotential", "blend", "constant_field", "weighted_operator", "residual_modified_abreu",
    "check_boundary_H", "scalar_from_potential", "bryant_potential", "guillemin_potential",
    "f_extremal_fit", "conformally_einstein_detect",
]


def weighted_operator(H: HField, f: AffinePoly2, mu: np.ndarray, derivs=None) -> np.ndarray:
    """L(mu) = -sum_ij (H_ij / f^3)_{,ij}, expanded by the product rule."""
    mu = np.asarray(mu, dtype=float)
    Hm, dH, d2H = derivs if derivs is not None else H.derivatives(mu)
    g = np.array([float(f.f1), float(f.f2)])
    fv = f(mu)
    # sum_ij H_ij,ij ; sum_ij H_ij,j g_i ; sum_ij H_ij g_i g_j
    t2 = np.einsum("...ijij->...", d2H)
    t1 = np.einsum("...jij,i->...", dH, g)
    t0 = np.einsum("...ij,i,j->...", Hm, g, g)
    total = t2 / fv ** 3 - 6 * t1 / fv ** 4 + 12 * t0 / fv ** 5
    return -total


@dataclass
class AbreuResidual:
    residual: float
    c: float
    n_points: int
    margin: float
    mode: str

    def __float__(self) -> float:
        return self.residual


def _symmetry_check(Hm: np.ndarray, tol: float = 1e-10) -> None:
    asym = np.max(np.abs(Hm[..., 0, 1] - Hm[..., 1, 0])) if Hm.size else 0.0
    scale = max(1.0, float(np.max(np.abs(Hm)))) if Hm.size else 1.0
    if asym > tol * scale:
        raise NonSymmetric(f"H is not symmetric (defect {asym:.3g})")


def residual_modified_abreu(H: HField, f: AffinePoly2, poly: LabelledPolytope,
                            margin: float | None = None, step: float | None = None,
                            n: int = 30) -> AbreuResidual:
    """max |L f^5 - c| over an interior grid, c the f^-5-weighted projection."""
    if margin is None:
        margin = 0.05 * poly.diameter()
    if step is not None and H.mode == "finite_difference":
        H = HField(H._func, None, step, H.richardson, H.name)
    if H.mode == "finite_difference" and margin < 2 * H.fd_step:
        raise BoundaryTooClose("margin must exceed two finite-difference steps")
    pts = poly.interior_grid(n, margin)
    if len(pts) == 0:
        raise BoundaryTooClose(f"margin {margin:.3g} leaves no interior sample points")
    derivs = H.derivatives(pts)
    _symmetry_check(derivs[0])
    L = weighted_operator(H, f, pts, derivs)
    fv = f(pts)
    c = float(np.sum(L) / np.sum(fv ** -5))
    res = float(np.max(np.abs(L * fv ** 5 - c)))
    return AbreuResidual(res, c, len(pts), margin, H.mode)


@dataclass
class FacetCheck:
    facet: int
    kernel: float
    derivative: float


@dataclass
class BoundaryReport:
    facets: list
    interior_min_eig: float
    tol: float

    @property
    def passed(self) -> bool:
        return (all(fc.kernel < self.tol and fc.derivative < self.tol for fc in self.facets)
                and self.interior_min_eig > 0)

    @property
    def worst(self) -> float:
        return max(max(fc.kernel, fc.derivative) for fc in self.facets)


def check_boundary_H(H: HField, poly: LabelledPolytope, samples: int = 10, tol: float = 1e-8,
                     n_interior: int = 12, offset: float = 0.0) -> BoundaryReport:
    """H(u_j, .) = 0 and dH(u_j, u_j) = 2 u_j along every facet, plus interior definiteness.

    With ``offset`` > 0 the facet values are extrapolated (quadratically, from
    distances offset, 2 offset and 3 offset) for fields that are singular on the boundary
    itself, such as those built from log potentials.
    """
    t = (np.arange(samples) + 0.5) / samples
    out = []
    for j, fc in enumerate(poly.facets):
        fm = facet_measure(poly, j)
        pts = fm.point(t)
        u = np.array([float(c) for c in fc.u])

        def probe(p):
            Hm, dH, _ = H.derivatives(p)
            return Hm @ u, np.einsum("...kij,i,j->...k", dH, u, u)

        if offset > 0:
            n = u / np.linalg.norm(u)
            k1, d1 = probe(pts + offset * n)
            k2, d2 = probe(pts + 2 * offset * n)
            k3, d3 = probe(pts + 3 * offset * n)
            kv, dv = 3 * k1 - 3 * k2 + k3, 3 * d1 - 3 * d2 + d3
        else:
            kv, dv = probe(pts)
        out.append(FacetCheck(j, float(np.max(np.abs(kv))), float(np.max(np.abs(dv - 2 * u)))))
    pts = poly.interior_grid(n_interior, 0.0)
    eig = np.linalg.eigvalsh(H(pts))
    return BoundaryReport(out, float(eig.min()), tol)


@dataclass
class ScalarFields:
    points: np.ndarray
    s_J: np.ndarray
    s_Jf: np.ndarray


def scalar_from_potential(u: SymplecticPotential, f: AffinePoly2, poly: LabelledPolytope,
                          grid=None, n: int = 25, margin: float | None = None) -> ScalarFields:
    """s_J = -sum H_ij,ij and s_{J,f} = -f^5 sum (H_ij / f^3)_{,ij} with H = Hess(u)^-1."""
    if grid is None:
        margin = 0.05 * poly.diameter() if margin is None else margin
        grid = poly.interior_grid(n, margin)
    pts = np.asarray(grid, dtype=float)
    H = u.h_field()
    derivs = H.derivatives(pts)
    s_J = -np.einsum("...ijij->...", derivs[2])
    s_Jf = weighted_operator(H, f, pts, derivs) * f(pts) ** 5
    return ScalarFields(pts, s_J, s_Jf)


def wpp_labels(a0, a1, a2) -> list:
    return wpp_simplex(a0, a1, a2).labels


def bryant_potential(a0, a1, a2) -> LogPotential:
    """u = 1/2 [sum L_j log L_j - S log S], S = sum L_j, for the weighted projective plane labels."""
    if min(a0, a1, a2) <= 0:
        raise ValueError("weights must be positive")
    labs = wpp_labels(a0, a1, a2)
    S = labs[0] + labs[1] + labs[2]
    return LogPotential(labs + [S], [0.5, 0.5, 0.5, -0.5])


def guillemin_potential(poly: LabelledPolytope) -> LogPotential:
    """u = 1/2 sum L_j log L_j."""
    return LogPotential(poly.labels, [0.5] * len(poly.facets))


def f_extremal_fit(s_values, points, f: AffinePoly2):
    """Least-squares affine fit of a sampled field with weight f^-5.

    Returns (zeta, max deviation).
    """
    pts = np.asarray(points, dtype=float)
    s = np.asarray(s_values, dtype=float)
    w = np.sqrt(f(pts) ** -5)
    X = np.stack([np.ones(len(pts)), pts[:, 0], pts[:, 1]], axis=1)
    coef, *_ = np.linalg.lstsq(X * w[:, None], s * w, rcond=None)
    resid = float(np.max(np.abs(X @ coef - s)))
    return AffinePoly2(*coef), resid


@dataclass
class EinsteinVerdict:
    einstein: bool
    ratio: float
    spread: float

    def __bool__(self) -> bool:
        return self.einstein


def conformally_einstein_detect(s_J, f_values, tol: float = 1e-5) -> EinsteinVerdict:
    """True iff f = t s_J for one t > 0 (relative spread of f / s_J below tol)."""
    s = np.asarray(s_J, dtype=float)
    fv = np.asarray(f_values, dtype=float)
    if np.any(np.abs(s) < 1e-14):
        raise ZeroScalar("scalar curvature vanishes at a sample point")
    r = fv / s
    t = float(np.mean(r))
    spread = float(np.max(np.abs(r - t)) / abs(t))
    return EinsteinVerdict(bool(t > 0 and spread < tol), t, spread)
