"""Lattice-point sums over dilated lattice polygons, their two-term
Euler-Maclaurin asymptotics, and the algebraic form of the Futaki invariant."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence

import numpy as np

from .algebra import AffinePoly2
from .errors import NonLatticePolytope
from .futaki import _check_positive
from .polytope import LabelledPolytope
from .quadrature import (DEFAULT_ORDER, DEFAULT_TOL, Integrand, integrate_boundary,
                         integrate_boundary_exact, integrate_exact, integrate_interior)

__all__ = ["lattice_data", "lattice_points", "nu_k", "AsymptoticReport", "asymptotic_check",
           "algebraic_futaki"]


def lattice_data(poly: LabelledPolytope) -> tuple:
    """Integer normals and offsets of a lattice polygon.

    Raises NonLatticePolytope unless every vertex is integral and every
    normal is a primitive integer vector.
    """
    normals, offsets = [], []
    for fc in poly.facets:
        u = [Fraction(c) if isinstance(c, Rational) else None for c in fc.u]
        lam = Fraction(fc.lam) if isinstance(fc.lam, Rational) else None
        if None in u or lam is None:
            raise NonLatticePolytope("labels must have rational coefficients")
        if any(c.denominator != 1 for c in u) or math.gcd(int(u[0]), int(u[1])) != 1:
            raise NonLatticePolytope(f"normal {tuple(map(str, u))} is not a primitive integer vector")
        if lam.denominator != 1:
            raise NonLatticePolytope("label offsets must be integers")
        normals.append((int(u[0]), int(u[1])))
        offsets.append(int(lam))
    for v in poly.vertices:
        if not all(isinstance(c, Rational) and Fraction(c).denominator == 1 for c in v):
            raise NonLatticePolytope(f"vertex {v} is not a lattice point")
    return np.array(normals, dtype=np.int64), np.array(offsets, dtype=np.int64)


def lattice_points(poly: LabelledPolytope, k: int) -> np.ndarray:
    """Integer points of k Delta, i.e. lambda with <u_j, lambda> + k lambda_j >= 0 for all j."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    U, lam = lattice_data(poly)
    V = np.array([[int(c) for c in v] for v in poly.vertices], dtype=np.int64) * k
    xs = np.arange(V[:, 0].min(), V[:, 0].max() + 1)
    ys = np.arange(V[:, 1].min(), V[:, 1].max() + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    ok = np.all(pts @ U.T + k * lam >= 0, axis=1)
    return pts[ok]


def _poly_terms(phi) -> dict | None:
    """Monomial dictionary {(i, j): coeff} for polynomial input, else None."""
    if isinstance(phi, AffinePoly2):
        return {(0, 0): phi.f0, (1, 0): phi.f1, (0, 1): phi.f2}
    if isinstance(phi, Mapping):
        return {tuple(key): v for key, v in phi.items()}
    if isinstance(phi, (int, float, Fraction)):
        return {(0, 0): phi}
    return None


def _exact_terms(terms: dict | None) -> bool:
    return terms is not None and all(isinstance(v, Rational) for v in terms.values())


def nu_k(poly: LabelledPolytope, k: int, phi) -> Fraction | float:
    """sum of phi(lambda / k) over the lattice points lambda of k Delta.

    ``phi`` is a monomial dictionary, an AffinePoly2, a constant, or a
    vectorized callable on (..., 2) arrays. Rational polynomial input gives an
    exact result.
    """
    pts = lattice_points(poly, k)
    terms = _poly_terms(phi)
    if _exact_terms(terms):
        # exact: sum_lambda sum_ij c_ij lambda1^i lambda2^j / k^(i+j)
        total = Fraction(0)
        for (i, j), c in terms.items():
            if c == 0:
                continue
            s = sum(int(a) ** i * int(b) ** j for a, b in pts.tolist())
            total += Fraction(c) * Fraction(s, k ** (i + j))
        return total
    mu = pts.astype(float) / k
    if terms is not None:
        vals = sum(float(c) * mu[:, 0] ** i * mu[:, 1] ** j for (i, j), c in terms.items())
    else:
        vals = np.asarray(phi(mu), dtype=float) * np.ones(len(mu))
    return math.fsum(np.atleast_1d(vals).tolist())


@dataclass
class AsymptoticReport:
    ks: list
    errors: list
    sup_error: float
    exponent: float
    interior: object
    boundary: object

    def bounded(self, tol: float = 0.1) -> bool:
        return self.exponent <= tol


def _integrals(poly: LabelledPolytope, phi, tol: float, order: int):
    terms = _poly_terms(phi)
    if _exact_terms(terms) and poly.exact:
        return integrate_exact(poly, terms), integrate_boundary_exact(poly, terms)
    if terms is not None:
        integrand = Integrand(terms)
    else:
        integrand = phi
    return (integrate_interior(poly, integrand, tol, order),
            integrate_boundary(poly, integrand, tol, order))


def asymptotic_check(poly: LabelledPolytope, phi, k_list: Sequence[int] = tuple(range(10, 81, 10)),
                     tol: float = 1e-12, order: int = DEFAULT_ORDER) -> AsymptoticReport:
    """e_k = nu_k - k^2 int phi - (k/2) int_boundary phi d(sigma) and its growth exponent.

    The exponent is the least-squares slope of log|e_k| against log k over
    the k with e_k != 0; it is -inf when every e_k vanishes.
    """
    lattice_data(poly)
    I, Bd = _integrals(poly, phi, tol, order)
    errs = []
    for k in k_list:
        e = nu_k(poly, k, phi) - k * k * I - Fraction(k, 2) * Bd if isinstance(I, Fraction) \
            else float(nu_k(poly, k, phi)) - k * k * float(I) - 0.5 * k * float(Bd)
        errs.append(e)
    mags = np.array([abs(float(e)) for e in errs])
    scale = max(1.0, abs(float(I)) * max(k_list) ** 2)
    keep = mags > 1e-13 * scale
    if keep.sum() >= 2:
        slope = float(np.polyfit(np.log(np.asarray(k_list, dtype=float)[keep]), np.log(mags[keep]), 1)[0])
    elif keep.sum() == 1:
        slope = 0.0
    else:
        slope = -math.inf
    return AsymptoticReport(list(k_list), errs, float(mags.max()), slope, I, Bd)


def algebraic_futaki(poly: LabelledPolytope, f: AffinePoly2, j: int, tol: float = DEFAULT_TOL,
                     order: int = DEFAULT_ORDER):
    """4 [b1(-3,1) b0(-5,0) - b0(-5,1) b1(-3,0)] / b0(-5,0).

    Here b0(p, q) = int f^p mu_j^q d(mu) and b1(p, q) = (1/2) int_boundary
    f^p mu_j^q d(sigma); the constant c never appears.
    """
    if j not in (1, 2):
        raise ValueError("j must be 1 or 2")
    _check_positive(poly, f)
    mu_j = AffinePoly2(0, 1, 0) if j == 1 else AffinePoly2(0, 0, 1)
    exact = poly.exact and f.is_exact() and f.is_constant()

    def b0(p, q):
        integrand = Integrand(mu_j if q else 1, f, -p)
        return integrate_exact(poly, integrand) if exact else integrate_interior(poly, integrand, tol, order)

    def b1(p, q):
        integrand = Integrand(mu_j if q else 1, f, -p)
        val = integrate_boundary_exact(poly, integrand) if exact else integrate_boundary(poly, integrand, tol, order)
        return val / 2

    b0_50, b0_51 = b0(-5, 0), b0(-5, 1)
    b1_30, b1_31 = b1(-3, 0), b1(-3, 1)
    return 4 * (b1_31 * b0_50 - b0_51 * b1_30) / b0_50
