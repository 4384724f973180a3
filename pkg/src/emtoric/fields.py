"""Matrix fields H on a polygon and symplectic potentials, with derivative access.

Derivative arrays use the layout dH[..., k, i, j] = d_k H_ij and
d2H[..., k, l, i, j] = d_k d_l H_ij.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import sympy as sp
from scipy.special import xlogy

from .algebra import AffinePoly2
from .errors import CoordinateSingularity, SingularHessian


class HField:
    """A symmetric 2x2 matrix field on momentum space.

    ``derivs`` (optional) returns (H, dH, d2H) in closed form; otherwise
    central finite differences of step ``fd_step`` are used, with one
    Richardson extrapolation step when ``richardson`` is set.
    """

    def __init__(self, func: Callable, derivs: Callable | None = None, fd_step: float = 1e-3,
                 richardson: bool = True, name: str = ""):
        self._func = func
        self._derivs = derivs
        self.fd_step = fd_step
        self.richardson = richardson
        self.name = name

    @property
    def mode(self) -> str:
        return "closed_form" if self._derivs is not None else "finite_difference"

    def __call__(self, mu) -> np.ndarray:
        return self._func(np.asarray(mu, dtype=float))

    def derivatives(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self._derivs is not None:
            return self._derivs(mu)
        return self.fd_derivatives(mu)

    def fd_derivatives(self, mu, step: float | None = None, richardson: bool | None = None):
        mu = np.asarray(mu, dtype=float)
        h = self.fd_step if step is None else step
        rich = self.richardson if richardson is None else richardson
        d1, d2 = self._fd(mu, h)
        if rich:
            e1, e2 = self._fd(mu, h / 2)
            d1 = (4 * e1 - d1) / 3
            d2 = (4 * e2 - d2) / 3
        return self._func(mu), d1, d2

    def _fd(self, mu, h):
        F = self._func
        e = np.eye(2)
        H0 = F(mu)
        d1 = np.stack([(F(mu + h * e[k]) - F(mu - h * e[k])) / (2 * h) for k in range(2)], axis=-3)
        d2 = np.empty(mu.shape[:-1] + (2, 2, 2, 2))
        for k in range(2):
            d2[..., k, k, :, :] = (F(mu + h * e[k]) - 2 * H0 + F(mu - h * e[k])) / h ** 2
        mixed = (F(mu + h * (e[0] + e[1])) - F(mu + h * (e[0] - e[1]))
                 - F(mu - h * (e[0] - e[1])) + F(mu - h * (e[0] + e[1]))) / (4 * h ** 2)
        d2[..., 0, 1, :, :] = mixed
        d2[..., 1, 0, :, :] = mixed
        return d1, d2

    def without_closed_form(self, fd_step: float | None = None, richardson: bool | None = None) -> "HField":
        return HField(self._func, None, fd_step or self.fd_step,
                      self.richardson if richardson is None else richardson, self.name + "[fd]")


def blend(fields: Sequence[HField], weights: Sequence[float]) -> HField:
    """Linear combination sum w_i H_i (closed form when every field is)."""
    fields, weights = list(fields), [float(w) for w in weights]

    def func(mu):
        return sum(w * h(mu) for w, h in zip(weights, fields))

    def derivs(mu):
        parts = [h.derivatives(mu) for h in fields]
        return tuple(sum(w * p[i] for w, p in zip(weights, parts)) for i in range(3))

    closed = all(h.mode == "closed_form" for h in fields)
    return HField(func, derivs if closed else None, name="blend")


def constant_field(matrix) -> HField:
    m = np.asarray(matrix, dtype=float)

    def derivs(mu):
        shape = np.asarray(mu).shape[:-1]
        H = np.broadcast_to(m, shape + (2, 2)).copy()
        return H, np.zeros(shape + (2, 2, 2)), np.zeros(shape + (2, 2, 2, 2))

    return HField(lambda mu: derivs(mu)[0], derivs, name="constant")


def sympy_hfield(H_xy, mu_xy, xy: tuple, inverse: Callable, name: str = "",
                 singular: Callable | None = None) -> HField:
    """Closed-form HField from expressions in auxiliary coordinates (x, y).

    ``H_xy`` is a 2x2 sympy matrix and ``mu_xy`` the momentum map, both in
    (x, y); ``inverse`` maps momenta (..., 2) back to (x, y) arrays and
    ``singular`` flags points where the coordinates break down.
    """
    x, y = xy
    H_xy = sp.Matrix(H_xy)
    Jm = sp.Matrix([[sp.diff(mu_xy[i], v) for v in (x, y)] for i in range(2)])
    M = Jm.inv()  # rows: (x, y); columns: mu index

    def D(expr, i):
        return M[0, i] * sp.diff(expr, x) + M[1, i] * sp.diff(expr, y)

    entries = [H_xy[0, 0], H_xy[0, 1], H_xy[1, 1]]
    first = [[D(e, k) for e in entries] for k in range(2)]
    second = [[[D(first[k][n], l) for n in range(3)] for l in range(2)] for k in range(2)]
    flat = entries + [e for row in first for e in row] + [e for a in second for b in a for e in b]
    fn = sp.lambdify((x, y), flat, modules="numpy", cse=True)

    def evaluate(mu):
        mu = np.asarray(mu, dtype=float)
        X, Y = inverse(mu)
        if singular is not None and np.any(singular(X, Y)):
            raise CoordinateSingularity("evaluation at a coordinate singularity")
        vals = fn(X, Y)
        shape = np.shape(X)
        vals = [np.broadcast_to(np.asarray(v, dtype=float), shape) for v in vals]
        return vals

    def sym(a, b, c):
        out = np.empty(a.shape + (2, 2))
        out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = a, b, b, c
        return out

    def func(mu):
        v = evaluate(mu)
        return sym(v[0], v[1], v[2])

    def derivs(mu):
        v = evaluate(mu)
        H = sym(v[0], v[1], v[2])
        dH = np.stack([sym(*v[3 + 3 * k: 6 + 3 * k]) for k in range(2)], axis=-3)
        d2 = np.empty(H.shape[:-2] + (2, 2, 2, 2))
        base = 9
        for k in range(2):
            for l in range(2):
                o = base + 3 * (2 * k + l)
                d2[..., k, l, :, :] = sym(*v[o:o + 3])
        return H, dH, d2

    return HField(func, derivs, name=name)


# ---------------------------------------------------------------------------
# symplectic potentials

class SymplecticPotential:
    """Closed-form potential u with derivatives up to order four.

    Subclasses implement ``value``, ``gradient``, ``hessian``, ``third`` and
    ``fourth`` on arrays of shape (..., 2).
    """

    def value(self, mu):
        raise NotImplementedError

    def hessian(self, mu):
        raise NotImplementedError

    def third(self, mu):
        raise NotImplementedError

    def fourth(self, mu):
        raise NotImplementedError

    def h_field(self) -> HField:
        """H = Hess(u)^-1 with closed-form derivatives."""

        def func(mu):
            return _inv(self.hessian(np.asarray(mu, dtype=float)))

        def derivs(mu):
            mu = np.asarray(mu, dtype=float)
            G = self.hessian(mu)
            H = _inv(G)
            G3 = self.third(mu)      # [..., k, i, j]
            G4 = self.fourth(mu)     # [..., k, l, i, j]
            HGk = np.einsum("...ab,...kbc->...kac", H, G3)
            dH = -np.einsum("...kac,...cd->...kad", HGk, H)
            term = np.einsum("...kab,...lbc,...cd->...klad", HGk, HGk, H)
            d2H = term + np.swapaxes(term, -3, -4) - np.einsum(
                "...ab,...klbc,...cd->...klad", H, G4, H)
            return H, dH, d2H

        return HField(func, derivs, name=type(self).__name__)


def _inv(G):
    det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
    if np.any(det == 0):
        raise SingularHessian("Hessian is singular")
    out = np.empty_like(G)
    out[..., 0, 0] = G[..., 1, 1] / det
    out[..., 1, 1] = G[..., 0, 0] / det
    out[..., 0, 1] = -G[..., 0, 1] / det
    out[..., 1, 0] = -G[..., 1, 0] / det
    return out


class LogPotential(SymplecticPotential):
    """u = sum_j c_j L_j log L_j + 1/2 mu^T Q mu + b . mu with affine L_j."""

    def __init__(self, labels: Sequence[AffinePoly2], coeffs: Sequence[float] | None = None,
                 quad=None, lin=None):
        self.labels = [lab.to_float() for lab in labels]
        self.coeffs = np.ones(len(labels)) / 2 if coeffs is None else np.asarray(coeffs, dtype=float)
        self.Q = np.zeros((2, 2)) if quad is None else np.asarray(quad, dtype=float)
        self.b = np.zeros(2) if lin is None else np.asarray(lin, dtype=float)
        self.A = np.array([[float(l.f1), float(l.f2)] for l in self.labels])

    def _ell(self, mu):
        return np.stack([lab(mu) for lab in self.labels], axis=-1)

    def value(self, mu):
        mu = np.asarray(mu, dtype=float)
        L = self._ell(mu)
        return (xlogy(L, L) @ self.coeffs + 0.5 * np.einsum("...i,ij,...j->...", mu, self.Q, mu)
                + mu @ self.b)

    def gradient(self, mu):
        mu = np.asarray(mu, dtype=float)
        L = self._ell(mu)
        return ((self.coeffs * (np.log(L) + 1)) @ self.A + mu @ self.Q.T + self.b)

    def hessian(self, mu):
        L = self._ell(np.asarray(mu, dtype=float))
        w = self.coeffs / L
        return np.einsum("...j,ja,jb->...ab", w, self.A, self.A) + self.Q

    def third(self, mu):
        L = self._ell(np.asarray(mu, dtype=float))
        w = -self.coeffs / L ** 2
        return np.einsum("...j,jk,ja,jb->...kab", w, self.A, self.A, self.A)

    def fourth(self, mu):
        L = self._ell(np.asarray(mu, dtype=float))
        w = 2 * self.coeffs / L ** 3
        return np.einsum("...j,jk,jl,ja,jb->...klab", w, self.A, self.A, self.A, self.A)


class PolynomialPotential(SymplecticPotential):
    """A bivariate polynomial sum c_ij mu1^i mu2^j (used for perturbations)."""

    def __init__(self, terms: dict):
        self.terms = {tuple(k): float(v) for k, v in terms.items()}

    def _d(self, mu, dx: int, dy: int):
        x, y = mu[..., 0], mu[..., 1]
        out = np.zeros(x.shape)
        for (i, j), c in self.terms.items():
            if i < dx or j < dy:
                continue
            fi = np.prod(np.arange(i - dx + 1, i + 1)) if dx else 1
            fj = np.prod(np.arange(j - dy + 1, j + 1)) if dy else 1
            out = out + c * fi * fj * x ** (i - dx) * y ** (j - dy)
        return out

    def _tensor(self, mu, order):
        mu = np.asarray(mu, dtype=float)
        shape = mu.shape[:-1] + (2,) * order
        out = np.empty(shape)
        for idx in np.ndindex(*(2,) * order):
            dx = idx.count(0)
            out[(Ellipsis,) + idx] = self._d(mu, dx, order - dx)
        return out

    def value(self, mu):
        return self._d(np.asarray(mu, dtype=float), 0, 0)

    def gradient(self, mu):
        return self._tensor(mu, 1)

    def hessian(self, mu):
        return self._tensor(mu, 2)

    def third(self, mu):
        return self._tensor(mu, 3)

    def fourth(self, mu):
        return self._tensor(mu, 4)


class SumPotential(SymplecticPotential):
    """sum_i w_i u_i."""

    def __init__(self, parts: Sequence[SymplecticPotential], weights: Sequence[float]):
        self.parts = list(parts)
        self.weights = [float(w) for w in weights]

    def _combine(self, name, mu):
        return sum(w * getattr(p, name)(mu) for w, p in zip(self.weights, self.parts))

    def value(self, mu):
        return self._combine("value", mu)

    def gradient(self, mu):
        return self._combine("gradient", mu)

    def hessian(self, mu):
        return self._combine("hessian", mu)

    def third(self, mu):
        return self._combine("third", mu)

    def fourth(self, mu):
        return self._combine("fourth", mu)


class HessianPotential:
    """Potential known only through H = Hess(u)^-1, shifted by t * psi.

    Values are relative to the unknown base potential, which cancels in
    relative functionals.
    """

    def __init__(self, H: HField, psi: SymplecticPotential | None = None, t: float = 0.0):
        self.H = H
        self.psi = psi
        self.t = float(t)

    def value(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.psi is None or self.t == 0:
            return np.zeros(mu.shape[:-1])
        return self.t * self.psi.value(mu)

    def hessian(self, mu):
        G = _inv(self.H(mu))
        if self.psi is not None and self.t != 0:
            G = G + self.t * self.psi.hessian(mu)
        return G
