"""Polynomial algebra on degree <= 4 polynomials and the quadric space S^2.

Scalars may be ``int``/``Fraction`` (exact) or ``float``; every operation is
exact when its inputs are.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

Scalar = int | float | Fraction


def half(x):
    """x/2, kept exact for rational input."""
    if isinstance(x, Rational):
        return Fraction(x) / 2
    return x / 2


def is_exact(*values) -> bool:
    return all(isinstance(v, Rational) for v in values)


def to_scalar(x):
    """Normalize a user scalar: ints and Fractions stay exact, the rest become float.

    Strings like "3/4" are parsed exactly.
    """
    if isinstance(x, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(x, Rational):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (np.integer,)):
        return Fraction(int(x))
    return float(x)


def _horner(coeffs: Sequence, z):
    if isinstance(z, np.ndarray):
        coeffs = [float(c) for c in coeffs]
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * z + c
    return acc


@dataclass(frozen=True)
class Poly4:
    """P(z) = sum_k coeffs[k] z^k with at most five coefficients."""

    coeffs: tuple

    def __init__(self, coeffs: Iterable):
        cs = [to_scalar(c) for c in coeffs]
        if len(cs) > 5:
            extra = cs[5:]
            if any(c != 0 for c in extra):
                raise ValueError("degree exceeds 4")
            cs = cs[:5]
        cs = cs + [Fraction(0)] * (5 - len(cs))
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def zero(cls) -> "Poly4":
        return cls([0])

    def degree(self) -> int:
        for k in range(4, -1, -1):
            if self.coeffs[k] != 0:
                return k
        return -1

    def __call__(self, z):
        return _horner(self.coeffs, z)

    def deriv(self, n: int = 1) -> "Poly4":
        cs = list(self.coeffs)
        for _ in range(n):
            cs = [k * cs[k] for k in range(1, len(cs))] or [0]
        return Poly4(cs)

    def __add__(self, other: "Poly4") -> "Poly4":
        other = as_poly4(other)
        return Poly4([a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: "Poly4") -> "Poly4":
        other = as_poly4(other)
        return Poly4([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> "Poly4":
        return Poly4([-a for a in self.coeffs])

    def scale(self, s) -> "Poly4":
        s = to_scalar(s)
        return Poly4([s * a for a in self.coeffs])

    def __mul__(self, other) -> "Poly4":
        if isinstance(other, (Poly4, Quadric)):
            return poly_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def to_float(self) -> "Poly4":
        return Poly4([float(c) for c in self.coeffs])

    def as_numpy(self) -> np.polynomial.Polynomial:
        return np.polynomial.Polynomial([float(c) for c in self.coeffs])

    def is_exact(self) -> bool:
        return is_exact(*self.coeffs)

    def __repr__(self) -> str:
        return f"Poly4({[str(c) if isinstance(c, Fraction) else c for c in self.coeffs]})"


def as_poly4(p) -> Poly4:
    if isinstance(p, Poly4):
        return p
    if isinstance(p, Quadric):
        return p.to_poly4()
    return Poly4([p])


def _raw_mul(a: Sequence, b: Sequence) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def poly_mul(a, b) -> Poly4:
    """Product of two polynomials whose degrees sum to at most 4."""
    return Poly4(_raw_mul(as_poly4(a).coeffs, as_poly4(b).coeffs))


@dataclass(frozen=True)
class Quadric:
    """q(z) = q2 z^2 + 2 q1 z + q0 (note the factor 2 on the middle term)."""

    q0: Scalar
    q1: Scalar
    q2: Scalar

    def __init__(self, q0=0, q1=0, q2=0):
        object.__setattr__(self, "q0", to_scalar(q0))
        object.__setattr__(self, "q1", to_scalar(q1))
        object.__setattr__(self, "q2", to_scalar(q2))

    @classmethod
    def from_coeffs(cls, coeffs: Sequence) -> "Quadric":
        """Build from the plain coefficient array (c0, c1, c2) of c0 + c1 z + c2 z^2."""
        cs = [to_scalar(c) for c in coeffs] + [Fraction(0)] * (3 - len(coeffs))
        if len(cs) > 3 and any(c != 0 for c in cs[3:]):
            raise ValueError("degree exceeds 2")
        return cls(cs[0], half(cs[1]), cs[2])

    @classmethod
    def from_poly(cls, p: Poly4, tol: float = 0.0) -> "Quadric":
        c = p.coeffs
        if p.is_exact() or tol == 0.0:
            if c[3] != 0 or c[4] != 0:
                raise ValueError("polynomial has degree > 2")
        else:
            scale = max(1.0, *(abs(float(x)) for x in c))
            if abs(c[3]) > tol * scale or abs(c[4]) > tol * scale:
                raise ValueError("polynomial has degree > 2")
        return cls.from_coeffs(c[:3])

    def coeffs(self) -> tuple:
        """Plain coefficients (c0, c1, c2)."""
        return (self.q0, 2 * self.q1, self.q2)

    def vector(self) -> tuple:
        return (self.q0, self.q1, self.q2)

    def to_poly4(self) -> Poly4:
        return Poly4(self.coeffs())

    def __call__(self, z):
        return _horner(self.coeffs(), z)

    def deriv(self) -> Poly4:
        return self.to_poly4().deriv()

    def polar(self, x, y):
        """Polarization q(x, y) = q2 x y + q1 (x + y) + q0."""
        if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
            return float(self.q2) * x * y + float(self.q1) * (x + y) + float(self.q0)
        return self.q2 * x * y + self.q1 * (x + y) + self.q0

    def __add__(self, other: "Quadric") -> "Quadric":
        return Quadric(self.q0 + other.q0, self.q1 + other.q1, self.q2 + other.q2)

    def __sub__(self, other: "Quadric") -> "Quadric":
        return Quadric(self.q0 - other.q0, self.q1 - other.q1, self.q2 - other.q2)

    def __neg__(self) -> "Quadric":
        return Quadric(-self.q0, -self.q1, -self.q2)

    def scale(self, s) -> "Quadric":
        s = to_scalar(s)
        return Quadric(s * self.q0, s * self.q1, s * self.q2)

    def __mul__(self, other):
        if isinstance(other, (Poly4, Quadric)):
            return poly_mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.q0 == 0 and self.q1 == 0 and self.q2 == 0

    def is_exact(self) -> bool:
        return is_exact(self.q0, self.q1, self.q2)

    def to_float(self) -> "Quadric":
        return Quadric(float(self.q0), float(self.q1), float(self.q2))

    def __repr__(self) -> str:
        fmt = lambda c: str(c) if isinstance(c, Fraction) else repr(c)
        return f"Quadric(q0={fmt(self.q0)}, q1={fmt(self.q1)}, q2={fmt(self.q2)})"


def polarize(q: Quadric):
    """Return the symmetric function (x, y) -> q(x, y)."""
    return q.polar


def inner(p: Quadric, q: Quadric):
    """Discriminant inner product 2 p1 q1 - (q2 p0 + q0 p2)."""
    return 2 * p.q1 * q.q1 - (q.q2 * p.q0 + q.q0 * p.q2)


def poisson_bracket(q: Quadric, w: Quadric) -> Quadric:
    """{q, w} = q' w - w' q; the cubic terms cancel."""
    raw = _raw_mul(q.deriv().coeffs[:2], w.coeffs())
    other = _raw_mul(w.deriv().coeffs[:2], q.coeffs())
    diff = [a - b for a, b in zip(raw, other)]
    # z^3 coefficient: 2 q2 w2 - 2 w2 q2, identically zero
    return Quadric.from_coeffs(diff[:3])


def transvectant2(G: Quadric, R: Poly4) -> Quadric:
    """(G, R)^(2) = R'' G - 3 R' G' + 6 R G''.

    Coefficients are assembled directly so the vanishing z^3, z^4 terms never
    appear, also in floating point.
    """
    r = R.coeffs
    g0, g1, g2 = G.coeffs()
    # R'' G
    d2 = [2 * r[2], 6 * r[3], 12 * r[4]]
    d1 = [r[1], 2 * r[2], 3 * r[3], 4 * r[4]]
    out = [Fraction(0)] * 3
    # full expansion, truncated to the surviving degrees
    for i in range(3):
        for j, gj in enumerate((g0, g1, g2)):
            if i + j < 3:
                out[i + j] += d2[i] * gj
    gp = (g1, 2 * g2)
    for i in range(4):
        for j in range(2):
            if i + j < 3:
                out[i + j] -= 3 * d1[i] * gp[j]
    for i in range(3):
        out[i] += 12 * g2 * r[i]
    return Quadric.from_coeffs(out)


def transvectant2_raw(G: Quadric, R: Poly4) -> list:
    """All coefficients (degrees 0..6) of R''G - 3R'G' + 6RG'', for checks."""
    d2 = R.deriv(2).coeffs
    d1 = R.deriv(1).coeffs
    g = G.coeffs()
    gp = G.deriv().coeffs
    gpp = G.deriv().deriv().coeffs
    n = 7
    out = [Fraction(0)] * n
    for a, b, s in ((d2, g, 1), (d1, gp, -3), (R.coeffs, gpp, 6)):
        prod = _raw_mul(a, b)
        for k, v in enumerate(prod):
            if k < n:
                out[k] += s * v
    return out


def ad_half(q: Quadric, w: Quadric) -> Quadric:
    """(1/2){q, w}; the image is orthogonal to q."""
    b = poisson_bracket(q, w)
    return Quadric(half(b.q0), half(b.q1), half(b.q2))


def coords_in_basis(target: Quadric, basis: Sequence[Quadric]) -> list:
    """Coordinates of target in a basis of three quadrics (exact if inputs are)."""
    from .linalg import solve_square

    cols = [b.vector() for b in basis]
    mat = [[cols[j][i] for j in range(len(basis))] for i in range(3)]
    return solve_square(mat, list(target.vector()))


@dataclass(frozen=True)
class AffinePoly2:
    """f(mu) = f0 + f1 mu1 + f2 mu2."""

    f0: Scalar
    f1: Scalar
    f2: Scalar

    def __init__(self, f0=0, f1=0, f2=0):
        object.__setattr__(self, "f0", to_scalar(f0))
        object.__setattr__(self, "f1", to_scalar(f1))
        object.__setattr__(self, "f2", to_scalar(f2))

    @classmethod
    def from_seq(cls, seq: Sequence) -> "AffinePoly2":
        if len(seq) != 3:
            raise ValueError("affine function needs three coefficients")
        return cls(*seq)

    def __call__(self, mu1, mu2=None):
        if mu2 is None:
            arr = np.asarray(mu1) if not isinstance(mu1, (tuple, list)) else mu1
            if isinstance(arr, np.ndarray):
                mu1, mu2 = arr[..., 0], arr[..., 1]
            else:
                mu1, mu2 = arr[0], arr[1]
        if isinstance(mu1, np.ndarray) or isinstance(mu2, np.ndarray):
            return float(self.f0) + float(self.f1) * mu1 + float(self.f2) * mu2
        return self.f0 + self.f1 * mu1 + self.f2 * mu2

    @property
    def grad(self) -> tuple:
        return (self.f1, self.f2)

    def vector(self) -> tuple:
        return (self.f0, self.f1, self.f2)

    def __add__(self, other) -> "AffinePoly2":
        if not isinstance(other, AffinePoly2):
            other = AffinePoly2(other)
        return AffinePoly2(self.f0 + other.f0, self.f1 + other.f1, self.f2 + other.f2)

    __radd__ = __add__

    def __sub__(self, other) -> "AffinePoly2":
        if not isinstance(other, AffinePoly2):
            other = AffinePoly2(other)
        return AffinePoly2(self.f0 - other.f0, self.f1 - other.f1, self.f2 - other.f2)

    def __neg__(self) -> "AffinePoly2":
        return AffinePoly2(-self.f0, -self.f1, -self.f2)

    def scale(self, s) -> "AffinePoly2":
        s = to_scalar(s)
        return AffinePoly2(s * self.f0, s * self.f1, s * self.f2)

    def __mul__(self, s) -> "AffinePoly2":
        return self.scale(s)

    __rmul__ = __mul__

    def is_exact(self) -> bool:
        return is_exact(self.f0, self.f1, self.f2)

    def is_constant(self) -> bool:
        return self.f1 == 0 and self.f2 == 0

    def to_float(self) -> "AffinePoly2":
        return AffinePoly2(float(self.f0), float(self.f1), float(self.f2))

    def __repr__(self) -> str:
        fmt = lambda c: str(c) if isinstance(c, Fraction) else repr(c)
        return f"AffinePoly2({fmt(self.f0)}, {fmt(self.f1)}, {fmt(self.f2)})"
