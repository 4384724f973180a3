"""Independent reference values.

The square expressions below are transcribed once, verbatim, from the closed
forms for the product metric on the square with labels 1 -+ x, lambda (1 -+ y);
mu = 1 / lambda. They are only ever used as test oracles.
"""
from __future__ import annotations

from fractions import Fraction

import sympy as sp


def _sextic(f0, f1, f2):
    return (-3 * f0**4 * f1**2 + 3 * f1**6 - 3 * f2**4 * f1**2 + 14 * f0**2 * f2**2 * f1**2
            - 3 * f0**2 * f1**4 - 3 * f2**2 * f1**4 + 3 * f0**6 - 3 * f0**4 * f2**2
            - 3 * f2**4 * f0**2 + 3 * f2**6)


def square_c(f0, f1, f2, mu):
    num = 6 * (2 * f0**2 * f1**2 - 3 * f1**4 + 2 * f1**2 * f2**2 + 2 * mu * f2**2 * f0**2
               - 3 * mu * f2**4 + mu * f0**4 - 2 * f0**2 * f2**2 + f2**4 + f0**4
               + 2 * mu * f2**2 * f1**2 - 2 * mu * f0**2 * f1**2 + mu * f1**4)
    num = num * (f0 - f1 - f2) * (f0 - f2 + f1) * (f0 - f1 + f2) * (f0 + f2 + f1)
    return num / _sextic(f0, f1, f2)


def square_futaki_x(f0, f1, f2, mu):
    br = (2 * mu * f0**4 * f2**2 + 5 * mu * f0**2 * f2**4 - 2 * f0**2 * f1**4 + f2**6
          - mu * f2**4 * f1**2 - 2 * f0**2 * f2**2 * f1**2 - 4 * mu * f0**2 * f2**2 * f1**2
          - 3 * mu * f0**4 * f1**2 + 2 * mu * f2**2 * f1**4 - mu * f1**6 - 2 * f0**6
          + f0**4 * f2**2 + mu * f0**6 + f2**2 * f1**4 - 2 * f2**4 * f1**2
          + 4 * f0**4 * f1**2 + 3 * mu * f0**2 * f1**4)
    den = ((f0 - f2 + f1) * (f0 - f1 - f2) * _sextic(f0, f1, f2)
           * (f0 + f2 + f1) * (f0 - f1 + f2))
    return 16 * f1 * br / den


def square_futaki_y(f0, f1, f2, mu):
    br = (-mu * f1**6 + 2 * mu * f0**2 * f2**2 * f1**2 - mu * f0**4 * f1**2 + f2**6
          + f2**2 * f1**4 - 2 * f2**4 * f1**2 + 3 * f0**4 * f2**2 - 3 * f2**4 * f0**2
          - f0**6 + 2 * mu * f0**2 * f2**4 + 2 * mu * f0**6 + 4 * f0**2 * f2**2 * f1**2
          - 5 * f0**2 * f1**4 - 2 * f0**4 * f1**2 + 2 * mu * f2**2 * f1**4
          - mu * f2**4 * f1**2 - 4 * mu * f0**4 * f2**2)
    den = ((f0 - f2 + f1) * (f0 - f1 - f2) * _sextic(f0, f1, f2)
           * (f0 + f2 + f1) * (f0 - f1 + f2))
    return -16 * f2 * br / den


def sympy_polygon_integral(vertices, expr, x, y):
    """Exact integral of a sympy expression over a convex polygon via a triangle fan."""
    V = [tuple(sp.Rational(Fraction(c).numerator, Fraction(c).denominator) for c in v)
         for v in vertices]
    s, t = sp.symbols("s t", nonnegative=True)
    total = 0
    for i in range(1, len(V) - 1):
        a, b, c = V[0], V[i], V[i + 1]
        X = a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0])
        Y = a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])
        jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        inner = sp.integrate(expr.subs({x: X, y: Y}, simultaneous=True), (t, 0, 1 - s))
        total += jac * sp.integrate(inner, (s, 0, 1))
    return sp.nsimplify(sp.simplify(total))


def scipy_polygon_integral(vertices, func):
    """Adaptive scipy quadrature of func(x, y) over a convex polygon (triangle fan)."""
    from scipy.integrate import dblquad
    V = [tuple(float(c) for c in v) for v in vertices]
    total = 0.0
    for i in range(1, len(V) - 1):
        a, b, c = V[0], V[i], V[i + 1]
        jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

        def g(t, s, a=a, b=b, c=c):
            return func(a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
                        a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]))

        val, _ = dblquad(g, 0, 1, 0, lambda s: 1 - s, epsabs=1e-14, epsrel=1e-13)
        total += jac * val
    return total
