import random
from fractions import Fraction as F

import pytest
import sympy as sp

from emtoric.algebra import (AffinePoly2, Poly4, Quadric, ad_half, inner, poisson_bracket, polarize,
                             transvectant2, transvectant2_raw)

z, X, Y = sp.symbols("z x y")


def sym(Q):
    """sympy polynomial of a Quadric or Poly4."""
    cs = Q.coeffs() if isinstance(Q, Quadric) else Q.coeffs
    return sum(sp.Rational(F(c).numerator, F(c).denominator) * z**k for k, c in enumerate(cs))


def from_sym(expr):
    cs = sp.Poly(sp.expand(expr), z).all_coeffs()[::-1]
    return [F(int(sp.Rational(c).p), int(sp.Rational(c).q)) for c in cs]


def rand_quadric(rng):
    return Quadric(*(F(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3)))


def rand_poly4(rng):
    return Poly4([F(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(5)])


def padded(cs, n):
    return list(cs) + [F(0)] * (n - len(cs))


@pytest.mark.parametrize("p,q,expected", [
    (Quadric(0, 0, 1), Quadric(1, 0, 0), -1),
    (Quadric(F(3), 0, 1), Quadric(F(3), 0, 1), -6),
    (Quadric(0, 1, 0), Quadric(0, 1, 0), 2),
])
def test_inner_examples(p, q, expected):
    assert inner(p, q) == expected


def test_poisson_bracket_examples():
    assert poisson_bracket(Quadric(0, 0, 1), Quadric(1, 0, 0)) == Quadric.from_coeffs([0, 2, 0])
    q = Quadric(2, 3, 5)
    assert poisson_bracket(q, q).is_zero()
    # q = z, w = z^2 -> z^2 - 2 z^2 = -z^2
    assert poisson_bracket(Quadric.from_coeffs([0, 1]), Quadric(0, 0, 1)) == Quadric(0, 0, -1)


def test_transvectant_examples():
    R = Poly4([1, 2, 3, 4, 5])
    assert transvectant2(Quadric(1, 0, 0), R).to_poly4() == R.deriv(2)
    assert transvectant2(Quadric(0, 0, 1), Poly4([0, 0, 0, 0, 1])).is_zero()


def test_polarize_examples():
    assert polarize(Quadric(0, 0, 1))(F(2), F(3)) == 6
    assert polarize(Quadric(1, 0, 0))(F(2), F(3)) == 1
    q = Quadric(1, 1, 1)  # z^2 + 2z + 1
    assert q.polar(F(2), F(3)) == 2 * 3 + 2 + 3 + 1


def test_ad_half_examples():
    assert ad_half(Quadric(1, 0, 0), Quadric(0, 0, 1)) == Quadric.from_coeffs([0, -1, 0])
    q = Quadric(2, -1, 3)
    assert ad_half(q, q).is_zero()
    assert ad_half(Quadric(0, 0, 1), Quadric(1, 0, 0)) == Quadric.from_coeffs([0, 1, 0])


def test_bracket_and_transvectant_against_sympy():
    rng = random.Random(1)
    for _ in range(25):
        q, w, G, R = rand_quadric(rng), rand_quadric(rng), rand_quadric(rng), rand_poly4(rng)
        qs, ws, Gs, Rs = sym(q), sym(w), sym(G), sym(R)
        br = from_sym(sp.diff(qs, z) * ws - sp.diff(ws, z) * qs)
        assert padded(br, 3) == list(poisson_bracket(q, w).coeffs())
        tv = from_sym(sp.diff(Rs, z, 2) * Gs - 3 * sp.diff(Rs, z) * sp.diff(Gs, z) + 6 * Rs * sp.diff(Gs, z, 2))
        assert padded(tv, 3) == list(transvectant2(G, R).coeffs())
        raw = transvectant2_raw(G, R)
        assert raw[3:] == [0] * (len(raw) - 3)


def test_exact_invariants():
    rng = random.Random(2)
    for _ in range(50):
        q, w = rand_quadric(rng), rand_quadric(rng)
        assert inner(ad_half(q, w), q) == 0
        assert inner(q, w) == inner(w, q)
        assert poisson_bracket(q, w) == -poisson_bracket(w, q)
        x, y = F(rng.randint(-9, 9), 7), F(rng.randint(-9, 9), 5)
        assert q.polar(x, y) == q.polar(y, x)
        assert q.polar(x, x) == q(x)
        a, b = F(rng.randint(-5, 5), 3), F(rng.randint(-5, 5), 2)
        assert (q.scale(a) + w.scale(b)).polar(x, y) == a * q.polar(x, y) + b * w.polar(x, y)


def test_inner_is_polarized_discriminant():
    # inner(q, q) = 2 q1^2 - 2 q0 q2, i.e. half the discriminant of q(z)
    rng = random.Random(3)
    for _ in range(10):
        q = rand_quadric(rng)
        c0, c1, c2 = q.coeffs()
        assert inner(q, q) == (c1 * c1 - 4 * c0 * c2) / 2


def test_quadric_coefficient_roundtrip():
    q = Quadric(F(1, 3), F(-2, 7), F(5))
    assert Quadric.from_coeffs(q.coeffs()) == q
    assert Quadric.from_poly(q.to_poly4()) == q
    with pytest.raises(ValueError):
        Quadric.from_poly(Poly4([0, 0, 0, 1]))


def test_poly4_basics():
    P = Poly4([1, 0, -2, 0, 1])
    assert P.degree() == 4
    assert P.deriv().degree() == 3
    assert P(F(1, 2)) == F(9, 16)
    with pytest.raises(ValueError):
        Poly4([0, 0, 0, 0, 0, 1])
    assert Poly4([1, 2]) * Poly4([1, 2]) == Poly4([1, 4, 4])
    assert Poly4([0, 0, 0, 0, 0, 0]).degree() == -1


def test_affine_poly():
    f = AffinePoly2(1, F(1, 2), F(-1, 3))
    assert f(F(2), F(3)) == 1
    assert f.grad == (F(1, 2), F(-1, 3))
    assert f.is_exact() and not f.is_constant()
    assert (f + 1)(0, 0) == 2
    assert (2 * f).f1 == 1
