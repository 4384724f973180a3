from fractions import Fraction as F

import pytest

from emtoric.algebra import AffinePoly2
from emtoric.errors import NonLatticePolytope
from emtoric.futaki import futaki_affine
from emtoric.polytope import from_facets, square, unit_simplex, wpp_simplex
from emtoric.quantized import algebraic_futaki, asymptotic_check, lattice_points, nu_k


@pytest.mark.parametrize("k", [1, 2, 5, 12])
def test_lattice_point_counts(k):
    assert len(lattice_points(square(1), k)) == (2 * k + 1) ** 2
    assert len(lattice_points(unit_simplex(), k)) == (k + 1) * (k + 2) // 2
    assert nu_k(square(1), k, 1) == (2 * k + 1) ** 2
    assert nu_k(square(1), k, {(1, 0): 1}) == 0


def test_constant_error_term():
    # the two-term expansion leaves exactly 1 for phi = 1 on a lattice polygon
    rep = asymptotic_check(square(1), 1, k_list=range(1, 30))
    assert all(e == 1 for e in rep.errors)
    rep = asymptotic_check(unit_simplex(), 1, k_list=range(1, 30))
    assert all(e == 1 for e in rep.errors)


def test_error_bounded_for_polynomials():
    rep = asymptotic_check(square(1), {(2, 0): 1}, k_list=range(5, 60, 5))
    assert rep.bounded() and isinstance(rep.errors[0], F)
    rep = asymptotic_check(unit_simplex(), {(1, 1): F(3), (0, 2): F(-1, 2)}, k_list=range(5, 60, 5))
    assert rep.bounded()


def test_nu_k_callable_matches_polynomial():
    poly = unit_simplex()
    exact = nu_k(poly, 7, {(1, 1): 1, (0, 0): 2})
    approx = nu_k(poly, 7, lambda mu: mu[..., 0] * mu[..., 1] + 2)
    assert approx == pytest.approx(float(exact), rel=1e-14)


def test_algebraic_futaki_examples():
    one = AffinePoly2(1)
    for j in (1, 2):
        assert algebraic_futaki(square(1), one, j) == 0
    z = algebraic_futaki(wpp_simplex(3, 2, 2), one, 1)
    assert z != 0
    assert float(z) == pytest.approx(float(futaki_affine(wpp_simplex(3, 2, 2), one, AffinePoly2(0, 1, 0))),
                                     rel=1e-10)
    f = AffinePoly2(3, F(1, 5), F(-1, 7))
    for j, mu in ((1, AffinePoly2(0, 1, 0)), (2, AffinePoly2(0, 0, 1))):
        assert float(algebraic_futaki(unit_simplex(), f, j)) == pytest.approx(
            float(futaki_affine(unit_simplex(), f, mu)), rel=1e-9, abs=1e-12)
    with pytest.raises(ValueError):
        algebraic_futaki(square(1), one, 3)


def test_non_lattice_rejected():
    with pytest.raises(NonLatticePolytope):
        lattice_points(square(F(1, 2)), 1)
    with pytest.raises(NonLatticePolytope):
        lattice_points(from_facets([((2, 0), 1), ((-1, 0), 1), ((0, 1), 1), ((0, -1), 1)]), 1)
    with pytest.raises(ValueError):
        lattice_points(square(1), 0)
