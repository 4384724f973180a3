import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from emtoric.algebra import AffinePoly2, Poly4, Quadric
from emtoric.ambitoric import (AmbitoricBoundary, RegularAnsatz, duality_transform, em_scalar,
                               induced_polytope, moment_transform, positivity_check, solve_calabi,
                               solve_product, solve_regular)
from emtoric.cli import boundary_from_rectangle
from emtoric.errors import InconsistentSystem, NonPositiveScalarCurvature, NotPositive
from emtoric.futaki import futaki_report
from emtoric.polytope import rectangle, square

from instances import calabi_instance, regular_instance, regular_sign_change_instance


def test_boundary_validation():
    with pytest.raises(ValueError):
        AmbitoricBoundary(1, 0, 0, 1, -1, 1, -1, 1)
    with pytest.raises(ValueError):
        AmbitoricBoundary(0, 1, 0, 1, 1, 1, -1, 1)
    with pytest.raises(ValueError):
        AmbitoricBoundary(0, 1, 2, 3, -1, 1, -1, 1).check_regular()


@pytest.mark.parametrize("orientation", ["+", "-"])
def test_regular_round_trip(orientation):
    rng = random.Random(3 if orientation == "+" else 4)
    bnd, q, p, R, rho, basis = regular_instance(rng, orientation)
    sol = solve_regular(bnd, q, p, orientation, basis)
    assert sol.residual == 0 and sol.rank == 8
    assert sol.ansatz.R == R and sol.ansatz.rho == rho
    assert sol.positive and sol.ansatz.em_consistent()


def test_regular_perturbation_is_inconsistent():
    rng = random.Random(5)
    bnd, q, p, _, _, basis = regular_instance(rng, "+")
    sol = solve_regular(bnd, q, p, "+", basis)
    pb = bnd.perturbed("r_alpha0", F(11, 10))
    with pytest.raises(InconsistentSystem) as exc:
        solve_regular(pb, q, p, "+", basis)
    assert exc.value.residual > 1e-9
    rep = futaki_report(induced_polytope(sol.ansatz, pb), sol.f)
    assert abs(float(rep.F_mu1)) + abs(float(rep.F_mu2)) > 1e-7


def test_regular_sign_change_witness():
    bnd, q, p = regular_sign_change_instance()
    with pytest.raises(NotPositive) as exc:
        solve_regular(bnd, q, p)
    assert exc.value.which == "B" and bnd.beta0 < exc.value.witness < bnd.beta_inf


def test_product_lebrun_square():
    lam = 4
    b = math.sqrt(1 - 2 / lam)
    sol = solve_product(boundary_from_rectangle(square(lam)), AffinePoly2(1, 0, b))
    assert sol.residual < 1e-10
    x = np.linspace(-1, 1, 7)
    A = np.array([float(sol.A(t)) for t in x])
    assert np.allclose(A, 1 - x ** 2, atol=1e-12)
    # the f-dependent factor is (1 - y^2)/lambda + k (1 - y^2)^2
    Bv = np.array([float(sol.B(t)) for t in x])
    extra = Bv - (1 - x ** 2) / lam
    inner = (1 - x ** 2) ** 2
    k = extra[3] / inner[3]
    assert np.allclose(extra, k * inner, atol=1e-12) and k != 0


def test_product_nonexistence():
    with pytest.raises(InconsistentSystem):
        solve_product(boundary_from_rectangle(square(1)), AffinePoly2(1, 0, F(1, 2)))


def test_product_csck_rectangle():
    sol = solve_product(boundary_from_rectangle(rectangle(0, 3, -1, 1)), AffinePoly2(1))
    assert sol.residual == 0
    assert sol.A.degree() <= 2 and sol.B.degree() <= 2


def test_calabi_round_trip_and_shift():
    rng = random.Random(8)
    bnd, al, A, B = calabi_instance(rng)
    sol = solve_calabi(bnd, al)
    assert sol.residual == 0 and sol.A == A and sol.B == B
    with pytest.raises(InconsistentSystem):
        solve_calabi(bnd, al + F(3, 10))


@pytest.mark.parametrize("P,verdict,witness", [
    (Poly4([1, 0, -1]), "positive", None),
    (Poly4([F(1, 4), -1, F(3, 4), 1, -1]), "vanishes", 0.5),  # (1 - x^2)(x - 1/2)^2
])
def test_positivity_examples(P, verdict, witness):
    for poly in (P, P.to_float()):
        rep = positivity_check(poly, (-1, 1))
        assert rep.verdict == verdict
        if witness is not None:
            assert rep.witness == pytest.approx(witness, abs=1e-6)


def test_positivity_against_dense_sampling():
    rng = random.Random(12)
    x = np.linspace(-1, 1, 10_001)[1:-1]
    for _ in range(30):
        P = Poly4([F(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(5)])
        vals = np.polynomial.polynomial.polyval(x, [float(c) for c in P.coeffs])
        rep = positivity_check(P, (-1, 1))
        if vals.min() < -1e-12:
            assert rep.verdict == "negative"
        elif vals.min() > 1e-6:
            assert rep.verdict == "positive"


def test_orthotoric_moment_parabola():
    tr = moment_transform(Quadric(1, 0, 0), (Quadric(0, 0, 1), Quadric(0, -1, 0)))
    for t in np.linspace(-2, 2, 9):
        m1, m2 = tr(t, t)
        assert m2 ** 2 == pytest.approx(4 * m1, abs=1e-12)


@pytest.mark.parametrize("orientation", ["+", "-"])
def test_coordinate_lines_map_to_facets(orientation):
    rng = random.Random(13)
    bnd, q, p, _, _, basis = regular_instance(rng, orientation)
    sol = solve_regular(bnd, q, p, orientation, basis)
    ans = sol.ansatz
    poly = sol.polytope
    basis_used = ans.basis if orientation == "+" else ans.p_basis
    tr = moment_transform(q, basis_used, orientation)
    for a in bnd.alphas:
        ys = np.linspace(float(bnd.beta0), float(bnd.beta_inf), 20)
        pts = np.array([tr(float(a), y) for y in ys])
        vals = np.array([[float(lab.f0) + float(lab.f1) * m[0] + float(lab.f2) * m[1] for lab in poly.labels]
                         for m in pts])
        assert np.min(np.max(np.abs(vals), axis=0)) < 1e-12


def test_em_scalar_flags():
    rng = random.Random(14)
    bnd, q, p, R, rho, basis = regular_instance(rng, "+")
    ans = RegularAnsatz(q, p, rho, R, "+", basis)
    es = em_scalar(ans, bnd)
    assert es.is_constant
    assert float(es.c) == pytest.approx(float(futaki_report(induced_polytope(ans, bnd), ans.f).c), rel=1e-8)
    bad = RegularAnsatz(q, p, rho, R + Poly4([1, -2, 3, 1, 2]), "+", basis)
    assert not bad.em_consistent() and not em_scalar(bad, bnd).is_constant


def test_duality_rejects_flat_scalar():
    with pytest.raises(NonPositiveScalarCurvature):
        duality_transform(Quadric(1, 0, 0), Quadric(0, 0, 0), Poly4([1, 1]))
