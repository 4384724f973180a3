"""Small linear-algebra helpers with an exact (rational) and a float path."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np
import sympy as sp


def _all_exact(rows) -> bool:
    return all(isinstance(v, Rational) for row in rows for v in row)


def to_sympy(x):
    if isinstance(x, Rational):
        x = Fraction(x)
        return sp.Rational(x.numerator, x.denominator)
    return sp.Float(x)


def from_sympy(x):
    if x.is_Rational:
        return Fraction(int(x.p), int(x.q))
    return float(x)


def solve_square(mat: Sequence[Sequence], rhs: Sequence) -> list:
    """Solve a square system; exact when every entry is rational."""
    if _all_exact(mat) and _all_exact([rhs]):
        m = sp.Matrix([[to_sympy(v) for v in row] for row in mat])
        if m.det() == 0:
            raise np.linalg.LinAlgError("singular matrix")
        sol = m.LUsolve(sp.Matrix([to_sympy(v) for v in rhs]))
        return [from_sympy(v) for v in sol]
    a = np.array([[float(v) for v in row] for row in mat])
    b = np.array([float(v) for v in rhs])
    return list(np.linalg.solve(a, b))


def exact_consistent_solve(mat: Sequence[Sequence], rhs: Sequence):
    """Exact solve of an overdetermined system.

    Returns (solution or None, rank). The solution is None when the system is
    inconsistent or underdetermined.
    """
    m = sp.Matrix([[to_sympy(v) for v in row] for row in mat])
    b = sp.Matrix([to_sympy(v) for v in rhs])
    aug = m.row_join(b)
    rank = m.rank()
    if aug.rank() != rank or rank < m.shape[1]:
        return None, rank
    # full column rank and consistent: normal equations give the exact solution
    sol = (m.T * m).LUsolve(m.T * b)
    return [from_sympy(v) for v in sol], rank


def lstsq_residual(mat: Sequence[Sequence], rhs: Sequence):
    """Float least squares; returns (solution, relative residual, rank)."""
    a = np.array([[float(v) for v in row] for row in mat])
    b = np.array([float(v) for v in rhs])
    # column scaling keeps the conditioning reasonable
    norms = np.linalg.norm(a, axis=0)
    norms[norms == 0] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(a / norms, b, rcond=None)
    sol = sol / norms
    res = np.linalg.norm(a @ sol - b)
    scale = max(np.linalg.norm(b), 1e-300)
    return sol, float(res / scale), int(rank)
