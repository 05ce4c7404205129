"""Independent reference computations used by several test modules."""

from fractions import Fraction

import numpy as np


def fraction_solve(A, b):
    """Exact Gauss-Jordan solve of A x = b over the rationals."""
    n = len(b)
    M = [[Fraction(A[r][c]) for c in range(n)] + [Fraction(b[r])] for r in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def exact_equilibrium(game):
    """x* of a game with integer Jacobian and offset, as Fractions."""
    H = np.rint(game.jac).astype(int)
    b = np.rint(game.offset).astype(int)
    assert np.array_equal(H, game.jac) and np.array_equal(b, game.offset)
    return fraction_solve(H.tolist(), (-b).tolist())


def rk4_scalar_linear(lam, h):
    """One RK4 step multiplier for y' = lam y."""
    z = lam * h
    return 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
