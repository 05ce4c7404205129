"""Nash equilibrium oracles for quadratic games.

Two independent routes: a direct linear solve of ``H x = -b`` and a damped
Newton iteration on ``P(x) = 0``. Simulations are checked against these.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NoConvergence, SingularSystem
from .game import QuadraticGame, game_jacobian, pseudo_gradient


@dataclass(frozen=True)
class EquilibriumResult:
    x_star: np.ndarray
    residual: float
    method: str
    iterations: int = 0


def solve_quadratic(game: QuadraticGame, rtol: float = 1e-10) -> EquilibriumResult:
    H, b = game.jac, game.offset
    if np.linalg.cond(H) > 1e12:
        raise SingularSystem("game Jacobian is numerically singular")
    x = np.linalg.solve(H, -b)
    res = float(np.linalg.norm(pseudo_gradient(game, x)))
    if res > rtol * max(1.0, float(np.linalg.norm(b))):
        # one refinement pass; only matters for badly scaled games
        x = x - np.linalg.solve(H, pseudo_gradient(game, x))
        res = float(np.linalg.norm(pseudo_gradient(game, x)))
    return EquilibriumResult(x_star=x, residual=res, method="linear-solve")


def solve_newton(game: QuadraticGame, x0=None, tol: float = 1e-12, max_iter: int = 50) -> EquilibriumResult:
    """Damped Newton on the pseudo-gradient.

    The step is halved while ``||P||`` fails to decrease, down to a floor of
    2**-20 where the step is taken anyway.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    x = np.zeros(game.dim) if x0 is None else np.array(x0, dtype=float)
    r = pseudo_gradient(game, x)
    norm = float(np.linalg.norm(r))
    for it in range(max_iter + 1):
        if norm <= tol:
            return EquilibriumResult(x_star=x, residual=norm, method="newton", iterations=it)
        if it == max_iter:
            break
        try:
            step = np.linalg.solve(game_jacobian(game, x), -r)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        alpha = 1.0
        while True:
            x_new = x + alpha * step
            r_new = pseudo_gradient(game, x_new)
            n_new = float(np.linalg.norm(r_new))
            if n_new < norm or alpha <= 2.0**-20:
                break
            alpha *= 0.5
        x, r, norm = x_new, r_new, n_new
    raise NoConvergence(f"||P(x)|| = {norm:.3e} > {tol:.1e} after {max_iter} iterations")
