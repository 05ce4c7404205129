"""Quadratic games: costs, pseudo-gradient, game Jacobian and the constants
(m, h, l_i) consumed by the gain rules.

Actions are stacked player-major, coordinate-minor: for two-dimensional
actions the profile is ``[x11, x12, x21, x22, ...]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import NotStronglyMonotone


@dataclass(frozen=True, eq=False)
class QuadraticGame:
    """N-player game with costs ``f_i(x) = x^T A_i x + beta_i^T x + c_i``.

    ``jac`` (the game Jacobian H) and ``offset`` (b) are derived from the
    costs so that the pseudo-gradient is ``P(x) = H x + b``.
    """

    action_dims: tuple[int, ...]
    cost_quads: tuple[np.ndarray, ...]
    cost_lins: tuple[np.ndarray, ...]
    cost_consts: tuple[float, ...]
    jac: np.ndarray = field(init=False, repr=False)
    offset: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.action_dims)
        if not dims:
            raise ValueError("a game needs at least one player")
        if any(d < 1 for d in dims):
            raise ValueError(f"action dimensions must be >= 1, got {dims}")
        n, total = len(dims), sum(dims)
        if not (len(self.cost_quads) == len(self.cost_lins) == len(self.cost_consts) == n):
            raise ValueError("need one (quad, lin, const) triple per player")

        quads, lins = [], []
        for i in range(n):
            A = np.array(self.cost_quads[i], dtype=float)
            beta = np.array(self.cost_lins[i], dtype=float).reshape(-1)
            if A.shape != (total, total):
                raise ValueError(f"player {i + 1}: quad must be {total}x{total}, got {A.shape}")
            if beta.shape != (total,):
                raise ValueError(f"player {i + 1}: lin must have length {total}")
            A.setflags(write=False)
            beta.setflags(write=False)
            quads.append(A)
            lins.append(beta)

        starts = np.concatenate(([0], np.cumsum(dims)))
        H = np.zeros((total, total))
        b = np.zeros(total)
        for i in range(n):
            rows = slice(starts[i], starts[i + 1])
            A = quads[i]
            H[rows, :] = (A + A.T)[rows, :]
            b[rows] = lins[i][rows]
        H.setflags(write=False)
        b.setflags(write=False)

        object.__setattr__(self, "action_dims", dims)
        object.__setattr__(self, "cost_quads", tuple(quads))
        object.__setattr__(self, "cost_lins", tuple(lins))
        object.__setattr__(self, "cost_consts", tuple(float(c) for c in self.cost_consts))
        object.__setattr__(self, "jac", H)
        object.__setattr__(self, "offset", b)
        object.__setattr__(self, "_starts", tuple(int(s) for s in starts))

    @property
    def n_players(self) -> int:
        return len(self.action_dims)

    @property
    def dim(self) -> int:
        """Total action dimension D."""
        return self._starts[-1]

    def block(self, i: int) -> slice:
        """Index range of player ``i`` (0-based) inside a stacked profile."""
        self._check_player(i)
        return slice(self._starts[i], self._starts[i + 1])

    def own_gradient(self, i: int, point) -> np.ndarray:
        """Gradient of f_i with respect to x_i, evaluated at ``point``."""
        rows = self.block(i)
        point = self._check_profile(point)
        return self.jac[rows, :] @ point + self.offset[rows]

    def _check_player(self, i):
        if not 0 <= i < self.n_players:
            raise IndexError(f"player index {i} out of range for {self.n_players} players")

    def _check_profile(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"action profile must have shape ({self.dim},), got {x.shape}")
        return x


@dataclass(frozen=True)
class GameConstants:
    m: float
    h: float
    lipschitz: tuple[float, ...]
    n: int

    @property
    def max_l(self) -> float:
        return max(self.lipschitz)

    @property
    def coupling(self) -> float:
        """The recurring gain-rule term ``h * sqrt(N) * max_i l_i + 1``."""
        return self.h * math.sqrt(self.n) * self.max_l + 1.0


def eval_cost(game: QuadraticGame, i: int, x) -> float:
    game._check_player(i)
    x = game._check_profile(x)
    return float(x @ game.cost_quads[i] @ x + game.cost_lins[i] @ x + game.cost_consts[i])


def pseudo_gradient(game: QuadraticGame, x) -> np.ndarray:
    x = game._check_profile(x)
    return game.jac @ x + game.offset


def game_jacobian(game: QuadraticGame, x=None) -> np.ndarray:
    """The game Jacobian H; constant for quadratic games, so ``x`` only gets shape-checked."""
    if x is not None:
        game._check_profile(x)
    return game.jac.copy()


def game_constants(game: QuadraticGame) -> GameConstants:
    H = game.jac
    m = float(np.linalg.eigvalsh(0.5 * (H + H.T))[0])
    if m <= 0:
        raise NotStronglyMonotone(
            f"smallest eigenvalue of the symmetric Jacobian part is {m:.6g} <= 0"
        )
    h = float(np.linalg.norm(H, 2))
    lips = tuple(float(np.linalg.norm(H[game.block(i), :], 2)) for i in range(game.n_players))
    return GameConstants(m=m, h=h, lipschitz=lips, n=game.n_players)


def game_from_costs(
    action_dims: Sequence[int],
    quads: Sequence,
    lins: Sequence,
    consts: Sequence[float],
) -> QuadraticGame:
    return QuadraticGame(tuple(action_dims), tuple(quads), tuple(lins), tuple(consts))


def game_from_jacobian(jac, offset, action_dims: Sequence[int] | None = None) -> QuadraticGame:
    """Build a game whose pseudo-gradient is ``jac @ x + offset``.

    Player i's cost carries row-block i of ``jac``; this reproduces the
    pseudo-gradient but is only one of many costs that do.
    """
    H = np.asarray(jac, dtype=float)
    b = np.asarray(offset, dtype=float).reshape(-1)
    total = H.shape[0]
    if H.shape != (total, total) or b.shape != (total,):
        raise ValueError("jac must be square and offset must match its size")
    dims = tuple(action_dims) if action_dims is not None else (1,) * total
    if sum(dims) != total:
        raise ValueError("action_dims must sum to the Jacobian size")
    starts = np.concatenate(([0], np.cumsum(dims)))
    quads, lins = [], []
    for i in range(len(dims)):
        rows = slice(starts[i], starts[i + 1])
        own = H[rows, rows]
        if not np.allclose(own, own.T):
            raise ValueError(f"player {i + 1}: own block of jac must be symmetric")
        # x^T A x differentiates to (A + A^T) x, so cross terms go in once and
        # the own block is halved.
        A = np.zeros((total, total))
        A[rows, :] = H[rows, :]
        A[rows, rows] = 0.5 * own
        beta = np.zeros(total)
        beta[rows] = b[rows]
        quads.append(A)
        lins.append(beta)
    return QuadraticGame(dims, tuple(quads), tuple(lins), (0.0,) * len(dims))


# Five mobile sensors, each in the plane. Per player: (a1, b1, a2, b2, const)
# for a1*x_i1^2 + b1*x_i1 + a2*x_i2^2 + b2*x_i2 + const, plus the partner j in
# the coupling term ||x_i - x_j||^2.
_CONNECTIVITY5 = (
    ((1.0, 1.0, 2.0, 1.0, 1.0), 3),
    ((3.0, 2.0, 3.0, 3.0, 2.0), 3),
    ((5.0, 2.0, 5.0, 2.0, 3.0), 1),
    ((6.0, 4.0, 6.0, 4.0, 4.0), 2),
    ((8.0, 6.0, 8.0, 6.0, 5.0), 4),
)

CONNECTIVITY5_X0 = (-0.5, 0.5, -1.0, 0.0, 1.0, 0.0, 0.0, -1.0, -1.0, -1.5)

CONNECTIVITY5_PUBLISHED_NE = (
    -0.363, -0.235, -0.307, -0.426, -0.227, -0.206, -0.329, -0.347, -0.370, -0.372,
)


def builtin_connectivity_game() -> QuadraticGame:
    """The five-player sensor connectivity game with planar actions (D = 10)."""
    n, d = len(_CONNECTIVITY5), 2
    total = n * d
    quads, lins, consts = [], [], []
    for i, ((a1, b1, a2, b2, c), partner) in enumerate(_CONNECTIVITY5):
        j = partner - 1
        A = np.zeros((total, total))
        beta = np.zeros(total)
        for k, (a, lin) in enumerate(((a1, b1), (a2, b2))):
            p, q = i * d + k, j * d + k
            A[p, p] += a + 1.0
            A[q, q] += 1.0
            A[p, q] -= 1.0
            A[q, p] -= 1.0
            beta[p] = lin
        quads.append(A)
        lins.append(beta)
        consts.append(c)
    return QuadraticGame((d,) * n, tuple(quads), tuple(lins), tuple(consts))


BUILTIN_GAMES = {"connectivity5": builtin_connectivity_game}
