"""Closed-loop vector fields of the four velocity-free seeking strategies.

Each player is a double integrator ``x' = v, v' = u`` whose velocity is
never fed back. The control instead uses

* observer: a Luenberger-type estimate ``(xbar, vbar)`` of ``(x, v)``;
* filter: ``y = -xhat + k2 x`` with ``xhat' = -k2 xhat + k2^2 x``, i.e. a
  high-pass filter ``k2 s / (s + k2)`` of the position;
* dist-observer / dist-filter: the same, with the gradient evaluated at the
  player's own estimate ``z_i`` of the whole action profile, maintained by
  leader-following consensus over the communication graph.

Every scalar equation applies coordinate-wise within a player's block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import MissingGraph, WrongStrategyKind
from .gains import (
    DIST_FILTER, DIST_OBSERVER, DISTRIBUTED, FILTER, GAIN_NAMES, KINDS, OBSERVER, GainSet,
)
from .game import QuadraticGame, pseudo_gradient
from .graph import UndirectedGraph

# internal blocks carried by each strategy, in vector order after (x, v)
INTERNALS = {
    OBSERVER: ("xbar", "vbar"),
    FILTER: ("xhat",),
    DIST_OBSERVER: ("xbar", "vbar", "z"),
    DIST_FILTER: ("xhat", "z"),
}


@dataclass(frozen=True)
class ClosedLoopState:
    """Positions, velocities and the strategy's internal states.

    ``z`` is stored flat, player-major: ``z[i*D:(i+1)*D]`` is player i's
    estimate of the full profile.
    """

    kind: str
    x: np.ndarray
    v: np.ndarray
    xbar: Optional[np.ndarray] = None
    vbar: Optional[np.ndarray] = None
    xhat: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        D = x.shape[0]
        v = np.asarray(self.v, dtype=float)
        if v.shape != (D,):
            raise ValueError(f"v must have shape ({D},)")
        object.__setattr__(self, "v", v)
        wanted = INTERNALS[self.kind]
        for name in ("xbar", "vbar", "xhat", "z"):
            value = getattr(self, name)
            if name not in wanted:
                if value is not None:
                    raise ValueError(f"{self.kind} state has no {name} block")
                continue
            if value is None:
                raise ValueError(f"{self.kind} state needs a {name} block")
            value = np.asarray(value, dtype=float)
            if name != "z" and value.shape != (D,):
                raise ValueError(f"{name} must have shape ({D},)")
            if name == "z" and (value.ndim != 1 or value.size % D or value.size == 0):
                raise ValueError(f"z must be a flat vector of N*{D} entries")
            object.__setattr__(self, name, value)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def blocks(self) -> list[np.ndarray]:
        return [self.x, self.v] + [getattr(self, n) for n in INTERNALS[self.kind]]

    def as_vector(self) -> np.ndarray:
        return np.concatenate(self.blocks())

    @classmethod
    def from_vector(cls, kind: str, vec, dim: int, n_players: Optional[int] = None) -> "ClosedLoopState":
        vec = np.asarray(vec, dtype=float)
        names = ("x", "v") + INTERNALS[kind]
        sizes = [dim] * len(names)
        if "z" in names:
            if n_players is None:
                raise ValueError("n_players is required to unpack a distributed state")
            sizes[-1] = n_players * dim
        if vec.shape != (sum(sizes),):
            raise ValueError(f"{kind} state vector must have {sum(sizes)} entries, got {vec.shape}")
        parts = np.split(vec, np.cumsum(sizes)[:-1])
        return cls(kind, **dict(zip(names, parts)))

    def z_matrix(self) -> np.ndarray:
        if self.z is None:
            raise WrongStrategyKind(f"{self.kind} state carries no consensus estimates")
        return self.z.reshape(-1, self.dim)


def state_size(kind: str, dim: int, n_players: int) -> int:
    size = dim * (2 + len(INTERNALS[kind]))
    if kind in DISTRIBUTED:
        size += (n_players - 1) * dim
    return size


# -- helpers ----------------------------------------------------------------


def filter_output(xhat, x, k2: float) -> np.ndarray:
    """Velocity estimate ``y = -xhat + k2 x``."""
    return -np.asarray(xhat) + k2 * np.asarray(x)


def filter_estimator_rhs(xhat, x, k2: float) -> np.ndarray:
    """``xhat' = -k2 xhat + k2^2 x``, evaluated as ``k2 (k2 x - xhat)``."""
    # factored so the derivative is exactly zero when xhat = k2 x
    return k2 * (k2 * np.asarray(x) - np.asarray(xhat))


def observer_error(s: ClosedLoopState) -> np.ndarray:
    """Stacked observation error ``[xbar - x, vbar - v]``."""
    if s.xbar is None:
        raise WrongStrategyKind(f"{s.kind} state carries no observer")
    return np.concatenate([s.xbar - s.x, s.vbar - s.v])


def consensus_residual(s: ClosedLoopState) -> np.ndarray:
    """``z - 1_N (x) x``."""
    Z = s.z_matrix()
    return (Z - s.x[None, :]).reshape(-1)


def _estimate_gradient(game: QuadraticGame, Z: np.ndarray) -> np.ndarray:
    """Each player's own-block gradient evaluated at its own estimate z_i."""
    out = np.empty(game.dim)
    for i in range(game.n_players):
        rows = game.block(i)
        out[rows] = game.jac[rows, :] @ Z[i] + game.offset[rows]
    return out


def _check(game, s, kind):
    if s.kind != kind:
        raise WrongStrategyKind(f"expected a {kind} state, got {s.kind}")
    if s.dim != game.dim:
        raise ValueError(f"state dimension {s.dim} does not match game dimension {game.dim}")
    if s.z is not None and s.z.size != game.n_players * game.dim:
        raise ValueError("z must hold one full-profile estimate per player")


def _check_graph(game, graph):
    if graph is None:
        raise MissingGraph("distributed strategies need a communication graph")
    if graph.n != game.n_players:
        raise ValueError(f"graph has {graph.n} nodes but the game has {game.n_players} players")


def consensus_rhs(game: QuadraticGame, graph: UndirectedGraph, gain: float, s: ClosedLoopState) -> np.ndarray:
    """Leader-following consensus on the estimates, computed edge by edge.

    Player i only reads ``z_k`` for neighbours k and ``x_j`` for neighbours
    j; it pins its estimate of player j to the truth exactly when j is a
    neighbour (the ``a_ij`` term).
    """
    Z = s.z_matrix()
    dZ = np.empty_like(Z)
    for i, nbrs in enumerate(graph.neighbor_lists):
        acc = np.zeros(game.dim)
        for k in nbrs:
            acc += Z[i] - Z[k]
        for j in nbrs:
            blk = game.block(j)
            acc[blk] += Z[i, blk] - s.x[blk]
        dZ[i] = -gain * acc
    return dZ.reshape(-1)


# -- controls ----------------------------------------------------------------


def control(game: QuadraticGame, gains: GainSet, s: ClosedLoopState) -> np.ndarray:
    k1 = gains.k1
    if s.kind == OBSERVER:
        return -k1 * pseudo_gradient(game, s.x) - k1 * s.vbar
    if s.kind == FILTER:
        return -k1 * pseudo_gradient(game, s.x) - k1 * filter_output(s.xhat, s.x, gains.k2)
    grad = _estimate_gradient(game, s.z_matrix())
    if s.kind == DIST_OBSERVER:
        return -k1 * grad - k1 * s.vbar
    return -k1 * grad - k1 * filter_output(s.xhat, s.x, gains.k2)


# -- vector fields -----------------------------------------------------------


def observer_rhs(game: QuadraticGame, gains: GainSet, s: ClosedLoopState) -> ClosedLoopState:
    _check(game, s, OBSERVER)
    u = control(game, gains, s)
    err = s.xbar - s.x
    return ClosedLoopState(
        OBSERVER,
        x=s.v,
        v=u,
        xbar=-gains.k2 * err + s.vbar,
        vbar=-gains.k3 * err + u,
    )


def filter_rhs(game: QuadraticGame, gains: GainSet, s: ClosedLoopState) -> ClosedLoopState:
    _check(game, s, FILTER)
    return ClosedLoopState(
        FILTER,
        x=s.v,
        v=control(game, gains, s),
        xhat=filter_estimator_rhs(s.xhat, s.x, gains.k2),
    )


def dist_observer_rhs(game: QuadraticGame, graph: UndirectedGraph, gains: GainSet,
                      s: ClosedLoopState) -> ClosedLoopState:
    _check(game, s, DIST_OBSERVER)
    _check_graph(game, graph)
    u = control(game, gains, s)
    err = s.xbar - s.x
    return ClosedLoopState(
        DIST_OBSERVER,
        x=s.v,
        v=u,
        xbar=-gains.k2 * err + s.vbar,
        vbar=-gains.k3 * err + u,
        z=consensus_rhs(game, graph, gains.k4, s),
    )


def dist_filter_rhs(game: QuadraticGame, graph: UndirectedGraph, gains: GainSet,
                    s: ClosedLoopState) -> ClosedLoopState:
    # the consensus gain is k3 here, k4 in the observer variant
    _check(game, s, DIST_FILTER)
    _check_graph(game, graph)
    return ClosedLoopState(
        DIST_FILTER,
        x=s.v,
        v=control(game, gains, s),
        xhat=filter_estimator_rhs(s.xhat, s.x, gains.k2),
        z=consensus_rhs(game, graph, gains.k3, s),
    )


def init_state(kind: str, x0, game: QuadraticGame, gains: Optional[GainSet] = None,
               **overrides) -> ClosedLoopState:
    """Initial state with zero velocity and zero internals unless overridden.

    Overrides are keyed by block name (``v``, ``xbar``, ``vbar``, ``xhat``,
    ``z``). ``gains`` is accepted for symmetry with the vector fields; no
    default depends on it.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown strategy kind {kind!r}")
    x0 = np.array(x0, dtype=float)
    if x0.shape != (game.dim,):
        raise ValueError(f"x0 must have shape ({game.dim},), got {x0.shape}")
    unknown = set(overrides) - {"v", *INTERNALS[kind]}
    if unknown:
        raise ValueError(f"{kind} state has no blocks {sorted(unknown)}")
    blocks = {"v": np.zeros(game.dim)}
    for name in INTERNALS[kind]:
        size = game.n_players * game.dim if name == "z" else game.dim
        blocks[name] = np.zeros(size)
    for name, value in overrides.items():
        blocks[name] = np.array(value, dtype=float)
    return ClosedLoopState(kind, x=x0, **blocks)


def canonical_state(kind: str, x, game: QuadraticGame, gains: GainSet) -> ClosedLoopState:
    """State at rest at ``x`` with internals at their consistent values.

    Observer estimates equal the truth, the filter state makes ``y = 0``,
    and every consensus estimate equals ``x``. At ``x = x*`` this is the
    closed-loop equilibrium.
    """
    x = np.array(x, dtype=float)
    overrides = {}
    if kind in (OBSERVER, DIST_OBSERVER):
        overrides.update(xbar=x.copy(), vbar=np.zeros_like(x))
    if kind in (FILTER, DIST_FILTER):
        overrides["xhat"] = gains.k2 * x
    if kind in DISTRIBUTED:
        overrides["z"] = np.tile(x, game.n_players)
    return init_state(kind, x, game, gains, **overrides)


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    """A game, a strategy, its gains and (for networked strategies) a graph.

    ``rhs`` goes through the per-strategy functions above. ``vector_field``
    is the flat-array form used by the integrator: the same equations on
    views into one vector, with the neighbour sums and own-block gradient
    selection precomputed.
    """

    kind: str
    game: QuadraticGame
    gains: GainSet
    graph: Optional[UndirectedGraph] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        for name in GAIN_NAMES[self.kind]:
            if getattr(self.gains, name, None) is None:
                raise ValueError(f"{self.kind} needs gain {name}")
        if self.kind in DISTRIBUTED:
            _check_graph(self.game, self.graph)
            game = self.game
            own = np.zeros((game.n_players, game.dim), dtype=bool)
            pin = np.zeros((game.n_players, game.dim))
            for i in range(game.n_players):
                own[i, game.block(i)] = True
                for j in self.graph.neighbor_lists[i]:
                    pin[i, game.block(j)] = 1.0
            edges = sorted(self.graph.edges)
            heads = np.array([a for a, _ in edges], dtype=int)
            tails = np.array([b for _, b in edges], dtype=int)
            incidence = np.zeros((game.n_players, len(edges)))
            incidence[heads, np.arange(len(edges))] = 1.0
            incidence[tails, np.arange(len(edges))] = -1.0
            object.__setattr__(self, "_own", own)
            object.__setattr__(self, "_heads", heads)
            object.__setattr__(self, "_tails", tails)
            object.__setattr__(self, "_incidence", incidence)
            object.__setattr__(self, "_pin", pin)

    @property
    def state_size(self) -> int:
        return state_size(self.kind, self.game.dim, self.game.n_players)

    def rhs(self, s: ClosedLoopState) -> ClosedLoopState:
        if self.kind == OBSERVER:
            return observer_rhs(self.game, self.gains, s)
        if self.kind == FILTER:
            return filter_rhs(self.game, self.gains, s)
        if self.kind == DIST_OBSERVER:
            return dist_observer_rhs(self.game, self.graph, self.gains, s)
        return dist_filter_rhs(self.game, self.graph, self.gains, s)

    def unpack(self, vec) -> ClosedLoopState:
        return ClosedLoopState.from_vector(self.kind, vec, self.game.dim, self.game.n_players)

    def _control_flat(self, y):
        D, g = self.game.dim, self.gains
        x = y[:D]
        if self.kind in DISTRIBUTED:
            Z = y[(4 if self.kind == DIST_OBSERVER else 3) * D :].reshape(-1, D)
            grad = (Z @ self.game.jac.T)[self._own] + self.game.offset
        else:
            grad = self.game.jac @ x + self.game.offset
        if self.kind in (OBSERVER, DIST_OBSERVER):
            estimate = y[3 * D : 4 * D]
        else:
            estimate = filter_output(y[2 * D : 3 * D], x, g.k2)
        return -g.k1 * grad - g.k1 * estimate

    def vector_field(self, t: float, y: np.ndarray) -> np.ndarray:
        D, g = self.game.dim, self.gains
        x, v = y[:D], y[D : 2 * D]
        u = self._control_flat(y)
        out = np.empty_like(y)
        out[:D] = v
        out[D : 2 * D] = u
        if self.kind in (OBSERVER, DIST_OBSERVER):
            err = y[2 * D : 3 * D] - x
            out[2 * D : 3 * D] = -g.k2 * err + y[3 * D : 4 * D]
            out[3 * D : 4 * D] = -g.k3 * err + u
            zstart, kz = 4 * D, g.k4
        else:
            out[2 * D : 3 * D] = filter_estimator_rhs(y[2 * D : 3 * D], x, g.k2)
            zstart, kz = 3 * D, g.k3
        if self.kind in DISTRIBUTED:
            Z = y[zstart:].reshape(-1, D)
            # row i: sum over neighbours k of (z_i - z_k) plus pinning to x_j
            # for neighbours j; edge differences keep agreement exactly zero
            acc = self._incidence @ (Z[self._heads] - Z[self._tails]) + self._pin * (Z - x[None, :])
            out[zstart:] = -kz * acc.reshape(-1)
        return out

    def control_of(self, y: np.ndarray) -> np.ndarray:
        return self._control_flat(np.asarray(y, dtype=float))

    def init_state(self, x0, **overrides) -> ClosedLoopState:
        return init_state(self.kind, x0, self.game, self.gains, **overrides)

    def canonical_state(self, x) -> ClosedLoopState:
        return canonical_state(self.kind, x, self.game, self.gains)
