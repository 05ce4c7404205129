"""Random strongly monotone games and connected graphs for property checks."""

from __future__ import annotations

import numpy as np

from .game import QuadraticGame, game_from_jacobian
from .graph import UndirectedGraph


def random_monotone_jacobian(rng: np.random.Generator, dim: int, m_min: float = 0.5) -> np.ndarray:
    """A nonsymmetric matrix whose symmetric part has smallest eigenvalue >= m_min."""
    S = rng.normal(size=(dim, dim))
    K = rng.normal(size=(dim, dim))
    sym = S @ S.T / dim + m_min * np.eye(dim)
    skew = 0.5 * (K - K.T)
    return sym + skew


def random_game(rng: np.random.Generator, n_players: int, action_dims=None, m_min: float = 0.5) -> QuadraticGame:
    dims = tuple(action_dims) if action_dims is not None else (1,) * n_players
    dim = sum(dims)
    H = random_monotone_jacobian(rng, dim, m_min)
    # own blocks must be symmetric for H to come from quadratic costs
    start = 0
    for d in dims:
        blk = slice(start, start + d)
        H[blk, blk] = 0.5 * (H[blk, blk] + H[blk, blk].T)
        start += d
    b = rng.normal(size=dim)
    return game_from_jacobian(H, b, dims)


def random_connected_graph(rng: np.random.Generator, n: int, extra_edge_prob: float = 0.3) -> UndirectedGraph:
    """Random spanning tree plus independent extra edges."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = order[rng.integers(k)]
        edges.add((int(parent), int(order[k])))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_edge_prob:
                edges.add((i, j))
    return UndirectedGraph(n, edges)
