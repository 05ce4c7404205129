"""Undirected communication graphs and the consensus matrix L (x) I + A0."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .exceptions import DisconnectedGraph


@dataclass(frozen=True)
class UndirectedGraph:
    """Unweighted undirected graph on nodes ``0..n-1``.

    Edges are stored as sorted pairs; duplicates collapse.
    """

    n: int
    edges: frozenset

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise ValueError("graph needs at least one node")
        norm = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} nodes")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def from_one_based(cls, n: int, edges: Iterable[Iterable[int]]) -> "UndirectedGraph":
        return cls(n, [(int(i) - 1, int(j) - 1) for i, j in edges])

    @classmethod
    def path(cls, n: int) -> "UndirectedGraph":
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def complete(cls, n: int) -> "UndirectedGraph":
        return cls(n, [(i, j) for i in range(n) for j in range(i + 1, n)])

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j in self.edges:
            A[i, j] = A[j, i] = 1.0
        return A

    def neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(sorted({b if a == i else a for a, b in self.edges if i in (a, b)}))

    @cached_property
    def neighbor_lists(self) -> tuple[tuple[int, ...], ...]:
        return tuple(self.neighbors(i) for i in range(self.n))

    def one_based_edges(self) -> list[list[int]]:
        return [[i + 1, j + 1] for i, j in sorted(self.edges)]


@dataclass(frozen=True)
class AugmentedSpectrum:
    lambda_min: float
    m_dim: int


def laplacian(g: UndirectedGraph) -> np.ndarray:
    A = g.adjacency()
    return np.diag(A.sum(axis=1)) - A


def is_connected(g: UndirectedGraph) -> bool:
    adj = {i: g.neighbors(i) for i in range(g.n)}
    seen = {0}
    queue = deque([0])
    while queue:
        for k in adj[queue.popleft()]:
            if k not in seen:
                seen.add(k)
                queue.append(k)
    return len(seen) == g.n


def observation_matrix(g: UndirectedGraph) -> np.ndarray:
    """A0: diagonal of a_11, a_12, ..., a_1N, a_21, ..., a_NN (row-major)."""
    return np.diag(g.adjacency().reshape(-1))


def consensus_matrix(g: UndirectedGraph, action_dims=None) -> np.ndarray:
    """``L (x) I_N + A0``, optionally lifted to per-player action blocks.

    With ``action_dims`` given, row/column (i, j) of the N^2 matrix becomes
    a block of size ``action_dims[j]``, matching a stacked estimate vector
    ``z = [z_1; ...; z_N]`` with each ``z_i`` a full action profile.
    """
    L = laplacian(g)
    A = g.adjacency()
    if action_dims is None:
        return np.kron(L, np.eye(g.n)) + observation_matrix(g)
    dims = tuple(int(d) for d in action_dims)
    if len(dims) != g.n:
        raise ValueError("need one action dimension per node")
    total = sum(dims)
    pinning = np.concatenate([np.repeat(A[i], dims) for i in range(g.n)])
    return np.kron(L, np.eye(total)) + np.diag(pinning)


def augmented_spectrum(g: UndirectedGraph) -> AugmentedSpectrum:
    if not is_connected(g):
        raise DisconnectedGraph(f"graph on {g.n} nodes with edges {sorted(g.edges)} is not connected")
    if g.n == 1:
        # a lone player never observes its own action through A0 (a_11 = 0)
        raise ValueError("distributed seeking needs at least two players")
    M = consensus_matrix(g)
    return AugmentedSpectrum(lambda_min=float(np.linalg.eigvalsh(M)[0]), m_dim=M.shape[0])
