from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from velfree_nes.exceptions import NotStronglyMonotone
from velfree_nes.game import (
    CONNECTIVITY5_X0, eval_cost, game_constants, game_from_costs, game_from_jacobian,
    game_jacobian, pseudo_gradient,
)
from velfree_nes.testing import random_game


def fd_pseudo_gradient(game, x, h=1e-5):
    out = np.empty(game.dim)
    for i in range(game.n_players):
        for r in range(game.block(i).start, game.block(i).stop):
            e = np.zeros(game.dim)
            e[r] = h
            out[r] = (eval_cost(game, i, x + e) - eval_cost(game, i, x - e)) / (2 * h)
    return out


def test_constant_terms(game5):
    zero = np.zeros(10)
    assert eval_cost(game5, 0, zero) == 1.0
    assert eval_cost(game5, 2, zero) == 3.0
    assert eval_cost(game5, 4, zero) == 5.0


def test_gradient_at_zero(game5):
    np.testing.assert_array_equal(pseudo_gradient(game5, np.zeros(10)), [1, 1, 2, 3, 2, 2, 4, 4, 6, 6])


def test_jacobian_spot_entries(game5):
    H = game_jacobian(game5)
    assert H[0, 0] == 4.0
    assert H[0, 4] == -2.0  # x31 column
    np.testing.assert_array_equal(H, game5.jac)


def test_gradient_matches_finite_differences(game5, rng):
    for x in [np.zeros(10), np.array(CONNECTIVITY5_X0), rng.normal(size=10)]:
        np.testing.assert_allclose(pseudo_gradient(game5, x), fd_pseudo_gradient(game5, x), atol=1e-6)


def test_gradient_vanishes_at_equilibrium(game5, xstar5):
    assert np.max(np.abs(pseudo_gradient(game5, xstar5))) < 1e-9


def test_constants_values(constants5):
    assert constants5.n == 5
    assert constants5.m == pytest.approx(3.5155, abs=1e-4)
    assert constants5.h == pytest.approx(18.2729, abs=1e-4)
    assert constants5.max_l == pytest.approx(18.1108, abs=1e-4)


def test_monotonicity_sampling_witness(game5, constants5, rng):
    x = rng.normal(scale=3.0, size=(10_000, 10))
    y = rng.normal(scale=3.0, size=(10_000, 10))
    d = x - y
    dP = d @ game5.jac.T
    ratios = np.einsum("ij,ij->i", d, dP) / np.einsum("ij,ij->i", d, d)
    assert ratios.min() >= constants5.m - 1e-6


def test_lipschitz_witness(game5, constants5, rng):
    for _ in range(200):
        x, y = rng.normal(size=(2, 10))
        gap = np.linalg.norm(pseudo_gradient(game5, x) - pseudo_gradient(game5, y))
        assert gap <= constants5.h * np.linalg.norm(x - y) + 1e-9
        for i, li in enumerate(constants5.lipschitz):
            gi = game5.own_gradient(i, x) - game5.own_gradient(i, y)
            assert np.linalg.norm(gi) <= li * np.linalg.norm(x - y) + 1e-9


def test_not_strongly_monotone():
    game = game_from_jacobian(np.array([[1.0, -3.0], [0.0, 1.0]]), np.zeros(2))
    with pytest.raises(NotStronglyMonotone):
        game_constants(game)


def test_nonsymmetric_own_block_rejected():
    with pytest.raises(ValueError):
        game_from_jacobian(np.array([[1.0, 2.0], [0.0, 1.0]]), np.zeros(2), action_dims=(2,))


def test_cost_shape_checks():
    with pytest.raises(ValueError):
        game_from_costs((1, 1), [np.eye(2)], [np.zeros(2)], [0.0])
    with pytest.raises(ValueError):
        game_from_costs((1, 1), [np.eye(3), np.eye(3)], [np.zeros(2)] * 2, [0.0, 0.0])


def test_exact_rational_gradient(game5):
    # the game has integer coefficients, so P at a rational point is rational
    x = [Fraction(k, 7) for k in range(-5, 5)]
    H = game5.jac.astype(int)
    b = game5.offset.astype(int)
    exact = [sum(Fraction(int(H[r, c])) * x[c] for c in range(10)) + int(b[r]) for r in range(10)]
    np.testing.assert_allclose(pseudo_gradient(game5, np.array([float(v) for v in x])),
                               [float(v) for v in exact], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), vec=st.booleans())
def test_random_games_roundtrip(seed, n, vec):
    rng = np.random.default_rng(seed)
    dims = tuple(int(d) for d in rng.integers(1, 3, size=n)) if vec else None
    game = random_game(rng, n, dims)
    x = rng.normal(size=game.dim)
    np.testing.assert_allclose(pseudo_gradient(game, x), fd_pseudo_gradient(game, x), atol=1e-6)
    # rebuilding from (H, b) reproduces the same pseudo-gradient
    again = game_from_jacobian(game.jac, game.offset, game.action_dims)
    np.testing.assert_allclose(again.jac, game.jac, atol=1e-14)
    assert game_constants(game).m >= 0.5 - 1e-9
