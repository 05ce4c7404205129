import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from velfree_nes.exceptions import MissingGraph, WrongStrategyKind
from velfree_nes.gains import DIST_FILTER, DIST_OBSERVER, FILTER, KINDS, OBSERVER, GainSet, synthesize
from velfree_nes.game import CONNECTIVITY5_X0, game_constants, pseudo_gradient
from velfree_nes.graph import UndirectedGraph, consensus_matrix
from velfree_nes.sim import SimConfig, integrate_rk4, simulate
from velfree_nes.strategies import (
    ClosedLoop, ClosedLoopState, canonical_state, consensus_residual, consensus_rhs, control,
    filter_estimator_rhs, filter_output, init_state, observer_error, state_size,
)
from velfree_nes.testing import random_connected_graph, random_game

from oracles import exact_equilibrium

P5 = UndirectedGraph.path(5)
MODEST = {
    OBSERVER: GainSet(OBSERVER, k1=2.0, k2=10.0, k3=25.0),
    FILTER: GainSet(FILTER, k1=2.0, k2=10.0),
    DIST_OBSERVER: GainSet(DIST_OBSERVER, k1=2.0, k2=10.0, k3=25.0, k4=400.0),
    DIST_FILTER: GainSet(DIST_FILTER, k1=2.0, k2=10.0, k3=500.0),
}


def _loop(kind, game, gains=None, graph=P5):
    return ClosedLoop(kind, game, gains or MODEST[kind], graph if kind in (DIST_OBSERVER, DIST_FILTER) else None)


def test_initial_state_is_zero_internals(game5):
    s = init_state(OBSERVER, CONNECTIVITY5_X0, game5)
    assert np.array_equal(s.x, CONNECTIVITY5_X0)
    assert not s.v.any() and not s.xbar.any() and not s.vbar.any()
    s = init_state(DIST_FILTER, CONNECTIVITY5_X0, game5)
    assert s.z.shape == (50,) and not s.z.any()


def test_initial_control_spot_value(game5):
    gains = GainSet(OBSERVER, k1=1.0, k2=1.0, k3=1.0)
    s = init_state(OBSERVER, CONNECTIVITY5_X0, game5)
    u = control(game5, gains, s)
    np.testing.assert_allclose(u, -pseudo_gradient(game5, np.array(CONNECTIVITY5_X0)))
    assert u[0] == pytest.approx(3.0)


@pytest.mark.parametrize("kind", KINDS)
def test_state_vector_roundtrip(game5, kind):
    rng = np.random.default_rng(1)
    n = state_size(kind, 10, 5)
    vec = rng.normal(size=n)
    s = ClosedLoopState.from_vector(kind, vec, 10, 5)
    assert np.array_equal(s.as_vector(), vec)


@pytest.mark.parametrize("kind", KINDS)
def test_fast_field_matches_reference(game5, kind):
    rng = np.random.default_rng(2)
    loop = _loop(kind, game5)
    y = rng.normal(size=loop.state_size)
    ref = loop.rhs(loop.unpack(y)).as_vector()
    np.testing.assert_allclose(loop.vector_field(0.0, y), ref, rtol=0, atol=1e-11)
    np.testing.assert_allclose(loop.control_of(y), control(game5, loop.gains, loop.unpack(y)), atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_fixed_point_at_exact_equilibrium(game5, kind):
    xstar = np.array([float(v) for v in exact_equilibrium(game5)])
    loop = _loop(kind, game5)
    s = loop.canonical_state(xstar)
    assert np.max(np.abs(loop.rhs(s).as_vector())) < 1e-12
    assert np.max(np.abs(loop.vector_field(0.0, s.as_vector()))) < 1e-12


def test_observer_error_is_autonomous(game5, rng):
    other = random_game(rng, 5, (2,) * 5)
    k = dict(k1=2.0, k2=10.0, k3=25.0)
    cfg = SimConfig(dt=0.002, t_end=1.0, record_stride=50)
    xi0 = np.concatenate([np.full(10, 0.7), np.full(10, -0.4)])
    errs = []
    for game, x0 in [(game5, np.array(CONNECTIVITY5_X0)), (other, rng.normal(size=10))]:
        loop = ClosedLoop(OBSERVER, game, GainSet(OBSERVER, **k))
        s0 = loop.init_state(x0, xbar=x0 + xi0[:10], vbar=xi0[10:])
        traj = simulate(loop, s0, cfg)
        errs.append(np.array([observer_error(traj.state(n)) for n in range(len(traj))]))
    np.testing.assert_allclose(errs[0], errs[1], atol=1e-12)


def test_filter_estimates_ramp_velocity():
    k2 = 4.0
    for c in (-2.0, 1.0, 5.0):
        rhs = lambda t, xh: filter_estimator_rhs(xh, c * t, k2)
        traj = integrate_rk4(rhs, np.zeros(1), SimConfig(dt=1e-3, t_end=10 / k2))
        y = filter_output(traj.states[-1], c * traj.times[-1], k2)
        assert abs(y[0] - c) < 0.01 * abs(c)


@pytest.mark.parametrize("gain", [1.0, 400.0])
def test_consensus_matches_kronecker_form(game5, gain, rng):
    s = init_state(DIST_OBSERVER, rng.normal(size=10), game5, z=rng.normal(size=50))
    edgewise = consensus_rhs(game5, P5, gain, s)
    # scalar coordinates per player pair, lifted over each 2-d action block
    M = consensus_matrix(P5, game5.action_dims)
    matrix = -gain * M @ consensus_residual(s)
    np.testing.assert_allclose(edgewise, matrix, atol=1e-12 * gain)


def test_consensus_matches_kronecker_form_scalar(rng):
    game = random_game(rng, 4)
    g = random_connected_graph(rng, 4)
    s = init_state(DIST_FILTER, rng.normal(size=4), game, z=rng.normal(size=16))
    M = consensus_matrix(g)
    np.testing.assert_allclose(consensus_rhs(game, g, 3.0, s), -3.0 * M @ consensus_residual(s), atol=1e-12)


def test_consensus_is_local(game5, rng):
    s = init_state(DIST_OBSERVER, rng.normal(size=10), game5, z=rng.normal(size=50))
    base = consensus_rhs(game5, P5, 1.0, s).reshape(5, 10)
    # player 1 (index 0) neighbours only player 2; move player 4's data
    z = s.z.copy().reshape(5, 10)
    z[3] += 1.0
    x = s.x.copy()
    x[game5.block(3)] += 1.0
    moved = consensus_rhs(game5, P5, 1.0, init_state(DIST_OBSERVER, x, game5, z=z.reshape(-1))).reshape(5, 10)
    np.testing.assert_array_equal(moved[0], base[0])
    assert not np.allclose(moved[2], base[2])


def test_wrong_kind_and_missing_graph(game5):
    s = init_state(FILTER, CONNECTIVITY5_X0, game5)
    with pytest.raises(WrongStrategyKind):
        observer_error(s)
    with pytest.raises(WrongStrategyKind):
        consensus_residual(s)
    with pytest.raises(MissingGraph):
        ClosedLoop(DIST_FILTER, game5, MODEST[DIST_FILTER])
    with pytest.raises(ValueError):
        init_state(FILTER, CONNECTIVITY5_X0, game5, xbar=np.zeros(10))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4), kind=st.sampled_from(KINDS))
def test_fixed_point_on_random_games(seed, n, kind):
    rng = np.random.default_rng(seed)
    game = random_game(rng, n)
    graph = random_connected_graph(rng, n)
    gains = synthesize(kind, game_constants(game), graph)
    loop = ClosedLoop(kind, game, gains, graph if kind in (DIST_OBSERVER, DIST_FILTER) else None)
    xstar = np.linalg.solve(game.jac, -game.offset)
    field = loop.rhs(canonical_state(kind, xstar, game, gains)).as_vector()
    # residual scales with the gains times the rounding error of x*
    assert np.max(np.abs(field)) < 1e-9 * max(1.0, gains.k_max)
