import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import solve_continuous_lyapunov

from velfree_nes.exceptions import MissingGraph
from velfree_nes.gains import (
    DIST_FILTER, DIST_OBSERVER, FILTER, KINDS, OBSERVER, GainSet, filter_cross_matrix,
    lyapunov_solve_2x2, observer_error_matrix, synthesize, validate_gains, with_gain,
)
from velfree_nes.game import GameConstants
from velfree_nes.graph import UndirectedGraph, augmented_spectrum

TOY = GameConstants(m=1.0, h=2.0, lipschitz=(2.0,), n=1)


def test_coupling_term():
    assert TOY.coupling == 5.0


def test_observer_toy():
    g = synthesize(OBSERVER, TOY)
    assert g.eps == {"eps1": pytest.approx(0.2), "eps2": 1.0}
    assert g.k1 == pytest.approx(31.9)
    assert g.margins["rho2"] == pytest.approx(0.5)
    assert g.margins["rho1"] == pytest.approx(31.9 - 2 - 12.5 - 15.95)
    assert validate_gains(OBSERVER, g, TOY).certified


def test_filter_toy():
    g = synthesize(FILTER, TOY)
    assert g.eps["eps"] == pytest.approx(5.0)
    assert g.k1 == pytest.approx(15.95)
    assert g.k2 == pytest.approx(17.545)
    assert g.margins == pytest.approx({"rho_x": 0.5, "rho_v": 1.45, "rho_y": 1.595})
    assert g.rho == pytest.approx(0.5)


def test_dist_filter_toy():
    g = synthesize(DIST_FILTER, TOY, UndirectedGraph.path(2))
    assert g.k1 == pytest.approx(9.075)
    assert g.k2 == pytest.approx(9.9825)
    lam_a = 4.0375 - math.sqrt(3.0375**2 + 2.5**2)
    assert g.margins["lambda_A"] == pytest.approx(lam_a, abs=1e-12)
    np.testing.assert_allclose(filter_cross_matrix(TOY, 9.075), [[1, -2.5], [-2.5, 7.075]])


def test_dist_observer_toy():
    c = GameConstants(m=1.0, h=2.0, lipschitz=(2.0, 2.0), n=2)
    graph = UndirectedGraph.path(2)
    g = synthesize(DIST_OBSERVER, c, graph)
    lam = augmented_spectrum(graph).lambda_min
    e2 = g.eps["eps2"]
    bound = (math.sqrt(2) / 2 + 2 * 2 / (2 * e2) + g.k1**2 * 2 / 2) / lam
    assert g.k4 == pytest.approx(1.1 * bound)
    assert g.margins["rho2"] == pytest.approx(c.m / 2)
    assert all(v > 0 for v in g.margins.values())


def test_modest_gains_on_builtin(constants5):
    report = validate_gains(FILTER, {"k1": 5.0, "k2": 10.0}, constants5)
    assert report.status == "UNCERTIFIED"
    assert report.margins["rho_y"] == 5.0
    assert report.eps_source == "grid"


def test_k2_below_k1_uncertified():
    g = synthesize(FILTER, TOY)
    report = validate_gains(FILTER, with_gain(g, k2=0.9 * g.k1), TOY)
    assert report.margins["rho_y"] < 0
    assert not report.certified


def test_missing_graph():
    with pytest.raises(MissingGraph):
        synthesize(DIST_FILTER, TOY)
    with pytest.raises(MissingGraph):
        validate_gains(DIST_OBSERVER, {"k1": 1, "k2": 1, "k3": 1, "k4": 1}, TOY)


def test_nonpositive_gain_rejected():
    with pytest.raises(ValueError):
        validate_gains(FILTER, {"k1": 0.0, "k2": 1.0}, TOY)
    with pytest.raises(ValueError):
        synthesize(FILTER, TOY, margin=1.0)


def test_gainset_needs_its_gains():
    with pytest.raises(ValueError):
        GainSet(OBSERVER, k1=1.0, k2=1.0)


@pytest.mark.parametrize("kind", KINDS)
def test_margins_grow_with_margin_factor(kind):
    c = GameConstants(m=1.0, h=2.0, lipschitz=(2.0, 1.5), n=2)
    graph = UndirectedGraph.path(2)
    lo = synthesize(kind, c, graph, margin=1.1)
    hi = synthesize(kind, c, graph, margin=1.5)
    assert hi.k1 > lo.k1
    assert validate_gains(kind, hi, c, graph).certified


def test_lyapunov_closed_form_residual():
    for k2, k3 in [(2.0, 1.0), (10.0, 25.0), (0.3, 7.0)]:
        F = observer_error_matrix(k2, k3)
        P = lyapunov_solve_2x2(k2, k3)
        assert np.max(np.abs(P @ F + F.T @ P + np.eye(2))) < 1e-12
        np.testing.assert_allclose(P, solve_continuous_lyapunov(F.T, -np.eye(2)), atol=1e-12)
        assert np.all(np.linalg.eigvalsh(P) > 0)


def test_lyapunov_general_q():
    Q = np.array([[2.0, 0.3], [0.3, 1.0]])
    F = observer_error_matrix(3.0, 2.0)
    P = lyapunov_solve_2x2(3.0, 2.0, Q)
    assert np.max(np.abs(P @ F + F.T @ P + Q)) < 1e-12


def test_report_dict_is_plain_floats(constants5):
    d = validate_gains(FILTER, synthesize(FILTER, constants5), constants5).to_dict()
    assert all(type(v) is float for v in d["margins"].values())
    assert d["status"] == "CERTIFIED"


@settings(max_examples=25, deadline=None)
@given(m=st.floats(0.1, 5), extra=st.floats(0, 10), l=st.floats(0.1, 10))
def test_filter_synthesis_always_certified(m, extra, l):
    c = GameConstants(m=m, h=m + extra, lipschitz=(l,), n=1)
    g = synthesize(FILTER, c)
    assert validate_gains(FILTER, g, c).certified


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(KINDS),
    m=st.floats(0.2, 3),
    extra=st.floats(0, 5),
    l=st.floats(0.2, 5),
    lo=st.floats(1.01, 2.0),
    step=st.floats(0.01, 2.0),
)
def test_larger_margin_never_shrinks_rho(kind, m, extra, l, lo, step):
    c = GameConstants(m=m, h=m + extra, lipschitz=(l, l), n=2)
    graph = UndirectedGraph.path(2)
    a = synthesize(kind, c, graph, margin=lo)
    b = synthesize(kind, c, graph, margin=lo + step)
    for name, value in a.margins.items():
        assert b.margins[name] >= value * (1 - 1e-12) - 1e-12, name


@pytest.mark.parametrize("kind", KINDS)
def test_synthesized_observer_pair_hurwitz(kind, constants5):
    g = synthesize(kind, constants5, UndirectedGraph.path(5))
    if kind in (OBSERVER, DIST_OBSERVER):
        assert np.all(np.linalg.eigvals(observer_error_matrix(g.k2, g.k3)).real < 0)


def test_lyapunov_linear_in_q():
    Q = np.array([[2.0, 0.3], [0.3, 1.0]])
    np.testing.assert_allclose(lyapunov_solve_2x2(2.0, 1.0, 3.5 * Q), 3.5 * lyapunov_solve_2x2(2.0, 1.0, Q),
                               rtol=1e-14)
