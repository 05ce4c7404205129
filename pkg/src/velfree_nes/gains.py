"""Gain synthesis and certification for the four seeking strategies.

Every rule here is a strict inequality in the game constants (m, h, l_i, N)
and, for the networked strategies, the smallest eigenvalue of the consensus
matrix ``L (x) I + A0``. Synthesis picks the free epsilon constants at a fixed
point of their feasible interval and scales each lower bound by ``margin``.
Validation re-evaluates the resulting stability margins (the rho terms) for
arbitrary gains.

Throughout, ``c`` denotes ``h * sqrt(N) * max_i l_i + 1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .exceptions import MissingGraph
from .game import GameConstants
from .graph import UndirectedGraph, augmented_spectrum

OBSERVER = "observer"
FILTER = "filter"
DIST_OBSERVER = "dist-observer"
DIST_FILTER = "dist-filter"
KINDS = (OBSERVER, FILTER, DIST_OBSERVER, DIST_FILTER)
DISTRIBUTED = (DIST_OBSERVER, DIST_FILTER)

# gains used by each strategy; observer-pair gains k2, k3 only need positivity
GAIN_NAMES = {
    OBSERVER: ("k1", "k2", "k3"),
    FILTER: ("k1", "k2"),
    DIST_OBSERVER: ("k1", "k2", "k3", "k4"),
    DIST_FILTER: ("k1", "k2", "k3"),
}

DEFAULT_MARGIN = 1.1


@dataclass(frozen=True)
class GainSet:
    kind: str
    k1: float
    k2: float
    k3: Optional[float] = None
    k4: Optional[float] = None
    eps: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        for name in GAIN_NAMES[self.kind]:
            if getattr(self, name) is None:
                raise ValueError(f"{self.kind} strategy needs gain {name}")
        for name in ("k1", "k2", "k3", "k4"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, float(value))

    def values(self) -> dict:
        return {name: getattr(self, name) for name in GAIN_NAMES[self.kind]}

    @property
    def k_max(self) -> float:
        return max(self.values().values())

    @property
    def rho(self) -> float:
        return min(self.margins.values()) if self.margins else float("nan")


@dataclass(frozen=True)
class MarginReport:
    kind: str
    gains: dict
    eps: dict
    eps_source: str
    margins: dict
    bounds: dict
    lambda_min: Optional[float] = None

    @property
    def certified(self) -> bool:
        return all(v > 0 for v in self.margins.values())

    @property
    def status(self) -> str:
        return "CERTIFIED" if self.certified else "UNCERTIFIED"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "status": self.status,
            "gains": dict(self.gains),
            "eps": dict(self.eps),
            "eps_source": self.eps_source,
            "margins": dict(self.margins),
            "bounds": dict(self.bounds),
            "lambda_min": self.lambda_min,
        }


# -- margin formulas -------------------------------------------------------


def _observer_terms(k, eps, c: GameConstants):
    cc = c.coupling
    e1, e2 = eps["eps1"], eps["eps2"]
    margins = {
        "rho1": k["k1"] - c.h - cc / (2 * e1) - k["k1"] / (2 * e2),
        "rho2": c.m - cc * e1 / 2,
        "observer_hurwitz": min(k["k2"], k["k3"]),
    }
    bounds = {
        "k1": e2 * (2 * e1 * c.h + cc) / (e1 * (2 * e2 - 1)) if e2 > 0.5 else math.inf,
        "k2": 0.0,
        "k3": 0.0,
    }
    return margins, bounds


def _filter_terms(k, eps, c: GameConstants):
    cc = c.coupling
    e = eps["eps"]
    margins = {
        "rho_x": c.m - cc / (2 * e),
        "rho_v": k["k1"] - c.h - e * cc / 2,
        "rho_y": k["k2"] - k["k1"],
    }
    bounds = {"k1": c.h + e * cc / 2, "k2": k["k1"]}
    return margins, bounds


def _dist_observer_terms(k, eps, c: GameConstants, lam: float):
    cc, n, lmax = c.coupling, c.n, c.max_l
    e1, e2, e3 = eps["eps1"], eps["eps2"], eps["eps3"]
    sq = math.sqrt(n)
    base1 = c.h + cc / (2 * e1) + (sq + lmax) / 2
    consensus = sq / 2 + n * lmax / (2 * e2) + k["k1"] ** 2 * lmax / 2
    margins = {
        "rho1": k["k1"] - base1 - k["k1"] / (2 * e3),
        "rho2": c.m - cc * e1 / 2 - n * lmax * e2 / 2,
        "rho3": k["k4"] * lam - consensus,
        "observer_hurwitz": min(k["k2"], k["k3"]),
    }
    bounds = {
        "k1": 2 * e3 / (2 * e3 - 1) * base1 if e3 > 0.5 else math.inf,
        "k2": 0.0,
        "k3": 0.0,
        "k4": consensus / lam,
    }
    return margins, bounds


def filter_cross_matrix(c: GameConstants, k1: float) -> np.ndarray:
    """The 2x2 matrix A coupling ||x - x*|| and ||v + P(x)|| in the networked filter rule."""
    off = -c.coupling / 2
    return np.array([[c.m, off], [off, k1 - c.h]])


def _dist_filter_terms(k, c: GameConstants, lam: float):
    n, lmax = c.n, c.max_l
    lam_a = float(np.linalg.eigvalsh(filter_cross_matrix(c, k["k1"]))[0])
    mu = min(lam_a, k["k2"] - k["k1"])
    chi = (2 * k["k1"] * lmax + math.sqrt(n) + n * lmax) / 2
    A1 = np.array([[mu, -chi], [-chi, k["k3"] * lam]])
    margins = {
        "lambda_A": lam_a,
        "rho_y": k["k2"] - k["k1"],
        "rho_z": float(np.linalg.eigvalsh(A1)[0]),
    }
    bounds = {
        "k1": c.coupling**2 / (4 * c.m) + c.h,
        "k2": k["k1"],
        "k3": chi**2 / (mu * lam) if mu > 0 else math.inf,
    }
    return margins, bounds


def _terms(kind, k, eps, c, lam):
    if kind == OBSERVER:
        margins, bounds = _observer_terms(k, eps, c)
    elif kind == FILTER:
        margins, bounds = _filter_terms(k, eps, c)
    elif kind == DIST_OBSERVER:
        margins, bounds = _dist_observer_terms(k, eps, c, lam)
    else:
        margins, bounds = _dist_filter_terms(k, c, lam)
    return _floats(margins), _floats(bounds)


def _floats(d):
    return {key: float(v) for key, v in d.items()}


def _lambda_min(g: Optional[UndirectedGraph]) -> float:
    return augmented_spectrum(g).lambda_min


# -- synthesis -------------------------------------------------------------


def _check_margin(margin):
    if not margin > 1:
        raise ValueError(f"margin must exceed 1, got {margin}")


def synth_observer_gains(c: GameConstants, margin: float = DEFAULT_MARGIN) -> GainSet:
    """Certified gains for the centralized observer strategy.

    eps1 sits at half its upper bound ``2m / c`` and eps2 = 1; the observer
    pair is k2 = k3 = 1 (any positive pair is Hurwitz).
    """
    _check_margin(margin)
    eps = {"eps1": float(c.m / c.coupling), "eps2": 1.0}
    k = {"k1": 0.0, "k2": 1.0, "k3": 1.0}
    k["k1"] = margin * _terms(OBSERVER, k, eps, c, None)[1]["k1"]
    margins, _ = _terms(OBSERVER, k, eps, c, None)
    return GainSet(OBSERVER, eps=eps, margins=margins, **k)


def synth_filter_gains(c: GameConstants, margin: float = DEFAULT_MARGIN) -> GainSet:
    """eps at twice its lower bound ``c / 2m``; k1, then k2, scaled by ``margin``."""
    _check_margin(margin)
    eps = {"eps": float(c.coupling / c.m)}
    k1 = margin * (c.h + eps["eps"] * c.coupling / 2)
    k = {"k1": k1, "k2": margin * k1}
    margins, _ = _terms(FILTER, k, eps, c, None)
    return GainSet(FILTER, eps=eps, margins=margins, **k)


def synth_dist_observer_gains(
    c: GameConstants, g: UndirectedGraph, margin: float = DEFAULT_MARGIN
) -> GainSet:
    """Certified gains for the networked observer strategy.

    eps1 and eps2 each use a quarter of the strong-monotonicity budget m,
    leaving rho2 = m / 2; eps3 = 1. k1 is set first, then k4 from the
    resulting k1 and the consensus eigenvalue.
    """
    _check_margin(margin)
    lam = _lambda_min(g)
    eps = {
        "eps1": float(c.m / (2 * c.coupling)),
        "eps2": float(c.m / (2 * c.n * c.max_l)) if c.max_l > 0 else 1.0,
        "eps3": 1.0,
    }
    k = {"k1": 0.0, "k2": 1.0, "k3": 1.0, "k4": 0.0}
    k["k1"] = margin * _terms(DIST_OBSERVER, k, eps, c, lam)[1]["k1"]
    k["k4"] = margin * _terms(DIST_OBSERVER, k, eps, c, lam)[1]["k4"]
    margins, _ = _terms(DIST_OBSERVER, k, eps, c, lam)
    return GainSet(DIST_OBSERVER, eps=eps, margins=margins, **k)


def synth_dist_filter_gains(
    c: GameConstants, g: UndirectedGraph, margin: float = DEFAULT_MARGIN
) -> GainSet:
    _check_margin(margin)
    lam = _lambda_min(g)
    k1 = margin * (c.coupling**2 / (4 * c.m) + c.h)
    k = {"k1": k1, "k2": margin * k1, "k3": 0.0}
    lam_a = float(np.linalg.eigvalsh(filter_cross_matrix(c, k1))[0])
    if lam_a <= 0:
        raise AssertionError(f"cross matrix not positive definite (lambda_min={lam_a:.3e})")
    k["k3"] = margin * _terms(DIST_FILTER, k, {}, c, lam)[1]["k3"]
    margins, _ = _terms(DIST_FILTER, k, {}, c, lam)
    return GainSet(DIST_FILTER, margins=margins, **k)


def synthesize(kind: str, c: GameConstants, g: Optional[UndirectedGraph] = None,
               margin: float = DEFAULT_MARGIN) -> GainSet:
    if kind in DISTRIBUTED and g is None:
        raise MissingGraph(f"{kind} gains need a communication graph")
    if kind == OBSERVER:
        return synth_observer_gains(c, margin)
    if kind == FILTER:
        return synth_filter_gains(c, margin)
    if kind == DIST_OBSERVER:
        return synth_dist_observer_gains(c, g, margin)
    if kind == DIST_FILTER:
        return synth_dist_filter_gains(c, g, margin)
    raise ValueError(f"unknown strategy kind {kind!r}")


# -- validation ------------------------------------------------------------


def _eps_grid(kind, c: GameConstants):
    cc = c.coupling
    fracs = np.linspace(0.02, 0.98, 49)
    above_half = 0.5 + np.logspace(-2, 2, 41)
    if kind == OBSERVER:
        for a, e2 in itertools.product(fracs, above_half):
            yield {"eps1": a * 2 * c.m / cc, "eps2": float(e2)}
    elif kind == FILTER:
        for s in 1 + np.logspace(-3, 2, 101):
            yield {"eps": float(s) * cc / (2 * c.m)}
    elif kind == DIST_OBSERVER:
        coarse = np.linspace(0.05, 0.95, 19)
        nl = c.n * c.max_l
        for a, b, e3 in itertools.product(coarse, coarse, above_half[::4]):
            # a: share of the m budget spent on eps1, b: fraction of the rest on eps2
            e1 = a * 2 * c.m / cc
            e2 = b * (1 - a) * 2 * c.m / nl if nl > 0 else 1.0
            yield {"eps1": float(e1), "eps2": float(e2), "eps3": float(e3)}
    else:
        yield {}


def validate_gains(
    kind: str,
    gains: GainSet | dict,
    c: GameConstants,
    g: Optional[UndirectedGraph] = None,
) -> MarginReport:
    """Evaluate every stability margin of ``gains`` against the game constants.

    The epsilon constants carried by ``gains`` are used as given; when they
    are absent the best (largest worst-case margin) choice on a grid over
    their feasible intervals is used. A report with a nonpositive margin is
    UNCERTIFIED but the gains remain usable for simulation.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown strategy kind {kind!r}")
    if isinstance(gains, GainSet):
        if gains.kind != kind:
            raise ValueError(f"gain set is for {gains.kind}, not {kind}")
        k, eps = gains.values(), dict(gains.eps)
    else:
        k, eps = {n: float(gains[n]) for n in GAIN_NAMES[kind]}, {}
    if any(v <= 0 for v in k.values()):
        bad = [n for n, v in k.items() if v <= 0]
        raise ValueError(f"gains must be positive: {bad}")

    lam = None
    if kind in DISTRIBUTED:
        if g is None:
            raise MissingGraph(f"{kind} validation needs a communication graph")
        lam = _lambda_min(g)

    source = "given"
    if kind != DIST_FILTER and not eps:
        source = "grid"
        best = None
        for cand in _eps_grid(kind, c):
            margins, _ = _terms(kind, k, cand, c, lam)
            score = min(margins.values())
            if best is None or score > best[0]:
                best = (score, cand)
        eps = best[1]
    elif kind == DIST_FILTER:
        source = "none"

    margins, bounds = _terms(kind, k, eps, c, lam)
    return MarginReport(kind=kind, gains=k, eps=eps, eps_source=source,
                        margins=margins, bounds=bounds, lambda_min=lam)


def with_gain(gains: GainSet, **updates) -> GainSet:
    """Copy of ``gains`` with some k values replaced and stale margins dropped."""
    return replace(gains, margins={}, **updates)


# -- Lyapunov equation for the observer error -------------------------------


def observer_error_matrix(k2: float, k3: float) -> np.ndarray:
    return np.array([[-k2, 1.0], [-k3, 0.0]])


def lyapunov_solve_2x2(k2: float, k3: float, Q=None) -> np.ndarray:
    """Solve ``P F + F^T P = -Q`` for ``F = [[-k2, 1], [-k3, 0]]`` in closed form.

    Matching entries gives three linear equations:
    (1,1) ``-2 k2 p11 - 2 k3 p12 = -q11``, (2,2) ``2 p12 = -q22``,
    (1,2) ``p11 - k2 p12 - k3 p22 = -q12``.
    """
    if not (k2 > 0 and k3 > 0):
        raise ValueError("k2 and k3 must be positive for a Hurwitz observer")
    Q = np.eye(2) if Q is None else np.asarray(Q, dtype=float)
    q11, q12, q22 = Q[0, 0], 0.5 * (Q[0, 1] + Q[1, 0]), Q[1, 1]
    p12 = -q22 / 2
    p11 = (q11 - 2 * k3 * p12) / (2 * k2)
    p22 = (p11 - k2 * p12 + q12) / k3
    return np.array([[p11, p12], [p12, p22]])
