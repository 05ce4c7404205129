"""Fixed-step RK4 integration, trajectory recording and convergence checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import NonFiniteState, WrongStrategyKind
from .gains import FILTER, GainSet
from .game import QuadraticGame, pseudo_gradient
from .strategies import ClosedLoop, ClosedLoopState, filter_output

# dt <= GUARD_FACTOR / k_max is what auto step selection uses; anything above
# WARN_FACTOR / k_max triggers a StiffnessWarning.
GUARD_FACTOR = 0.05
WARN_FACTOR = 0.1


class StiffnessWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 20.0
    record_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ValueError("t_end must be at least one step")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def step_size_guard(k_max: float, cap: float = 0.01) -> float:
    """Largest dt the auto-selection will use for gains up to ``k_max``."""
    return min(cap, GUARD_FACTOR / k_max)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded samples of a run; ``states`` has one flat state per row."""

    times: np.ndarray
    states: np.ndarray
    controls: Optional[np.ndarray] = None
    kind: Optional[str] = None
    dim: Optional[int] = None
    n_players: Optional[int] = None
    gains: Optional[GainSet] = None

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> ClosedLoopState:
        if self.kind is None:
            raise ValueError("trajectory was not produced by a closed loop")
        return ClosedLoopState.from_vector(self.kind, self.states[k], self.dim, self.n_players)

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, : self.dim]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, self.dim : 2 * self.dim]

    @property
    def final(self) -> ClosedLoopState:
        return self.state(len(self) - 1)


@dataclass(frozen=True)
class ConvergenceReport:
    final_pos_err: float
    final_speed: float
    t_tol: Optional[float]
    tol: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "final_pos_err": self.final_pos_err,
            "final_speed": self.final_speed,
            "t_tol": self.t_tol,
            "tol": self.tol,
            "converged": self.converged,
        }


def rk4_step(rhs: Callable, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_rk4(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    cfg: SimConfig,
    observe: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Trajectory:
    """Classical fixed-step RK4 from t = 0 to ``cfg.t_end``.

    Samples are kept every ``record_stride`` steps; the last step is always
    kept. ``observe(y)`` is evaluated on each kept sample and stored as the
    control record. Raises NonFiniteState as soon as the state blows up.
    """
    y = np.array(y0, dtype=float).reshape(-1)
    n = cfg.n_steps
    keep = list(range(0, n + 1, cfg.record_stride))
    if keep[-1] != n:
        keep.append(n)
    times = np.empty(len(keep))
    states = np.empty((len(keep), y.size))
    controls = None
    times[0], states[0] = 0.0, y
    if observe is not None:
        first = np.asarray(observe(y))
        controls = np.empty((len(keep), first.size))
        controls[0] = first

    slot = 1
    for step in range(1, n + 1):
        y = rk4_step(rhs, (step - 1) * cfg.dt, y, cfg.dt)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(
                f"state became non-finite at t={step * cfg.dt:.6g}; reduce dt or the gains"
            )
        if slot < len(keep) and step == keep[slot]:
            times[slot] = step * cfg.dt
            states[slot] = y
            if controls is not None:
                controls[slot] = observe(y)
            slot += 1
    return Trajectory(times=times, states=states, controls=controls)


def simulate(loop: ClosedLoop, s0: ClosedLoopState, cfg: SimConfig) -> Trajectory:
    """Integrate a closed loop, recording states and controls."""
    if s0.kind != loop.kind:
        raise WrongStrategyKind(f"initial state is {s0.kind}, loop is {loop.kind}")
    k_max = loop.gains.k_max
    if cfg.dt > WARN_FACTOR / k_max:
        warnings.warn(
            f"dt={cfg.dt:g} exceeds {WARN_FACTOR}/k_max={WARN_FACTOR / k_max:.3g}; "
            "the integration may be unstable",
            StiffnessWarning,
            stacklevel=2,
        )
    raw = integrate_rk4(loop.vector_field, s0.as_vector(), cfg, observe=loop.control_of)
    return Trajectory(
        times=raw.times,
        states=raw.states,
        controls=raw.controls,
        kind=loop.kind,
        dim=loop.game.dim,
        n_players=loop.game.n_players,
        gains=loop.gains,
    )


def convergence_metrics(traj: Trajectory, x_star, tol: float = 1e-3) -> ConvergenceReport:
    """Position error and speed at the final sample.

    ``t_tol`` is the earliest recorded time from which both stay below
    ``tol`` until the end of the run (None if the final sample misses it).
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    x_star = np.asarray(x_star, dtype=float)
    pos_err = np.linalg.norm(traj.positions - x_star[None, :], axis=1)
    speed = np.linalg.norm(traj.velocities, axis=1)
    inside = (pos_err < tol) & (speed < tol)
    t_tol = None
    if inside[-1]:
        outside = np.flatnonzero(~inside)
        first = 0 if outside.size == 0 else outside[-1] + 1
        t_tol = float(traj.times[first])
    return ConvergenceReport(
        final_pos_err=float(pos_err[-1]),
        final_speed=float(speed[-1]),
        t_tol=t_tol,
        tol=tol,
        converged=bool(inside[-1]),
    )


def lyapunov_trace(traj: Trajectory, game: QuadraticGame, x_star) -> np.ndarray:
    """``V = |v + P(x)|^2 / 2 + |x - x*|^2 / 2 + |y - v|^2 / 2`` along a filter run."""
    if traj.kind != FILTER:
        raise WrongStrategyKind(f"Lyapunov trace is defined for filter runs, got {traj.kind}")
    x_star = np.asarray(x_star, dtype=float)
    D, k2 = traj.dim, traj.gains.k2
    out = np.empty(len(traj))
    for n, row in enumerate(traj.states):
        x, v, xhat = row[:D], row[D : 2 * D], row[2 * D : 3 * D]
        a = v + pseudo_gradient(game, x)
        b = x - x_star
        c = filter_output(xhat, x, k2) - v
        out[n] = 0.5 * (a @ a + b @ b + c @ c)
    return out


def lyapunov_envelope_excess(times, values, rho: float, delay: float = 0.0) -> float:
    """Largest ``V(t) / (V(0) exp(-2 rho (t - delay)))`` over the samples.

    V is half the squared norm of the error vector, so a decay rate rho on
    that norm bounds V by ``V(0) exp(-2 rho t)``. A result <= 1 means the
    envelope holds.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values[0] == 0:
        return 0.0 if np.all(values == 0) else math.inf
    envelope = values[0] * np.exp(-2.0 * rho * np.maximum(times - delay, 0.0))
    return float(np.max(values / envelope))
