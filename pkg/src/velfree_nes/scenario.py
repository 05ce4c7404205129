"""Wiring of a scenario: game, gains, strategy, integration, checks, files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .config import TARGET_SAMPLES, ScenarioConfig
from .equilibrium import EquilibriumResult, solve_quadratic
from .exceptions import StiffProblem, UncertifiedGains
from .gains import DISTRIBUTED, GainSet, MarginReport, synthesize, validate_gains
from .game import GameConstants, game_constants
from .outputs import emit_csv, emit_svg_plot
from .sim import ConvergenceReport, SimConfig, Trajectory, convergence_metrics, simulate, step_size_guard
from .strategies import ClosedLoop, consensus_residual

MAX_STEPS = 5_000_000


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    config: ScenarioConfig
    constants: GameConstants
    equilibrium: EquilibriumResult
    gains: GainSet
    gain_report: MarginReport
    sim: SimConfig
    trajectory: Trajectory
    convergence: ConvergenceReport
    consensus_error: Optional[float] = None
    files: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "name": self.config.name,
            "game": self.config.game_name,
            "strategy": self.config.strategy,
            "graph_edges": self.config.graph.one_based_edges() if self.config.graph else None,
            "x0": self.config.x0.tolist(),
            "x_star": self.equilibrium.x_star.tolist(),
            "equilibrium_residual": self.equilibrium.residual,
            "constants": {
                "m": self.constants.m,
                "h": self.constants.h,
                "lipschitz": list(self.constants.lipschitz),
                "n": self.constants.n,
            },
            "gain_report": self.gain_report.to_dict(),
            "sim": {"dt": self.sim.dt, "t_end": self.sim.t_end, "record_stride": self.sim.record_stride},
            "convergence": self.convergence.to_dict(),
            "consensus_error": self.consensus_error,
        }


def resolve_gains(cfg: ScenarioConfig, constants: GameConstants) -> tuple[GainSet, MarginReport]:
    """Synthesize (auto) or take (manual) the gains, then certify them."""
    if cfg.gains.mode == "auto":
        gains = synthesize(cfg.strategy, constants, cfg.graph, cfg.gains.margin)
    else:
        gains = GainSet(cfg.strategy, **cfg.gains.values)
    report = validate_gains(cfg.strategy, gains, constants, cfg.graph)
    return gains, report


def resolve_sim(cfg: ScenarioConfig, gains: GainSet) -> SimConfig:
    dt = cfg.sim.dt if cfg.sim.dt is not None else step_size_guard(gains.k_max)
    n_steps = int(round(cfg.sim.t_end / dt))
    if n_steps > MAX_STEPS:
        raise StiffProblem(
            f"{n_steps} steps of dt={dt:.3g} needed (limit {MAX_STEPS}); gains up to "
            f"{gains.k_max:.3g} make the loop too stiff for fixed-step RK4, use manual gains"
        )
    stride = cfg.sim.record_stride or max(1, n_steps // TARGET_SAMPLES)
    return SimConfig(dt=dt, t_end=cfg.sim.t_end, record_stride=stride)


def run_scenario(cfg: ScenarioConfig, out_dir=None, strict_gains: bool = False) -> ScenarioResult:
    constants = game_constants(cfg.game)
    eq = solve_quadratic(cfg.game)
    gains, report = resolve_gains(cfg, constants)
    if strict_gains and not report.certified:
        bad = sorted(k for k, v in report.margins.items() if v <= 0)
        raise UncertifiedGains(f"{cfg.name}: nonpositive margins {bad}")
    sim_cfg = resolve_sim(cfg, gains)

    loop = ClosedLoop(cfg.strategy, cfg.game, gains, cfg.graph)
    if cfg.canonical:
        s0 = loop.canonical_state(cfg.x0)
        if "v" in cfg.init:
            s0 = replace(s0, v=cfg.init["v"])
    else:
        s0 = loop.init_state(cfg.x0, **cfg.init)

    traj = simulate(loop, s0, sim_cfg)
    conv = convergence_metrics(traj, eq.x_star, cfg.tol)
    cons = None
    if cfg.strategy in DISTRIBUTED:
        cons = float(np.linalg.norm(consensus_residual(traj.final)))

    result = ScenarioResult(cfg, constants, eq, gains, report, sim_cfg, traj, conv, cons)
    if out_dir is not None:
        result.files.extend(write_outputs(result, out_dir))
    return result


def write_outputs(result: ScenarioResult, out_dir) -> list[Path]:
    cfg = result.config
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dims = cfg.game.action_dims
    written = []
    if "csv" in cfg.outputs:
        written.append(emit_csv(result.trajectory, out_dir / f"{cfg.name}.csv", dims))
    if "svg" in cfg.outputs:
        for which in ("positions", "velocities"):
            written.append(emit_svg_plot(
                result.trajectory, which, out_dir / f"{cfg.name}_{which}.svg", dims,
                title=f"{cfg.name}: {which}",
            ))
    if "report" in cfg.outputs:
        path = out_dir / f"{cfg.name}_report.json"
        path.write_text(json.dumps(result.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written
