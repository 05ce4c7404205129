"""Command-line entry point.

Subcommands: ``run``, ``gains``, ``equilibrium``, ``compare``. A config
argument is a TOML file path or the name of a shipped scenario
(``connectivity5-observer``, ``connectivity5-filter``,
``connectivity5-dist-observer``, ``connectivity5-dist-filter``).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .equilibrium import solve_newton, solve_quadratic
from .exceptions import (
    ConfigParseError, ConfigValidationError, DisconnectedGraph, MissingGraph, NonFiniteState,
    NotStronglyMonotone, SingularSystem, StiffProblem, UncertifiedGains,
)
from .game import CONNECTIVITY5_PUBLISHED_NE, game_constants
from .scenario import resolve_gains, run_scenario
from .sim import StiffnessWarning

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_NOT_CONVERGED = 5
EXIT_STIFF = 6
EXIT_UNCERTIFIED = 7

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def shipped_scenarios() -> list[Path]:
    return sorted(SCENARIO_DIR.glob("*.toml"))


def resolve_config_path(arg: str) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    shipped = SCENARIO_DIR / f"{arg}.toml"
    if shipped.exists():
        return shipped
    return path


def _config_arg(args, parser):
    paths = list(args.configs or [])
    if args.config:
        paths.insert(0, args.config)
    if not paths:
        parser.error("a config is required (positional or --config)")
    return [resolve_config_path(p) for p in paths]


def _fmt_vec(x) -> str:
    return "[" + ", ".join(f"{v:.6f}" for v in x) + "]"


def _print_gain_report(report, stream=sys.stdout):
    print(f"strategy:  {report.kind}", file=stream)
    print(f"status:    {report.status}", file=stream)
    for name, value in report.gains.items():
        bound = report.bounds.get(name)
        extra = f"   (rule: > {bound:.6g})" if bound is not None else ""
        print(f"  {name} = {value:.6g}{extra}", file=stream)
    if report.eps:
        eps = ", ".join(f"{k}={v:.6g}" for k, v in report.eps.items())
        print(f"  eps ({report.eps_source}): {eps}", file=stream)
    if report.lambda_min is not None:
        print(f"  lambda_min(L(x)I + A0) = {report.lambda_min:.6g}", file=stream)
    for name, value in report.margins.items():
        flag = "ok" if value > 0 else "FAIL"
        print(f"  {name:>16} = {value: .6g}  {flag}", file=stream)


def cmd_run(args, parser) -> int:
    code = EXIT_OK
    for path in _config_arg(args, parser):
        cfg = load_config(path)
        out_dir = Path(args.out_dir) if args.out_dir else None
        result = run_scenario(cfg, out_dir=out_dir, strict_gains=args.strict_gains)
        conv = result.convergence
        print(f"scenario:  {cfg.name}")
        _print_gain_report(result.gain_report)
        print(f"dt = {result.sim.dt:g}, t_end = {result.sim.t_end:g}")
        print(f"||x(T) - x*|| = {conv.final_pos_err:.3e}")
        print(f"||v(T)||      = {conv.final_speed:.3e}")
        if result.consensus_error is not None:
            print(f"||z(T) - 1(x)x(T)|| = {result.consensus_error:.3e}")
        print(f"converged (tol {conv.tol:g}): {conv.converged}"
              + (f" from t = {conv.t_tol:g}" if conv.t_tol is not None else ""))
        for f in result.files:
            print(f"wrote {f}")
        if not conv.converged:
            code = EXIT_NOT_CONVERGED
    return code


def cmd_gains(args, parser) -> int:
    code = EXIT_OK
    for path in _config_arg(args, parser):
        cfg = load_config(path)
        constants = game_constants(cfg.game)
        _, report = resolve_gains(cfg, constants)
        print(f"scenario:  {cfg.name}")
        print(f"m = {constants.m:.6g}, h = {constants.h:.6g}, "
              f"max l = {constants.max_l:.6g}, N = {constants.n}")
        _print_gain_report(report)
        print("--- machine-readable ---")
        print(json.dumps(report.to_dict(), sort_keys=True))
        if args.strict_gains and not report.certified:
            code = EXIT_UNCERTIFIED
    return code


def cmd_equilibrium(args, parser) -> int:
    for path in _config_arg(args, parser):
        cfg = load_config(path)
        game_constants(cfg.game)
        eq = solve_quadratic(cfg.game)
        newton = solve_newton(cfg.game, np.zeros(cfg.game.dim))
        print(f"game:      {cfg.game_name}")
        print(f"x*       = {_fmt_vec(eq.x_star)}")
        print(f"||P(x*)|| = {eq.residual:.3e}")
        print(f"newton cross-check: max |diff| = {np.max(np.abs(newton.x_star - eq.x_star)):.3e}")
        if cfg.game_name == "connectivity5":
            pub = np.array(CONNECTIVITY5_PUBLISHED_NE)
            print(f"published  = {_fmt_vec(pub)}")
            print(f"max |x* - published| = {np.max(np.abs(eq.x_star - pub)):.3e}")
    return EXIT_OK


def _compare_one(path_and_strict):
    path, strict = path_and_strict
    cfg = load_config(path)
    r = run_scenario(cfg, strict_gains=strict)
    return (cfg.name, cfg.strategy, r.gain_report.status, r.convergence.final_pos_err,
            r.convergence.final_speed, r.convergence.t_tol, r.convergence.converged)


def cmd_compare(args, parser) -> int:
    paths = _config_arg(args, parser)
    jobs = [(p, args.strict_gains) for p in paths]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_compare_one, jobs))
    else:
        rows = [_compare_one(j) for j in jobs]
    print(f"{'scenario':<32} {'strategy':<14} {'gains':<12} {'|x-x*|':>10} {'|v|':>10} {'t_tol':>8}  conv")
    for name, kind, status, pe, sp, tt, ok in rows:
        tt_s = f"{tt:.2f}" if tt is not None else "-"
        print(f"{name:<32} {kind:<14} {status:<12} {pe:>10.3e} {sp:>10.3e} {tt_s:>8}  {'yes' if ok else 'NO'}")
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("configs", nargs="*", help="scenario TOML file(s) or shipped scenario names")
    common.add_argument("--config", help="scenario TOML file (alternative to the positional form)")
    common.add_argument("--out-dir", help="directory for CSV/SVG/report outputs")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for randomized check helpers; scenarios are deterministic and ignore it")
    common.add_argument("--strict-gains", action="store_true",
                        help="refuse gain sets that are not certified")

    parser = argparse.ArgumentParser(
        prog="velfree-nes",
        description="Velocity-free Nash equilibrium seeking for double-integrator players.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="simulate scenario(s) and write outputs")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("gains", parents=[common], help="print the gain certification report")
    p.set_defaults(func=cmd_gains)
    p = sub.add_parser("equilibrium", parents=[common], help="print the Nash equilibrium")
    p.set_defaults(func=cmd_equilibrium)
    p = sub.add_parser("compare", parents=[common], help="tabulate convergence across scenarios")
    p.add_argument("--jobs", type=int, default=1, help="scenarios to run in parallel")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("always", StiffnessWarning)
        try:
            return args.func(args, parser)
        except ConfigParseError as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except (ConfigValidationError, NotStronglyMonotone, DisconnectedGraph, MissingGraph,
                SingularSystem) as exc:
            print(f"invalid scenario: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        except (StiffProblem, NonFiniteState) as exc:
            print(f"stiffness: {exc}", file=sys.stderr)
            return EXIT_STIFF
        except UncertifiedGains as exc:
            print(f"uncertified gains: {exc}", file=sys.stderr)
            return EXIT_UNCERTIFIED


if __name__ == "__main__":
    sys.exit(main())
