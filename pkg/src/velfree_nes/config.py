"""Scenario configuration files.

Scenarios are TOML documents. Recognised keys::

    name = "connectivity5-filter"     # optional label
    game = "connectivity5"            # builtin name, or a [game] table
    strategy = "filter"               # observer | filter | dist-observer | dist-filter
    x0 = [ ... ]                      # initial actions (default: builtin's own)
    tol = 1e-3                        # convergence tolerance
    outputs = ["csv", "svg", "report"]

    [graph]                           # required for dist-* strategies
    edges = [[1, 2], [2, 3]]          # 1-based player indices

    [gains]
    mode = "auto"                     # auto (synthesized) | manual
    margin = 1.1                      # auto only
    k1 = 2.0                          # manual only; k2, k3, k4 as needed

    [sim]
    dt = 0.005                        # default: step-size guard for the gains
    t_end = 20.0
    record_stride = 4                 # default: about 2000 samples

    [init]                            # optional initial internals
    canonical = false                 # true: estimates consistent with x0
    xhat = [ ... ]                    # or any of v, xbar, vbar, xhat, z

An inline game replaces the ``game`` string with::

    [game]
    n_players = 2
    action_dims = [1, 1]
    [[game.players]]
    quad = [[1.0, 0.0], [0.0, 0.0]]   # D x D
    lin = [-6.0, 0.0]                 # D
    const = 9.0
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigParseError, ConfigValidationError
from .gains import DEFAULT_MARGIN, DISTRIBUTED, FILTER, GAIN_NAMES, KINDS
from .game import BUILTIN_GAMES, CONNECTIVITY5_X0, QuadraticGame, game_from_costs
from .graph import UndirectedGraph
from .strategies import INTERNALS

BUILTIN_X0 = {"connectivity5": CONNECTIVITY5_X0}
OUTPUT_KINDS = ("csv", "svg", "report")
DEFAULT_T_END = 20.0
DEFAULT_TOL = 1e-3
TARGET_SAMPLES = 2000

_TOP_KEYS = {"name", "game", "strategy", "x0", "tol", "outputs", "graph", "gains", "sim", "init"}


@dataclass(frozen=True)
class GainSpec:
    mode: str = "auto"
    margin: float = DEFAULT_MARGIN
    values: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SimSpec:
    dt: Optional[float] = None
    t_end: float = DEFAULT_T_END
    record_stride: Optional[int] = None


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    game_name: str
    game: QuadraticGame
    strategy: str
    x0: np.ndarray
    gains: GainSpec
    sim: SimSpec
    graph: Optional[UndirectedGraph] = None
    tol: float = DEFAULT_TOL
    outputs: tuple = OUTPUT_KINDS
    init: dict = field(default_factory=dict)
    canonical: bool = False


def _line_of(exc) -> Optional[int]:
    lineno = getattr(exc, "lineno", None)
    if lineno:
        return int(lineno)
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def _number(value, key, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(f"expected a number, got {value!r}", key=key)
    value = float(value)
    if not np.isfinite(value):
        raise ConfigValidationError("must be finite", key=key)
    if positive and value <= 0:
        raise ConfigValidationError(f"must be positive, got {value}", key=key)
    return value


def _vector(value, key, length=None) -> np.ndarray:
    if not isinstance(value, list):
        raise ConfigValidationError("expected an array of numbers", key=key)
    out = np.array([_number(v, key) for v in value], dtype=float)
    if length is not None and out.shape != (length,):
        raise ConfigValidationError(f"expected {length} entries, got {out.size}", key=key)
    return out


def _reject_unknown(table, allowed, prefix):
    for key in table:
        if key not in allowed:
            raise ConfigValidationError("unknown key", key=f"{prefix}{key}")


def _parse_game(value):
    if isinstance(value, str):
        if value not in BUILTIN_GAMES:
            raise ConfigValidationError(
                f"unknown builtin game {value!r}; known: {sorted(BUILTIN_GAMES)}", key="game"
            )
        return value, BUILTIN_GAMES[value]()
    if not isinstance(value, dict):
        raise ConfigValidationError("expected a builtin name or a [game] table", key="game")
    _reject_unknown(value, {"n_players", "action_dims", "players"}, "game.")
    for key in ("n_players", "action_dims", "players"):
        if key not in value:
            raise ConfigValidationError("missing", key=f"game.{key}")
    n = value["n_players"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigValidationError("must be a positive integer", key="game.n_players")
    dims = value["action_dims"]
    if not isinstance(dims, list) or len(dims) != n or not all(
        isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims
    ):
        raise ConfigValidationError(f"expected {n} positive integers", key="game.action_dims")
    players = value["players"]
    if not isinstance(players, list) or len(players) != n:
        raise ConfigValidationError(f"expected {n} [[game.players]] entries", key="game.players")
    total = sum(dims)
    quads, lins, consts = [], [], []
    for i, p in enumerate(players):
        prefix = f"game.players[{i + 1}]."
        if not isinstance(p, dict):
            raise ConfigValidationError("expected a table", key=prefix[:-1])
        _reject_unknown(p, {"quad", "lin", "const"}, prefix)
        quad = p.get("quad")
        if not isinstance(quad, list) or len(quad) != total:
            raise ConfigValidationError(f"expected a {total}x{total} matrix", key=prefix + "quad")
        quads.append(np.array([_vector(row, prefix + "quad", total) for row in quad]))
        lins.append(_vector(p.get("lin", [0.0] * total), prefix + "lin", total))
        consts.append(_number(p.get("const", 0.0), prefix + "const"))
    try:
        game = game_from_costs(dims, quads, lins, consts)
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="game") from exc
    return "inline", game


def _parse_gains(value, strategy) -> GainSpec:
    if value is None:
        return GainSpec()
    if not isinstance(value, dict):
        raise ConfigValidationError("expected a table", key="gains")
    _reject_unknown(value, {"mode", "margin", "k1", "k2", "k3", "k4"}, "gains.")
    mode = value.get("mode", "auto")
    if mode not in ("auto", "manual"):
        raise ConfigValidationError("must be 'auto' or 'manual'", key="gains.mode")
    if mode == "auto":
        stray = [k for k in ("k1", "k2", "k3", "k4") if k in value]
        if stray:
            raise ConfigValidationError("auto gains take no k values", key=f"gains.{stray[0]}")
        margin = _number(value.get("margin", DEFAULT_MARGIN), "gains.margin")
        if margin <= 1:
            raise ConfigValidationError("must exceed 1", key="gains.margin")
        return GainSpec("auto", margin)
    if "margin" in value:
        raise ConfigValidationError("only meaningful for auto gains", key="gains.margin")
    values = {}
    for name in GAIN_NAMES[strategy]:
        if name not in value:
            raise ConfigValidationError(f"manual {strategy} gains need {name}", key=f"gains.{name}")
        values[name] = _number(value[name], f"gains.{name}", positive=True)
    extra = [k for k in ("k1", "k2", "k3", "k4") if k in value and k not in values]
    if extra:
        raise ConfigValidationError(f"not used by the {strategy} strategy", key=f"gains.{extra[0]}")
    return GainSpec("manual", DEFAULT_MARGIN, values)


def _parse_sim(value) -> SimSpec:
    if value is None:
        return SimSpec()
    if not isinstance(value, dict):
        raise ConfigValidationError("expected a table", key="sim")
    _reject_unknown(value, {"dt", "t_end", "record_stride"}, "sim.")
    dt = _number(value["dt"], "sim.dt", positive=True) if "dt" in value else None
    t_end = _number(value.get("t_end", DEFAULT_T_END), "sim.t_end", positive=True)
    stride = value.get("record_stride")
    if stride is not None and (isinstance(stride, bool) or not isinstance(stride, int) or stride < 1):
        raise ConfigValidationError("must be a positive integer", key="sim.record_stride")
    if dt is not None and t_end < dt:
        raise ConfigValidationError("must be at least dt", key="sim.t_end")
    return SimSpec(dt, t_end, stride)


def _parse_graph(value, n_players):
    if not isinstance(value, dict):
        raise ConfigValidationError("expected a [graph] table with edges", key="graph")
    _reject_unknown(value, {"edges"}, "graph.")
    edges = value.get("edges")
    if not isinstance(edges, list):
        raise ConfigValidationError("expected a list of [i, j] pairs", key="graph.edges")
    pairs = []
    for e in edges:
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)
        ):
            raise ConfigValidationError(f"bad edge {e!r}", key="graph.edges")
        pairs.append(e)
    try:
        return UndirectedGraph.from_one_based(n_players, pairs)
    except ValueError as exc:
        raise ConfigValidationError(str(exc), key="graph.edges") from exc


def _parse_init(value, strategy, game):
    if value is None:
        return {}, False
    if not isinstance(value, dict):
        raise ConfigValidationError("expected a table", key="init")
    allowed = {"canonical", "v", *INTERNALS[strategy]}
    _reject_unknown(value, allowed, "init.")
    canonical = value.get("canonical", False)
    if not isinstance(canonical, bool):
        raise ConfigValidationError("must be true or false", key="init.canonical")
    blocks = {}
    for name in ("v", *INTERNALS[strategy]):
        if name in value:
            size = game.n_players * game.dim if name == "z" else game.dim
            blocks[name] = _vector(value[name], f"init.{name}", size)
    if canonical and set(blocks) - {"v"}:
        raise ConfigValidationError("canonical internals cannot be combined with explicit ones",
                                    key="init.canonical")
    return blocks, canonical


def parse_config(text: str, default_name: str = "scenario") -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(str(exc), line=_line_of(exc)) from exc

    _reject_unknown(raw, _TOP_KEYS, "")
    if "game" not in raw:
        raise ConfigValidationError("missing", key="game")
    game_name, game = _parse_game(raw["game"])

    strategy = raw.get("strategy", FILTER)
    if strategy not in KINDS:
        raise ConfigValidationError(f"must be one of {list(KINDS)}", key="strategy")

    graph = None
    if strategy in DISTRIBUTED:
        if "graph" not in raw:
            raise ConfigValidationError(f"{strategy} needs a communication graph", key="graph")
        graph = _parse_graph(raw["graph"], game.n_players)
    elif "graph" in raw:
        graph = _parse_graph(raw["graph"], game.n_players)

    if "x0" in raw:
        x0 = _vector(raw["x0"], "x0", game.dim)
    elif game_name in BUILTIN_X0:
        x0 = np.array(BUILTIN_X0[game_name], dtype=float)
    else:
        raise ConfigValidationError("inline games need an explicit x0", key="x0")

    tol = _number(raw.get("tol", DEFAULT_TOL), "tol", positive=True)
    outputs = raw.get("outputs", list(OUTPUT_KINDS))
    if not isinstance(outputs, list) or any(o not in OUTPUT_KINDS for o in outputs):
        raise ConfigValidationError(f"expected a subset of {list(OUTPUT_KINDS)}", key="outputs")
    name = raw.get("name", default_name)
    if not isinstance(name, str) or not name:
        raise ConfigValidationError("must be a non-empty string", key="name")

    init, canonical = _parse_init(raw.get("init"), strategy, game)
    return ScenarioConfig(
        name=name,
        game_name=game_name,
        game=game,
        strategy=strategy,
        x0=x0,
        gains=_parse_gains(raw.get("gains"), strategy),
        sim=_parse_sim(raw.get("sim")),
        graph=graph,
        tol=tol,
        outputs=tuple(dict.fromkeys(outputs)),
        init=init,
        canonical=canonical,
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, default_name=path.stem)
