"""Velocity-free Nash equilibrium seeking for games between double-integrator players."""

__version__ = "0.1.0"

from .equilibrium import EquilibriumResult, solve_newton, solve_quadratic
from .exceptions import (
    ConfigError, ConfigParseError, ConfigValidationError, DisconnectedGraph, MissingGraph, NesError,
    NoConvergence, NonFiniteState, NotStronglyMonotone, SingularSystem, StiffProblem, UncertifiedGains,
    WrongStrategyKind,
)
from .gains import (
    DIST_FILTER, DIST_OBSERVER, FILTER, KINDS, OBSERVER, GainSet, MarginReport, synthesize, validate_gains,
)
from .game import (
    GameConstants, QuadraticGame, builtin_connectivity_game, game_constants, game_from_costs,
    game_from_jacobian, game_jacobian, pseudo_gradient,
)
from .graph import UndirectedGraph, augmented_spectrum, consensus_matrix, laplacian
from .sim import SimConfig, Trajectory, convergence_metrics, simulate
from .strategies import ClosedLoop, ClosedLoopState

__all__ = [
    "ClosedLoop", "ClosedLoopState", "ConfigError", "ConfigParseError", "ConfigValidationError",
    "DIST_FILTER", "DIST_OBSERVER", "DisconnectedGraph", "EquilibriumResult", "FILTER", "GainSet",
    "GameConstants", "KINDS", "MarginReport", "MissingGraph", "NesError", "NoConvergence",
    "NonFiniteState", "NotStronglyMonotone", "OBSERVER", "QuadraticGame", "SimConfig",
    "SingularSystem", "StiffProblem", "Trajectory", "UncertifiedGains", "UndirectedGraph",
    "WrongStrategyKind", "augmented_spectrum", "builtin_connectivity_game", "consensus_matrix",
    "convergence_metrics", "game_constants", "game_from_costs", "game_from_jacobian", "game_jacobian",
    "laplacian", "pseudo_gradient", "simulate", "solve_newton", "solve_quadratic", "synthesize",
    "validate_gains",
]
