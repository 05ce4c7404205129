"""Exception types raised across the toolkit."""


class NesError(Exception):
    """Base class for every error raised by this package."""


class NotStronglyMonotone(NesError):
    """The symmetric part of the game Jacobian is not positive definite."""


class SingularSystem(NesError):
    pass


class NoConvergence(NesError):
    pass


class DisconnectedGraph(NesError):
    pass


class MissingGraph(NesError):
    pass


class NonFiniteState(NesError):
    """Integration produced NaN or inf, usually because dt is too large for the gains."""


class WrongStrategyKind(NesError):
    pass


class ConfigError(NesError):
    """Malformed or invalid scenario configuration.

    ``key`` names the offending config key when known; ``line`` is the
    1-based line of a syntax error.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ConfigParseError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    pass


class StiffProblem(NesError):
    """The requested run needs more steps than the integrator will take."""


class UncertifiedGains(NesError):
    """Raised only when certification is demanded and a margin is nonpositive."""
