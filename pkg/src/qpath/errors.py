"""Exception types shared across the package."""


class QPathError(Exception):
    """Base class for all qpath errors."""


class ArgumentError(QPathError, ValueError):
    """A caller passed an argument violating a documented precondition."""


class ConfigError(QPathError, ValueError):
    """A configuration value is out of its valid range."""


class GraphParseError(QPathError):
    """An input file could not be parsed into a valid graph."""

    def __init__(self, message, path=None, line=None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if line is not None:
            detail = f"{detail} (line {line})"
        super().__init__(detail)
        self.path = path
        self.line = line


class CoverageViolation(QPathError):
    """A visit exceeded the cap of the active coverage mode."""

    def __init__(self, message, entity):
        super().__init__(f"{message}: {entity}")
        self.entity = entity


class StateOverflowError(QPathError):
    """A local search graph has more nodes than the state matrix admits."""


class IllegalActionError(QPathError):
    """An action referenced a zero (forbidden) entry of the state matrix."""


class TrainingDivergenceError(QPathError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, episode=None):
        if episode is not None:
            message = f"{message} (episode {episode})"
        super().__init__(message)
        self.episode = episode


class StructuralError(QPathError):
    """The frame model cannot be solved (floating parts or singular system)."""

    def __init__(self, message, nodes=()):
        if nodes:
            message = f"{message}: nodes {sorted(nodes)}"
        super().__init__(message)
        self.nodes = tuple(sorted(nodes))


class PlanningFailure(QPathError):
    """No restart produced a feasible toolpath."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)
