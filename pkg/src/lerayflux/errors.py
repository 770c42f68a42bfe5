"""Exception types shared by the library and the command line.

Each class carries the process exit code the CLI reports for it.
"""


class LerayFluxError(Exception):
    exit_code = 1


class ConfigError(LerayFluxError, ValueError):
    """Malformed or out-of-range configuration."""

    exit_code = 2

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class CFLError(LerayFluxError, ValueError):
    """Time step exceeds the advective stability limit."""

    exit_code = 3

    def __init__(self, dt, limit):
        self.dt = dt
        self.limit = limit
        super().__init__(f"time step {dt:.6g} exceeds CFL limit {limit:.6g}")


class SnapshotError(LerayFluxError, OSError):
    """Unreadable or corrupt snapshot / output file."""

    exit_code = 4


class ShapeError(LerayFluxError, ValueError):
    """Field dimension or component count incompatible with the request."""

    exit_code = 5


class ResolutionError(LerayFluxError, ValueError):
    """Grid too coarse for the requested analysis."""

    exit_code = 6
