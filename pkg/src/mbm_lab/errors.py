"""Exception types shared across the lab."""


class MbmLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MbmLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SynthesisError(MbmLabError, RuntimeError):
    """Path synthesis failed (non-PSD embedding, factorization breakdown, ...)."""


class GridRangeError(MbmLabError, ValueError):
    """A query leaves the declared grid (time row not on the grid, level outside bins)."""


class ConfigError(MbmLabError, ValueError):
    """Configuration rejected.  Carries the complete list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.violations)
        super().__init__(f"invalid configuration ({len(self.violations)} violation(s)): {lines}")
