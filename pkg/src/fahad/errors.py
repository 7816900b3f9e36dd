"""Exception types shared across the package."""


class FahadError(Exception):
    """Base class for package errors."""


class SingularPhaseConfig(FahadError, ValueError):
    """The differential phase makes the 2x2 pair system singular (sin 2*alpha == 0)."""


class ResolutionFailure(FahadError):
    """Fewer spectral peaks were found than sources requested.

    ``found`` holds whatever peaks were located before giving up.
    """

    def __init__(self, message, found=()):
        super().__init__(message)
        self.found = list(found)


class ConfigError(FahadError, ValueError):
    """Invalid experiment configuration; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


class SingularInformation(FahadError):
    """The Fisher information matrix is singular, so some direction is unbounded."""
