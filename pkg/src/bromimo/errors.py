"""Exception hierarchy shared by all modules."""


class BromimoError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BromimoError, ValueError):
    """An argument lies outside the domain of the operation."""


class NotPSDError(DomainError):
    """A matrix expected to be positive semi-definite has a negative eigenvalue."""


class InfeasibleError(DomainError):
    """A constrained problem has an empty feasible set."""


class SolverError(BromimoError, RuntimeError):
    """A numerical solver failed to produce a trustworthy answer."""


class BracketError(SolverError):
    """No interior extremum could be bracketed."""


class ConfigError(BromimoError):
    """Base class for configuration problems."""


class ConfigParseError(ConfigError):
    """The configuration file could not be parsed."""


class ConfigValidationError(ConfigError, ValueError):
    """One or more configuration invariants are violated.

    All violations are collected in :attr:`violations`.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.violations))
