"""Exception hierarchy for stoprate."""


class StoprateError(Exception):
    """Base class for all stoprate errors."""


class CoefficientDomainError(StoprateError):
    """A coefficient function returned a non-finite or out-of-domain value."""


class ToleranceError(StoprateError):
    """A quadrature or iterative routine failed to reach its tolerance."""


class DegenerateIntervalError(StoprateError):
    """Interval endpoints coincide below machine resolution."""


class MollificationError(StoprateError):
    """Mollified atom bumps overlap each other or a rate breakpoint."""


class DomainError(StoprateError):
    """A point (atom, start state, breakpoint) lies outside its required domain."""


class IllConditionedError(StoprateError):
    """A linear system was too ill-conditioned to solve reliably."""


class UnsupportedProblemError(StoprateError):
    """The requested solver does not support this problem class."""


class ConfigError(StoprateError):
    """A run configuration failed schema or semantic validation."""
