"""Exception hierarchy for lawcollapse."""


class LawCollapseError(Exception):
    """Base class for all library errors."""


class DomainError(LawCollapseError, ValueError):
    """An argument lies outside the domain of the operation."""


class PreconditionError(DomainError):
    """An operation precondition does not hold for the given inputs."""


class SizeLimitError(DomainError):
    """The input is too large for an exhaustive computation."""


class InfeasibleError(DomainError):
    """An optimisation problem has no admissible candidate."""


class InputFormatError(LawCollapseError):
    """An input file could not be read or parsed."""
