"""Exception hierarchy shared across the package."""


class GHSBPError(Exception):
    """Base class for all errors raised by :mod:`ghsbp`."""


class DomainError(GHSBPError, ValueError):
    """An argument lies outside the domain of a function or distribution."""


class BracketError(GHSBPError):
    """The root bracket for the tilted-Gamma mode has no sign change."""


class DegenerateKnotError(GHSBPError):
    """Envelope knots collapsed onto each other and could not be separated."""


class EnvelopeViolation(GHSBPError):
    """The target log-density exceeded the envelope at a proposed point."""


class ProposalLimitError(GHSBPError):
    """Too many rejected proposals for a single tilted-Gamma draw."""


class SweepError(GHSBPError):
    """A Gibbs sweep failed; carries the zero-based sweep index."""

    def __init__(self, sweep, cause):
        self.sweep = sweep
        self.cause = cause
        super().__init__(f"sweep {sweep}: {cause}")


class InputError(GHSBPError):
    """Malformed input file; ``line`` is the one-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")
