"""Exception hierarchy.

The three base classes map one-to-one onto CLI exit codes: bad input (1),
a mathematical check that failed with a report attached (2), and a resource
cap that was hit (3).
"""


class InputError(ValueError):
    """Malformed or out-of-contract input."""


class MathFailure(Exception):
    """A property did not hold; ``report`` carries the evidence."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CapExceeded(RuntimeError):
    """A search would exceed its configured size cap."""
