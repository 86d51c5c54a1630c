"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class LearnCurveError(Exception):
    exit_code = 3


class InvalidInput(LearnCurveError, ValueError):
    exit_code = 2


class ParseError(InvalidInput):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InfeasibleSplit(InvalidInput):
    pass


class DegenerateScenario(InvalidInput):
    pass


class SplitFailure(LearnCurveError):
    def __init__(self, message, size=None, repeat=None):
        if size is not None:
            message = f"{message} (n={size}, k={repeat})"
        super().__init__(message)
        self.size = size
        self.repeat = repeat


class LearnerNonConvergence(LearnCurveError, ArithmeticError):
    pass


class InsufficientPoints(LearnCurveError):
    pass


class FitFailure(LearnCurveError):
    pass


class InsufficientRange(LearnCurveError):
    """Raised when the usable part of a trajectory is too short.

    ``acquire_more_samples`` is always true: an inflection point this close to
    the full sample size means the curve has not entered its saturating phase.
    """

    acquire_more_samples = True


class ConfigError(LearnCurveError):
    """Malformed or inconsistent configuration; maps to the usage exit status."""

    exit_code = 1

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line
