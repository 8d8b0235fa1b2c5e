"""Exception hierarchy. Each class carries a short machine-readable tag."""


class PinnError(Exception):
    tag = "error"


class InvalidArchitectureError(PinnError, ValueError):
    tag = "invalid-architecture"


class InvalidInputError(PinnError, ValueError):
    tag = "invalid-input"


class UnsupportedProblemError(PinnError, ValueError):
    tag = "unsupported-problem"


class NumericalFailureError(PinnError, FloatingPointError):
    tag = "numerical-failure"

    def __init__(self, message, point_index=None):
        if point_index is not None:
            message = f"{message} (point index {point_index})"
        super().__init__(message)
        self.point_index = point_index
