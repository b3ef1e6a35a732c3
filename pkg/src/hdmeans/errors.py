"""Exception types raised by hdmeans."""


class InvalidInputError(ValueError):
    """Malformed arguments: bad shapes, non-finite entries, empty masks."""


class DegenerateVarianceError(ValueError):
    """A coordinate has zero (or negative) variance where a positive one is needed."""

    def __init__(self, index, message=None):
        self.index = int(index)
        if message is None:
            message = f"coordinate {self.index} has zero variance"
        super().__init__(message)
