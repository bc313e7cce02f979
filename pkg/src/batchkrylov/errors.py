"""Exception types raised by the library."""


class BatchError(ValueError):
    """Base class for all library errors."""


class DimensionError(BatchError):
    """Shapes of batch objects do not line up."""


class SingularDiagonalError(BatchError):
    def __init__(self, entry, row):
        self.entry = entry
        self.row = row
        super().__init__(f"zero or missing diagonal in batch entry {entry}, row {row}")


class UnsupportedCombination(BatchError):
    """The dispatcher has no kernel for the requested option tuple."""


class InvalidOverride(BatchError):
    """A tuning override breaks a launch-plan invariant."""


class PatternMismatchError(BatchError):
    def __init__(self, path, reference, position, detail):
        self.path = path
        self.reference = reference
        self.position = position
        super().__init__(
            f"{path}: sparsity pattern differs from {reference} at {position}: {detail}"
        )


class MatrixMarketParseError(BatchError):
    def __init__(self, path, line, message):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {message}")
