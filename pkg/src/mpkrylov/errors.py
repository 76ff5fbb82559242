"""Exception types shared across the library."""


class MpkError(Exception):
    """Base class for all mpkrylov errors."""


class DimensionMismatchError(MpkError):
    """Operands have incompatible shapes or lengths."""


class PrecisionMismatchError(MpkError):
    """Operands carry different storage precisions; convert explicitly first."""


class EntryOutOfRangeError(MpkError):
    """A matrix entry lies outside the declared dimensions."""

    def __init__(self, row, col, value, n):
        self.row = int(row)
        self.col = int(col)
        self.value = value
        self.n = int(n)
        super().__init__(
            "entry (%d, %d) with value %r is outside a %d-by-%d matrix"
            % (self.row, self.col, value, self.n, self.n)
        )


class InvalidPermutationError(MpkError):
    """The given index vector is not a permutation of 0..n-1."""


class MatrixMarketError(MpkError):
    """Malformed or unsupported Matrix Market content."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = " in %s" % path
        if line is not None:
            where += " (line %d)" % line
        super().__init__(message + where)


class ZeroRightHandSideError(MpkError):
    """The right-hand side vector has zero norm, so a relative residual is undefined."""


class ColumnOrderError(MpkError):
    """Hessenberg columns must be processed in order, one at a time."""


class TriangularBreakdownError(MpkError):
    """A rotated triangular diagonal entry is too small to back-substitute."""

    def __init__(self, index, entry, threshold):
        self.index = int(index)
        self.entry = float(entry)
        self.threshold = float(threshold)
        super().__init__(
            "triangular entry %g at position %d is below threshold %g"
            % (self.entry, self.index, self.threshold)
        )


class SingularBlockError(MpkError):
    """A diagonal block has a pivot too small to invert reliably."""

    def __init__(self, block_index, pivot, threshold):
        self.block_index = int(block_index)
        self.pivot = float(pivot)
        self.threshold = float(threshold)
        super().__init__(
            "diagonal block %d is numerically singular (pivot %g, threshold %g)"
            % (self.block_index, self.pivot, self.threshold)
        )


class PolynomialBreakdownError(MpkError):
    """Polynomial construction hit a singular projected problem."""
