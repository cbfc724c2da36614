"""Exception types shared across the package."""


class PseudoFracError(Exception):
    """Base class for all package errors."""


class EmptyGrid(PseudoFracError):
    """No grid cell fits inside the domain."""


class UnsupportedDims(PseudoFracError):
    """Block dimensions other than n = m = 1 were requested."""


class DomainError(PseudoFracError):
    """Invalid domain description (bad radius, disconnected union, ...)."""


class DomainParseError(DomainError):
    """A domain string could not be parsed.

    ``position`` is the 0-based character offset where parsing failed.
    """

    def __init__(self, message, text, position):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position} in {text!r}")


class GridMismatch(PseudoFracError):
    """Grid functions (or a grid function and an operator) live on different grids."""


class ZeroFunction(PseudoFracError):
    """The operation needs a function that is not identically zero."""


class TooLarge(PseudoFracError):
    """Dense assembly requested on a grid above the node cap."""


class BadExponents(PseudoFracError):
    """Exponent ordering required by an inequality check is violated."""


class NonProductDomain(PseudoFracError):
    """The check only applies to product (rectangle) domains."""


class UnsupportedBlock(PseudoFracError):
    """BBM constant requested for a block dimension other than 1."""
