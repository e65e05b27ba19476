"""Exception hierarchy shared by all photomesh modules."""

from __future__ import annotations


class PhotomeshError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(PhotomeshError, ValueError):
    """Operands have incompatible or invalid dimensions."""


class NotUnitaryError(PhotomeshError, ValueError):
    """A matrix failed its unitarity certificate."""

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


class LayoutError(PhotomeshError, ValueError):
    """A mesh or layered circuit violates its structural invariants."""


class DecompositionError(PhotomeshError, ArithmeticError):
    """An elimination step failed to zero its target element.

    Attributes carry the 1-based diagonal/element indices and the matrix
    position that was being eliminated.
    """

    def __init__(self, message: str, j: int, k: int, x: int, y: int, residual: float):
        super().__init__(f"{message} (j={j}, k={k}, x={x}, y={y}, |V[x,y]|={residual:.3e})")
        self.j, self.k, self.x, self.y = j, k, x, y
        self.residual = residual


class RelocationError(PhotomeshError):
    """A pending phase could not be moved to an edge slot."""


class SchemaError(PhotomeshError, ValueError):
    """A serialized file does not match its schema."""
