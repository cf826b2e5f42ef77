"""Exception hierarchy for ecdg.

Every error subclasses a builtin so callers catching ValueError,
ArithmeticError or OSError keep working.
"""


class EcdgError(Exception):
    """Base class for all ecdg errors."""


class ValidationError(EcdgError, ValueError):
    """Invalid parameters, shapes or catalog names."""


class NumericalError(EcdgError, ArithmeticError):
    """A numerical procedure failed to converge or produced non-finite values."""


class MeshError(EcdgError, ValueError):
    """Base class for mesh construction problems."""


class NonConformingMeshError(MeshError):
    """Connectivity is not a conforming mesh (hanging nodes, >2 cells per face)."""


class DegenerateCellError(MeshError):
    """A cell has zero (or negative) measure."""


class MeshFileError(MeshError, OSError):
    """A mesh file could not be read or is malformed."""
