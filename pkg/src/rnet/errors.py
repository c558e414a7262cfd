"""Exception types shared across the toolkit."""


class RnetError(Exception):
    """Base class for all rnet errors."""


class SingularMatrixError(RnetError):
    """A pivot fell below the singularity floor during factorization."""


class DimensionMismatchError(RnetError):
    """A matrix does not have the shape an operation requires."""


class SingularBlockError(RnetError):
    """An opposite-face block of the response matrix is numerically singular.

    Raised while building the face reduction matrices; usually means the
    input response matrix is degenerate or too noisy to invert.
    """

    def __init__(self, message: str, face: str | None = None):
        super().__init__(message)
        self.face = face


class DegenerateDeltaError(RnetError):
    """The spike-removal denominator is (numerically) zero.

    Signals a conductance value inconsistent with the response matrix it is
    being removed from.
    """


class ZeroDivisorError(RnetError):
    """An off-diagonal divisor in the boundary-edge formula is too small."""


class InvalidConductanceError(RnetError):
    """A conductance value violates an operation's positivity requirement."""


class ResidualTooLargeError(RnetError):
    """A structurally isolated row survived a peel with a large residual."""


class SpecMismatchError(RnetError):
    """Two objects refer to lattices of different lengths."""


class NetworkFormatError(RnetError):
    """A serialized document does not conform to its schema."""


def annotate_layer(exc: RnetError, layer: int) -> RnetError:
    """Tag ``exc`` with the peel layer it occurred in and amend its message."""
    exc.layer = layer
    if exc.args:
        exc.args = (f"layer {layer}: {exc.args[0]}",) + exc.args[1:]
    else:
        exc.args = (f"layer {layer}",)
    return exc
