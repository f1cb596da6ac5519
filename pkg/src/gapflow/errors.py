"""Exception types shared across the package."""


class GapflowError(Exception):
    """Base class for all errors raised by gapflow."""


# linear algebra kernel
class NonHermitian(GapflowError):
    pass


class NoConvergence(GapflowError):
    pass


class ZeroMatrix(GapflowError):
    pass


class DimensionMismatch(GapflowError):
    pass


# tuples and transfer operators
class ShapeMismatch(GapflowError):
    pass


class NotIrreducible(GapflowError):
    pass


class NotPrimitive(GapflowError):
    pass


class NotPrimitiveWithin(NotPrimitive):
    def __init__(self, m_max, dims=None):
        self.m_max = m_max
        self.dims = dims
        super().__init__(f"monomial span never reached full dimension up to m_max={m_max}")


class NotNormalized(GapflowError):
    pass


class DegenerateSample(GapflowError):
    pass


class TooLarge(GapflowError):
    pass


# hamiltonians
class KernelDimensionMismatch(GapflowError):
    def __init__(self, expected, eigenvalues, message=None):
        self.expected = expected
        self.eigenvalues = eigenvalues
        super().__init__(message or f"kernel dimension differs from expected {expected}")


class InvalidWindow(GapflowError):
    pass


# edge states
class WindowMismatch(GapflowError):
    pass


class SingularWeight(GapflowError):
    pass


# paths
class DegenerateEndpoints(GapflowError):
    pass


class RetriesExhausted(GapflowError):
    pass


class DegenerateEigenvalues(GapflowError):
    pass


class JordanFailure(GapflowError):
    pass


class DeltaNotFound(GapflowError):
    pass


class MembershipLost(GapflowError):
    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"membership lost at t={t!r}")


class NotPrimitiveAt(GapflowError):
    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"tuple not primitive at t={t!r}")


# file formats
class ParseError(GapflowError):
    pass


class ShapeError(GapflowError):
    pass
