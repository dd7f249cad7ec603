"""Exception types shared across the package."""


class IscapError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(IscapError):
    """Array shapes are inconsistent with the requested operation."""


class NotHermitian(IscapError):
    """Matrix fails the Hermitian-symmetry tolerance."""


class NotPositiveDefinite(IscapError):
    """Matrix fails a Cholesky-style positive-definiteness test."""


class InvalidBeta(IscapError):
    """Direction cosine outside [-1, 1]."""


class DegenerateGeometry(IscapError):
    """Node placed with zero horizontal offset from the BS; azimuth undefined."""


class PsInfeasible(IscapError):
    """No power-splitting ratio satisfies the SINR and harvesting bounds.

    Attributes:
        node: index of the first node whose bounds are incompatible.
    """

    def __init__(self, node: int, message: str = ""):
        self.node = node
        super().__init__(message or f"power splitting infeasible for node {node}")


class SdpInfeasible(IscapError):
    """The relaxed transmit-beamforming problem has no feasible point."""


class ExtractionFailed(IscapError):
    """No rank-1 candidate recovered from the relaxed solution is feasible."""


class ConfigError(IscapError):
    """Bad configuration file content.

    Attributes:
        line: 1-based line number the error refers to (0 when not tied to a line).
    """

    def __init__(self, message: str, line: int = 0):
        self.line = line
        if line:
            message = f"line {line}: {message}"
        super().__init__(message)
