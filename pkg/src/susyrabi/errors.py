class SusyRabiError(Exception):
    """Base class for package errors."""


class OffSusyLineError(SusyRabiError, ValueError):
    pass


class KernelGapError(SusyRabiError):
    """No clean separation between the numerical kernel and the rest of the spectrum."""


class AmbiguousClusterError(SusyRabiError):
    """Zero eigenvalue cluster of a Liouvillian is not separated from the bulk."""


class DefectiveClusterError(SusyRabiError):
    """Left/right zero eigenvectors could not be biorthonormalized."""


class TruncationError(SusyRabiError, ValueError):
    pass


class DimensionGuardError(SusyRabiError, ValueError):
    pass
