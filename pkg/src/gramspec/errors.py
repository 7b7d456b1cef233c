"""Exception hierarchy.

Errors fall into three families that the command line maps to exit codes:
bad input (1), inputs outside the supported domain such as singular or
non-sos quartics (2), and failed numerical certificates (3).
"""


class GramSpecError(Exception):
    """Base class for all package errors."""


class InputError(GramSpecError, ValueError):
    """Malformed or unsupported input data."""


class DomainError(GramSpecError):
    """The quartic is outside the supported domain."""


class NotSmoothError(DomainError):
    pass


class InfeasibleError(DomainError):
    """The form is not (strictly) a sum of squares within tolerance."""


class CertificateError(GramSpecError):
    """A numerical certificate that theory guarantees did not hold."""


class CountMismatchError(CertificateError):
    pass


class PartitionError(CertificateError):
    pass


class GraphShapeError(CertificateError):
    pass


class DetectorDisagreementError(CertificateError):
    pass


class FiveConcurrentError(CertificateError):
    pass


class SolverError(CertificateError):
    """The interior-point solver failed to reach its tolerances."""
