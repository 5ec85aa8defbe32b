"""Exception hierarchy shared by all modules."""


class CryptoHermError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(CryptoHermError):
    """A numerical certificate or algorithm failed."""


class NonConvergence(NumericalError):
    pass


class DefectiveMatrix(NumericalError):
    pass


class SingularWeight(NumericalError):
    pass


class NotHermitian(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ComplexSpectrum(NumericalError):
    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)


class HermitizationFailed(NumericalError):
    pass


class CertificateFailed(NumericalError):
    """A constructed object failed its own post-condition check."""


class IllConditionedOmega(NumericalError):
    pass


class WindowViolation(NumericalError):
    pass


class StepSizeUnderflow(NumericalError):
    pass


class GridMismatch(CryptoHermError):
    pass


class DegeneratePath(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


class SingularTMap(NumericalError):
    pass


class CenterOutOfRange(CryptoHermError, ValueError):
    pass


class BandEdge(NumericalError):
    pass


class SupportTouchesLead(CryptoHermError, ValueError):
    pass


class ConfigError(CryptoHermError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None, line=None):
        loc = []
        if field is not None:
            loc.append(f"field {field!r}")
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.field = field
        self.line = line


class InfeasibleBand(UserWarning):
    """Out-of-band metric mass stayed above the requested tolerance."""


class NoPolesFound(UserWarning):
    """A pole scan returned an empty table."""
