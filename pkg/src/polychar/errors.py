"""Exception hierarchy shared by every module."""


class PolycharError(Exception):
    """Base class for all library errors."""


class NotHermitian(PolycharError):
    pass


class NotPSD(PolycharError):
    pass


class AmbientMismatch(PolycharError):
    pass


class NotRowContraction(PolycharError):
    pass


class NotCommuting(PolycharError):
    pass


class NearSingularResolvent(PolycharError):
    pass


class DegreeUndetermined(PolycharError):
    pass


class NotRegular(PolycharError):
    pass


class NotUpperTriangular(PolycharError):
    pass


class ReconstructionFailed(PolycharError):
    pass


class NotContraction(PolycharError):
    pass


class ConnectorSearchFailed(PolycharError):
    pass


class HypothesisUnmet(PolycharError):
    """Raised with a ``failed`` attribute naming the unmet hypothesis."""

    def __init__(self, failed, message=None):
        self.failed = failed
        super().__init__(message or f"hypothesis unmet: {failed}")


class BandCorrupted(PolycharError):
    pass


class GenerationFailed(PolycharError):
    pass


class ParseError(PolycharError):
    pass
