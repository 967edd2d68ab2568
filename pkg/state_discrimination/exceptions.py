class DiscriminationError(Exception):
    pass


class NumericsError(DiscriminationError):
    pass


class DimensionCapError(NumericsError):
    """Raised when a composite dimension exceeds the configured cap."""
    pass


class SymmetryError(DiscriminationError):
    pass


class StateSetError(DiscriminationError):
    pass


class MeasurementError(DiscriminationError):
    pass


class DilationError(DiscriminationError):
    pass
