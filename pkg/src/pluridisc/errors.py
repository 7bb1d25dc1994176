"""Exception types raised across the package."""


class PluriError(ValueError):
    """Base class for structured input errors."""


class DimensionMismatch(PluriError):
    def __init__(self, expected, got, what="point"):
        super().__init__(f"{what} has dimension {got}, expected {expected}")
        self.expected = expected
        self.got = got


class NotBoundarySet(PluriError):
    """A set expression that must live on the unit circle contains other primitives."""


class InfeasibleDisc(PluriError):
    """An analytic disc leaves the domain on its boundary samples."""


class OutsideDomain(PluriError):
    """An evaluation point is not interior to the domain."""


class ConfigError(PluriError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
