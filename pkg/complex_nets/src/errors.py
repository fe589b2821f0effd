class CVNNError(ValueError):
    """Base class for every error raised by the library."""


class ShapeError(CVNNError):
    pass


class DTypeError(CVNNError):
    pass


class FormatError(CVNNError):
    """Malformed .cvt stream or checkpoint."""


class GradientError(CVNNError):
    pass


class ConfigError(CVNNError):
    """Invalid run configuration, environment setting or layer vocabulary."""


class NumericCheckError(CVNNError):
    """A numeric check (gradcheck, benchmark agreement) failed its tolerance."""
