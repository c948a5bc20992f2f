"""Exception hierarchy.

Numerical failures (``NumericalError`` subclasses) map to CLI exit code 1,
configuration and input problems map to exit code 2.
"""


class QDCError(Exception):
    """Base class for all library errors."""

    code = "QDCError"


class NumericalError(QDCError):
    code = "NumericalError"


class InputError(QDCError, ValueError):
    code = "InputError"


class ZeroVector(InputError):
    code = "ZeroVector"


class DimensionMismatch(InputError):
    code = "DimensionMismatch"


class ShapeMismatch(DimensionMismatch):
    code = "ShapeMismatch"


class NonHermitian(InputError):
    code = "NonHermitian"


class BadLabels(InputError):
    code = "BadLabels"


class EmptyClass(InputError):
    code = "EmptyClass"


class BadSeeds(InputError):
    code = "BadSeeds"


class BadSizes(InputError):
    code = "BadSizes"


class ConfigError(InputError):
    code = "ConfigError"


class AllFiltered(NumericalError):
    code = "AllFiltered"


class SingularSystem(NumericalError):
    code = "SingularSystem"


class NonFinite(NumericalError):
    code = "NonFinite"
