"""Exception types raised across the package."""


class GhostKSError(ValueError):
    """Base class for all validation and data errors."""


class InvalidParameterError(GhostKSError):
    pass


class InvalidDensityError(GhostKSError):
    pass


class EmptyMeasurementError(GhostKSError):
    """A spectrum with zero total counts was used where counts are required."""


class GridMismatchError(GhostKSError):
    pass


class OutOfRangeError(GhostKSError):
    """Wavelength outside the support of a tabulated profile."""


class InvalidROIError(GhostKSError):
    pass


class FileFormatError(GhostKSError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ParseError(FileFormatError):
    pass


class NonMonotoneWavelengthError(FileFormatError):
    pass


class InvalidCountError(FileFormatError):
    """Negative or fractional photon count."""


class RaggedImageError(FileFormatError):
    pass


class CalibrationMissingError(FileFormatError):
    pass


class SchemaVersionError(FileFormatError):
    pass
