"""Exception types raised across the package."""


class StereoFuseError(Exception):
    """Base class for all package errors."""


class FormatError(StereoFuseError, ValueError):
    """A file does not follow the expected on-disk format."""


class ShapeError(StereoFuseError, ValueError):
    """Array dimensions are incompatible with the requested operation."""


class DomainError(StereoFuseError, ValueError):
    """Input values fall outside the domain an operation is defined on."""


class DegenerateInputError(StereoFuseError, ValueError):
    """Input is well-formed but carries no usable information (e.g. constant)."""


class ParameterError(StereoFuseError, ValueError):
    """An argument or configuration value is invalid."""
