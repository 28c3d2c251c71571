"""Exception hierarchy shared by the library and the command line driver."""


class DmdsegError(Exception):
    """Base class for all errors raised by dmdseg."""


class ValidationError(DmdsegError, ValueError):
    """Invalid input values, shapes or configuration."""


class FormatError(DmdsegError, ValueError):
    """A file exists but is not a well-formed image, manifest or CSV."""


class NumericalError(DmdsegError, ArithmeticError):
    """A numerical stage failed (rank zero data, eigen-solver failure, ...)."""


class EmptySegmentationError(NumericalError):
    """Thresholding left no foreground pixels to select a template from."""
