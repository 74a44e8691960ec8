"""Exception hierarchy shared by the solver, the bounds and the CLI."""


class DeconvolutionError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(DeconvolutionError, ValueError):
    pass


class DimensionMismatch(InvalidArgument):
    pass


class ModelMismatch(InvalidArgument):
    """A bound was requested for a noise model it does not cover."""


class DegenerateExcitation(DeconvolutionError):
    """The excitation estimate collapsed to zero, so the filter step is undefined."""


class NumericalFailure(DeconvolutionError):
    """A solve produced non-finite values.

    ``trace`` carries the iterations completed before the failure, if any.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BoundInapplicable(DeconvolutionError):
    """The precondition of an error bound does not hold for this instance."""


class IOFailure(DeconvolutionError):
    """A file could not be read or written, or its contents are inconsistent."""


class UnsupportedFormat(IOFailure):
    pass
