"""Exception hierarchy shared across the package."""


class YtxError(Exception):
    """Base class for all package errors."""


class ConfigError(YtxError):
    """Invalid configuration: unknown transform kinds, bad role JSON, bad flags."""


class DataError(YtxError):
    """Problems with the input data: missing files, missing columns, no usable rows."""


class TransformDomainError(YtxError):
    """A value fell outside the domain of a transform.

    ``index`` is the position of the first offending value, when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
