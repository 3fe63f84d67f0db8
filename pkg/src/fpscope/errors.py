"""Exception hierarchy shared by all fpscope modules."""


class FpscopeError(Exception):
    """Base class for every error raised by fpscope."""


class FormatError(FpscopeError):
    """Malformed image payload."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class UnsupportedFormatError(FpscopeError):
    """Input is not one of the natively supported formats."""


class GeometryError(FpscopeError):
    """Image dimensions incompatible with the requested operation."""


class DegenerateInputError(FpscopeError):
    """Input has no usable variation (e.g. a constant image)."""


class DomainError(FpscopeError):
    """A value lies outside the domain of a mathematical operation."""


class ContractError(FpscopeError):
    """Caller violated a documented precondition."""


class CorpusError(FpscopeError):
    """Too few usable images in a corpus."""

    def __init__(self, message, errors=()):
        super().__init__(message)
        self.errors = list(errors)
