"""fpscope: second-order statistics and artifact detectors for image corpora.

Typical use goes through :func:`fpscope.pipeline.analyze` or the ``fpscope``
command; the submodules expose every stage on its own.
"""

__version__ = "0.1.0"

from .errors import (ContractError, CorpusError, DegenerateInputError, DomainError,  # noqa: E402
                     FormatError, FpscopeError, GeometryError, UnsupportedFormatError)

__all__ = ["__version__", "FpscopeError", "FormatError", "UnsupportedFormatError",
           "GeometryError", "DegenerateInputError", "DomainError", "ContractError",
           "CorpusError"]
