"""Exception hierarchy shared by the engine, model, data and CLI layers."""
from __future__ import annotations

from typing import Optional


class SSGRLError(Exception):
    """Base class for every error raised by this project."""


class DimensionError(SSGRLError, ValueError):
    pass


class NumericError(SSGRLError, ArithmeticError):
    pass


class ConfigurationError(SSGRLError, ValueError):
    pass


class InputError(SSGRLError, ValueError):
    pass


class ParseError(SSGRLError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(SSGRLError, ValueError):
    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"byte offset {offset}: {message}"
        super().__init__(message)


class EmbeddingLookupError(SSGRLError, KeyError):
    def __init__(self, word: str):
        self.word = word
        super().__init__(f"no embedding for category word '{word}'")

    def __str__(self) -> str:
        return self.args[0]


class CheckFailure(SSGRLError):
    pass
