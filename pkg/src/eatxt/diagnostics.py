"""Shared diagnostic and error types used across the toolchain."""

from __future__ import annotations

from dataclasses import dataclass

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Span:
    """1-based position range in a source text. End columns are exclusive."""

    line: int
    col: int
    end_line: int
    end_col: int

    @classmethod
    def point(cls, line: int, col: int) -> "Span":
        return cls(line, col, line, col)


# Fallback span for diagnostics that have no source position (e.g. produced
# while reading an XML document, where the reader gives us no offsets).
NO_SPAN = Span(0, 0, 0, 0)


@dataclass
class Diagnostic:
    severity: str  # ERROR or WARNING
    message: str
    span: Span = NO_SPAN

    def format(self, path: str) -> str:
        """Render as ``path:line:col: severity: message``."""
        return f"{path}:{self.span.line}:{self.span.col}: {self.severity}: {self.message}"


def has_errors(diagnostics: list[Diagnostic]) -> bool:
    return any(d.severity == ERROR for d in diagnostics)


class ToolchainError(Exception):
    """Base class for hard failures (bad inputs rather than bad models)."""


class MetamodelError(ToolchainError):
    """Raised when a metamodel file cannot be loaded or fails validation."""


class GrammarError(ToolchainError):
    """Raised when a grammar cannot be generated or is internally broken."""


class ConfigError(ToolchainError):
    """Raised for malformed or rejected adaptation config files."""


class SerializationError(ToolchainError):
    """Raised when a model cannot be rendered (text or XML)."""


class ModelError(ToolchainError):
    """Raised for model-level lookups that cannot be answered, e.g. the
    qualified name of an element below an unnamed ancestor."""
