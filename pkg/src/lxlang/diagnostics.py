"""Source positions, diagnostics and the compile error carrying them."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SourcePos:
    file: str
    line: int
    column: int

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid source position {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"

    @classmethod
    def parse(cls, text: str) -> SourcePos:
        file, line, col = text.rsplit(":", 2)
        return cls(file, int(line), int(col))


@dataclass(frozen=True)
class Diagnostic:
    pos: SourcePos | None
    severity: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        where = str(self.pos) if self.pos is not None else "<unknown>"
        return f"{where}: {self.severity}: {self.message}"

    @property
    def is_error(self) -> bool:
        return self.severity == "error"


def error(pos: SourcePos | None, message: str) -> Diagnostic:
    return Diagnostic(pos, "error", message)


def warning(pos: SourcePos | None, message: str) -> Diagnostic:
    return Diagnostic(pos, "warning", message)


class CompileError(Exception):
    """Raised by a front-end stage that produced at least one error diagnostic."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.is_error]
