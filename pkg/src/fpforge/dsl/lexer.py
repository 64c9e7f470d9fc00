"""Tokenizer for the filter DSL."""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = ["DslError", "Token", "tokenize", "KEYWORDS"]

KEYWORDS = frozenset({"input", "output", "float", "for", "end"})


class DslError(Exception):
    """Diagnostic tied to a source position; prints as ``file:line:col: msg``."""

    def __init__(self, message: str, line: int = 0, col: int = 0, filename: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename

    def __str__(self) -> str:
        return f"{self.filename}:{self.line}:{self.col}: {self.message}"


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, KEYWORD, NUMBER, OP, NEWLINE, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>>>|[-+*/=()\[\],:])
    """,
    re.VERBOSE,
)


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if not m:
            raise DslError(f"unexpected character {source[pos]!r}", line, col, filename)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            tokens.append(Token("NEWLINE", "\n", line, col))
            line += 1
            line_start = m.end()
        elif kind == "number":
            tokens.append(Token("NUMBER", text, line, col))
        elif kind == "ident":
            tokens.append(Token("KEYWORD" if text in KEYWORDS else "IDENT", text, line, col))
        elif kind == "op":
            tokens.append(Token("OP", text, line, col))
        pos = m.end()
    tokens.append(Token("NEWLINE", "\n", line, pos - line_start + 1))
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens
