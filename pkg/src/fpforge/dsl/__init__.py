"""Front end of the filter DSL: parse, analyse, lower, interpret."""

from .interp import interpret
from .lexer import DslError, tokenize
from .lower import lower, parse_border
from .parser import parse
from .semantic import TypedProgram, WindowDecl, analyze
from .syntax import Program, to_source

__all__ = [
    "DslError",
    "Program",
    "TypedProgram",
    "WindowDecl",
    "analyze",
    "interpret",
    "lower",
    "parse",
    "parse_border",
    "to_source",
    "tokenize",
]
