"""Recursive-descent parser for the filter DSL.

Grammar (newline-terminated statements, ``#`` comments)::

    program    := { [stmt] NEWLINE }
    stmt       := format | io | vardecl | resolution | assign | for
    format     := 'float' INT '(' INT ',' INT ')'          e.g. float16(10,5)
    io         := ('input' | 'output') IDENT { ',' IDENT }
    vardecl    := 'float' item { ',' item } ;  item := IDENT { '[' INT ']' }
    resolution := 'image_resolution' '(' INT ',' INT ')'  width, height
    assign     := target '=' expr | '(' target ',' target ')' '=' expr
    target     := IDENT { '[' expr ']' }
    for        := 'for' IDENT '=' INT ':' INT NEWLINE { [stmt] NEWLINE } 'end'
    expr       := term { ('+' | '-') term }
    term       := unary { ('*' | '/') unary }
    unary      := '-' unary | primary
    primary    := NUMBER | target | call | '(' expr ')' | array
    call       := IDENT '(' [ expr { ',' expr } ] ')' [ '>>' INT ]
    array      := '[' row { ',' row } ']' ;  row := '[' expr { ',' expr } ']'
"""

from __future__ import annotations

import re

from .lexer import DslError, Token, tokenize
from .syntax import (
    BUILTINS,
    ArrayLit,
    Assign,
    BinOp,
    Call,
    For,
    FormatDecl,
    Index,
    IODecl,
    Name,
    Neg,
    Num,
    Program,
    Resolution,
    Shift,
    VarDecl,
)

__all__ = ["parse"]

_FORMAT_IDENT = re.compile(r"^float(\d+)$")


class _Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.toks = tokens
        self.i = 0
        self.filename = filename

    # -- helpers -----------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Token | None = None) -> DslError:
        tok = tok or self.tok
        return DslError(msg, tok.line, tok.col, self.filename)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            want = repr(text) if text else kind.lower()
            got = "end of line" if self.tok.kind == "NEWLINE" else repr(self.tok.text or "end of file")
            raise self.error(f"expected {want}, got {got}")
        return self.advance()

    def expect_int(self) -> int:
        t = self.expect("NUMBER")
        if not t.text.isdigit():
            raise self.error(f"expected an integer, got {t.text!r}", t)
        return int(t.text)

    def end_of_stmt(self):
        if not self.at("NEWLINE"):
            raise self.error(f"unexpected {self.tok.text!r} after statement")
        self.advance()

    # -- statements --------------------------------------------------------

    def program(self) -> Program:
        stmts = self.block(top=True)
        return Program(stmts, self.filename)

    def block(self, top: bool) -> list:
        stmts = []
        while True:
            if self.at("EOF"):
                if not top:
                    raise self.error("missing 'end' for 'for' loop")
                return stmts
            if self.at("NEWLINE"):
                self.advance()
                continue
            if self.at("KEYWORD", "end"):
                if top:
                    raise self.error("'end' without matching 'for'")
                self.advance()
                return stmts
            stmts.append(self.statement())
            self.end_of_stmt()

    def statement(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "KEYWORD":
            if t.text in ("input", "output"):
                self.advance()
                names = [self.expect("IDENT").text]
                while self.at("OP", ","):
                    self.advance()
                    names.append(self.expect("IDENT").text)
                return IODecl(t.text, names, pos)
            if t.text == "float":
                self.advance()
                items = [self.decl_item()]
                while self.at("OP", ","):
                    self.advance()
                    items.append(self.decl_item())
                return VarDecl(items, pos)
            if t.text == "for":
                return self.for_loop()
            raise self.error(f"unexpected keyword {t.text!r}")
        if t.kind == "IDENT" and _FORMAT_IDENT.match(t.text) and self.peek().text == "(":
            self.advance()
            self.expect("OP", "(")
            mant = self.expect_int()
            self.expect("OP", ",")
            exp = self.expect_int()
            self.expect("OP", ")")
            return FormatDecl(int(_FORMAT_IDENT.match(t.text).group(1)), mant, exp, pos)
        if t.kind == "IDENT" and t.text == "image_resolution":
            self.advance()
            self.expect("OP", "(")
            width = self.expect_int()
            self.expect("OP", ",")
            height = self.expect_int()
            self.expect("OP", ")")
            return Resolution(width, height, pos)
        if self.at("OP", "("):
            self.advance()
            targets = [self.target()]
            while self.at("OP", ","):
                self.advance()
                targets.append(self.target())
            self.expect("OP", ")")
            self.expect("OP", "=")
            return Assign(targets, self.expr(), pos)
        if t.kind == "IDENT":
            target = self.target()
            if not self.at("OP", "="):
                raise self.error(f"expected '=' after {t.text!r}")
            self.advance()
            return Assign([target], self.expr(), pos)
        raise self.error(f"unexpected {t.text!r} at start of statement")

    def decl_item(self):
        name = self.expect("IDENT").text
        dims = []
        while self.at("OP", "["):
            self.advance()
            dims.append(self.expect_int())
            self.expect("OP", "]")
        return (name, tuple(dims))

    def for_loop(self) -> For:
        t = self.expect("KEYWORD", "for")
        var = self.expect("IDENT").text
        self.expect("OP", "=")
        start = self.expect_int()
        self.expect("OP", ":")
        stop = self.expect_int()
        self.end_of_stmt()
        body = self.block(top=False)
        return For(var, start, stop, body, (t.line, t.col))

    def target(self):
        t = self.expect("IDENT")
        if t.text in BUILTINS:
            raise self.error(f"cannot assign to builtin {t.text!r}", t)
        indices = []
        while self.at("OP", "["):
            self.advance()
            indices.append(self.expr())
            self.expect("OP", "]")
        pos = (t.line, t.col)
        return Index(t.text, indices, pos) if indices else Name(t.text, pos)

    # -- expressions -------------------------------------------------------

    def expr(self):
        left = self.term()
        while self.at("OP", "+") or self.at("OP", "-"):
            op = self.advance()
            left = BinOp(op.text, left, self.term(), (op.line, op.col))
        return left

    def term(self):
        left = self.unary()
        while self.at("OP", "*") or self.at("OP", "/"):
            op = self.advance()
            left = BinOp(op.text, left, self.unary(), (op.line, op.col))
        return left

    def unary(self):
        if self.at("OP", "-"):
            t = self.advance()
            return Neg(self.unary(), (t.line, t.col))
        return self.primary()

    def primary(self):
        t = self.tok
        pos = (t.line, t.col)
        if t.kind == "NUMBER":
            self.advance()
            return Num(float(t.text), t.text, pos)
        if self.at("OP", "("):
            self.advance()
            e = self.expr()
            self.expect("OP", ")")
            return e
        if self.at("OP", "["):
            return self.array()
        if t.kind == "IDENT":
            if self.peek().text == "(" and self.peek().kind == "OP":
                return self.call()
            return self.target()
        got = "end of line" if t.kind == "NEWLINE" else repr(t.text or "end of file")
        raise self.error(f"expected an expression, got {got}")

    def call(self):
        t = self.advance()
        pos = (t.line, t.col)
        if t.text not in BUILTINS:
            raise self.error(f"unknown builtin {t.text!r}", t)
        self.expect("OP", "(")
        args = []
        if not self.at("OP", ")"):
            args.append(self.expr())
            while self.at("OP", ","):
                self.advance()
                args.append(self.expr())
        self.expect("OP", ")")
        if t.text in ("FP_RSH", "FP_LSH"):
            if len(args) != 1:
                raise self.error(f"{t.text} takes 1 argument, got {len(args)}", t)
            if not self.at("OP", ">>"):
                raise self.error(f"{t.text}(x) must be followed by '>> k'")
            self.advance()
            return Shift(t.text, args[0], self.expect_int(), pos)
        return Call(t.text, args, pos)

    def array(self) -> ArrayLit:
        t = self.expect("OP", "[")
        rows = []
        while True:
            self.expect("OP", "[")
            row = [self.expr()]
            while self.at("OP", ","):
                self.advance()
                row.append(self.expr())
            self.expect("OP", "]")
            rows.append(row)
            if not self.at("OP", ","):
                break
            self.advance()
        self.expect("OP", "]")
        return ArrayLit(rows, (t.line, t.col))


def parse(source: str, filename: str = "<input>") -> Program:
    """Parse DSL text into a :class:`Program`; raises :class:`DslError`."""
    return _Parser(tokenize(source, filename), filename).program()
