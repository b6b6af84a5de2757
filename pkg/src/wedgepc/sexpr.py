"""Minimal s-expression reader and writer used by every file format in the package.

Atoms are integers or symbols (plain ``str``).  Lists are Python lists.  A ``;``
starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from typing import Iterator, List, Union

SExpr = Union[int, str, List["SExpr"]]


class SExprError(ValueError):
    """Syntax error with a 1-based line/column position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class Token(str):
    """A symbol atom that remembers where it was read."""

    line: int
    col: int

    def __new__(cls, text, line, col):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


class Form(list):
    """A parsed list that remembers where its opening parenthesis was."""

    line = 0
    col = 0


_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")
_INT = re.compile(r"-?\d+\Z")


def _tokens(text: str) -> Iterator[tuple[str, int, int]]:
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # pragma: no cover - the pattern matches any character
            raise SExprError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        tok = m.group()
        if not tok[0].isspace() and tok[0] != ";":
            yield tok, line, pos - line_start + 1
        for i, ch in enumerate(tok):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()


def loads_all(text: str) -> list[SExpr]:
    """Parse every top-level form in ``text``."""
    stack: list[Form] = []
    out: list[SExpr] = []
    for tok, line, col in _tokens(text):
        if tok == "(":
            form = Form()
            form.line, form.col = line, col
            stack.append(form)
        elif tok == ")":
            if not stack:
                raise SExprError("unbalanced ')'", line, col)
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            atom: SExpr = int(tok) if _INT.match(tok) else Token(tok, line, col)
            (stack[-1] if stack else out).append(atom)
    if stack:
        raise SExprError("unclosed '('", stack[-1].line, stack[-1].col)
    return out


def loads(text: str) -> SExpr:
    """Parse exactly one top-level form."""
    forms = loads_all(text)
    if len(forms) != 1:
        raise SExprError(f"expected one top-level form, found {len(forms)}", 1, 1)
    return forms[0]


def where(x) -> tuple[int, int]:
    """Best-effort source position of a parsed value."""
    return getattr(x, "line", 0), getattr(x, "col", 0)


def fail(message: str, x) -> SExprError:
    line, col = where(x)
    return SExprError(message, line, col)


def dumps(x: SExpr) -> str:
    """Serialize on one line with single spaces (canonical form)."""
    if isinstance(x, list):
        return "(" + " ".join(dumps(e) for e in x) + ")"
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def dumps_pretty(x: SExpr, indent: int = 0, width: int = 88) -> str:
    """Serialize with line breaks once a form gets wider than ``width``."""
    flat = dumps(x)
    if not isinstance(x, list) or len(flat) + indent <= width or len(x) < 2:
        return flat
    head = dumps(x[0])
    pad = " " * (indent + 2)
    parts = [dumps_pretty(e, indent + 2, width) for e in x[1:]]
    return "(" + head + "\n" + "\n".join(pad + p for p in parts) + ")"


def expect_head(form, head: str) -> Form:
    if not isinstance(form, list) or not form or form[0] != head:
        raise fail(f"expected ({head} ...)", form)
    return form
