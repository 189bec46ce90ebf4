"""Abstract syntax for CSG programs and their s-expression text form.

Grammar::

    expr := (circle X Y R)
          | (rect X1 Y1 X2 Y2)
          | (union EXPR EXPR)
          | (diff EXPR EXPR)
          | (repeat EXPR DX DY COUNT)

All parameters are decimal integers on the pixel grid. Serialization is
deterministic and ``parse(serialize(e)) == e`` for every expression.
"""

from __future__ import annotations

from dataclasses import dataclass


class Expr:
    """Base class for CSG expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def children(self) -> tuple["Expr", ...]:
        return ()

    def __str__(self) -> str:
        return serialize(self)


@dataclass(frozen=True, slots=True)
class Circle(Expr):
    x: int
    y: int
    r: int


@dataclass(frozen=True, slots=True)
class Rect(Expr):
    x1: int
    y1: int
    x2: int
    y2: int


@dataclass(frozen=True, slots=True)
class Union(Expr):
    left: Expr
    right: Expr

    def children(self) -> tuple[Expr, ...]:
        return (self.left, self.right)


@dataclass(frozen=True, slots=True)
class Diff(Expr):
    left: Expr
    right: Expr

    def children(self) -> tuple[Expr, ...]:
        return (self.left, self.right)


@dataclass(frozen=True, slots=True)
class Repeat(Expr):
    body: Expr
    dx: int
    dy: int
    count: int

    def children(self) -> tuple[Expr, ...]:
        return (self.body,)


def node_count(e: Expr) -> int:
    """Number of AST nodes: primitives count 1, operators 1 plus their children.

    Repeat's scalar parameters are not nodes.
    """
    if isinstance(e, (Circle, Rect)):
        return 1
    if isinstance(e, (Union, Diff)):
        return 1 + node_count(e.left) + node_count(e.right)
    if isinstance(e, Repeat):
        return 1 + node_count(e.body)
    raise TypeError(f"not an Expr: {e!r}")


def depth(e: Expr) -> int:
    """AST depth with primitives at depth 1."""
    if isinstance(e, (Circle, Rect)):
        return 1
    return 1 + max(depth(c) for c in e.children())


def subterms(e: Expr):
    """Yield every subterm of e, including e itself (pre-order)."""
    yield e
    for child in e.children():
        yield from subterms(child)


def serialize(e: Expr) -> str:
    if isinstance(e, Circle):
        return f"(circle {e.x} {e.y} {e.r})"
    if isinstance(e, Rect):
        return f"(rect {e.x1} {e.y1} {e.x2} {e.y2})"
    if isinstance(e, Union):
        return f"(union {serialize(e.left)} {serialize(e.right)})"
    if isinstance(e, Diff):
        return f"(diff {serialize(e.left)} {serialize(e.right)})"
    if isinstance(e, Repeat):
        return f"(repeat {serialize(e.body)} {e.dx} {e.dy} {e.count})"
    raise TypeError(f"not an Expr: {e!r}")


class ParseError(ValueError):
    """Syntax error with the offending position in the input text."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def next(self) -> tuple[str, str, int]:
        """Return (kind, value, pos); kind is one of open/close/atom/eof."""
        text = self.text
        n = len(text)
        while self.pos < n and text[self.pos].isspace():
            self.pos += 1
        if self.pos >= n:
            return "eof", "", self.pos
        start = self.pos
        ch = text[start]
        if ch == "(":
            self.pos += 1
            return "open", "(", start
        if ch == ")":
            self.pos += 1
            return "close", ")", start
        while self.pos < n and not text[self.pos].isspace() and text[self.pos] not in "()":
            self.pos += 1
        return "atom", text[start : self.pos], start


def _parse_int(tok: _Tokenizer, what: str) -> int:
    kind, value, pos = tok.next()
    if kind != "atom":
        raise ParseError(f"expected {what}, got {value or kind!r}", pos)
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {value!r}", pos) from None


def _parse_expr(tok: _Tokenizer) -> Expr:
    kind, value, pos = tok.next()
    if kind != "open":
        raise ParseError(f"expected '(', got {value or kind!r}", pos)
    kind, head, head_pos = tok.next()
    if kind != "atom":
        raise ParseError(f"expected operator name, got {head or kind!r}", head_pos)
    if head == "circle":
        e: Expr = Circle(_parse_int(tok, "x"), _parse_int(tok, "y"), _parse_int(tok, "r"))
    elif head == "rect":
        e = Rect(_parse_int(tok, "x1"), _parse_int(tok, "y1"), _parse_int(tok, "x2"), _parse_int(tok, "y2"))
    elif head == "union":
        e = Union(_parse_expr(tok), _parse_expr(tok))
    elif head == "diff":
        e = Diff(_parse_expr(tok), _parse_expr(tok))
    elif head == "repeat":
        e = Repeat(_parse_expr(tok), _parse_int(tok, "dx"), _parse_int(tok, "dy"), _parse_int(tok, "count"))
    else:
        raise ParseError(f"unknown operator {head!r}", head_pos)
    kind, value, pos = tok.next()
    if kind != "close":
        raise ParseError(f"expected ')', got {value or kind!r}", pos)
    return e


def parse(text: str) -> Expr:
    """Parse a single program from s-expression text."""
    tok = _Tokenizer(text)
    e = _parse_expr(tok)
    kind, value, pos = tok.next()
    if kind != "eof":
        raise ParseError(f"trailing input {value!r}", pos)
    return e


def load_program(path) -> Expr:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def save_program(e: Expr, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(e) + "\n")
