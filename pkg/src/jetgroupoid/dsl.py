"""Text grammar for expressions and natural-bundle actions.

Expression grammar (also used in reports)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := primary (("^" | "**") ["-"] INT)?
    primary:= INT | "(" expr ")" | symbol
    symbol := "J[" i "," k ("," l)* "]"        jet y^i_{k l ...}
            | "x" INT | "y" INT                 source / target coordinate
            | NAME ("[" k ("," l)* "]")? "@" ("x" | "y")
                                                derivative of object component
            | NAME                              fibre coordinate (action files only)

Action files::

    object NAME {
      dim INT
      order INT
      components NAME+ [symmetric | antisymmetric]
      action NAME' = expr
      ...
    }
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DSLSyntaxError, UnknownSymbol
from .kernel import SOURCE, TARGET, Atom, Expr, base_coord, jet_var, obj_deriv, to_string

KEYWORDS = {"object", "dim", "order", "components", "symmetric", "antisymmetric", "action"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^()\[\]{},'=@])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind != "ws":
                tokens.append(Token(kind, s, line, col))
            col += len(s)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


def _dims(directions, n, tok):
    alpha = [0] * n
    for k in directions:
        if not 1 <= k <= n:
            raise DSLSyntaxError(f"direction {k} out of range 1..{n}", tok.line, tok.col)
        alpha[k - 1] += 1
    return tuple(alpha)


class _Parser:
    def __init__(self, text, n=None, components=()):
        self.toks = tokenize(text)
        self.i = 0
        self.n = n
        self.components = set(components)

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            return self.next()
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            got = self.tok.text or "end of input"
            raise DSLSyntaxError(f"expected {text!r}, got {got!r}", self.tok.line, self.tok.col)
        return t

    def expect_kind(self, kind, what):
        if self.tok.kind != kind:
            got = self.tok.text or "end of input"
            raise DSLSyntaxError(f"expected {what}, got {got!r}", self.tok.line, self.tok.col)
        return self.next()

    def int_list(self):
        vals = [int(self.expect_kind("int", "integer").text)]
        while self.accept(","):
            vals.append(int(self.expect_kind("int", "integer").text))
        return vals

    # expressions
    def expr(self):
        e = self.term()
        while True:
            if self.accept("+"):
                e = e + self.term()
            elif self.accept("-"):
                e = e - self.term()
            else:
                return e

    def term(self):
        e = self.unary()
        while True:
            if self.accept("*"):
                e = e * self.unary()
            elif self.tok.text == "/" and self.tok.kind == "op":
                t = self.next()
                d = self.unary()
                if d.is_zero():
                    raise DSLSyntaxError("division by zero", t.line, t.col)
                e = e / d
            else:
                return e

    def unary(self):
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.accept("^") or self.accept("**"):
            neg = self.accept("-") is not None
            k = int(self.expect_kind("int", "integer exponent").text)
            if neg and base.is_zero():
                raise DSLSyntaxError("zero to a negative power", self.tok.line, self.tok.col)
            return base ** (-k if neg else k)
        return base

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.next()
            return Expr.const(int(t.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            return Expr.of(self.symbol())
        got = t.text or "end of input"
        raise DSLSyntaxError(f"unexpected {got!r}", t.line, t.col)

    def need_n(self, t):
        if self.n is None:
            raise DSLSyntaxError("base dimension unknown; cannot read jet indices", t.line, t.col)
        return self.n

    def symbol(self) -> Atom:
        t = self.next()
        name = t.text
        if name in KEYWORDS:
            raise DSLSyntaxError(f"unexpected keyword {name!r}", t.line, t.col)
        if name == "J" and self.tok.text == "[":
            self.next()
            vals = self.int_list()
            self.expect("]")
            if len(vals) < 2:
                raise DSLSyntaxError("jet symbol needs a component and a direction", t.line, t.col)
            n = self.need_n(t)
            if not 1 <= vals[0] <= n:
                raise DSLSyntaxError(f"component {vals[0]} out of range 1..{n}", t.line, t.col)
            return jet_var(vals[0], _dims(vals[1:], n, t))
        m = re.fullmatch(r"([xy])(\d+)", name)
        if m and self.tok.text not in ("@", "["):
            i = int(m.group(2))
            if self.n is not None and not 1 <= i <= self.n:
                raise DSLSyntaxError(f"coordinate index {i} out of range", t.line, t.col)
            if m.group(1) == "x":
                return base_coord(i)
            return jet_var(i, (0,) * self.need_n(t))
        directions = []
        if self.tok.text == "[":
            self.next()
            directions = self.int_list()
            self.expect("]")
        if self.accept("@"):
            side = self.expect_kind("name", "'x' or 'y'")
            if side.text not in (SOURCE, TARGET):
                raise DSLSyntaxError("side must be 'x' or 'y'", side.line, side.col)
            n = self.need_n(t) if directions else (self.n or 0)
            return obj_deriv(name, _dims(directions, n, t) if directions else (0,) * n, side.text)
        if directions:
            raise DSLSyntaxError("expected '@x' or '@y' after derivative indices", self.tok.line, self.tok.col)
        if name in self.components:
            return obj_deriv(name, (0,) * (self.n or 0), TARGET)
        raise UnknownSymbol(f"unknown symbol {name!r} at line {t.line}, column {t.col}")


def parse_expr(text: str, n: int | None = None, components=()) -> Expr:
    """Parse a single expression.  ``n`` is needed for jet and derivative indices."""
    p = _Parser(text, n, components)
    e = p.expr()
    if p.tok.kind != "eof":
        raise DSLSyntaxError(f"unexpected {p.tok.text!r}", p.tok.line, p.tok.col)
    return e


@dataclass
class ParsedAction:
    name: str
    n: int
    q: int
    components: list[str]
    symmetry: str | None
    laws: list[Expr]


def parse_action_text(text: str) -> ParsedAction:
    p = _Parser(text)
    p.expect("object")
    name = p.expect_kind("name", "object name").text
    p.expect("{")
    p.expect("dim")
    n = int(p.expect_kind("int", "dimension").text)
    p.expect("order")
    q = int(p.expect_kind("int", "order").text)
    p.expect("components")
    comps = []
    while p.tok.kind == "name" and p.tok.text not in KEYWORDS:
        t = p.next()
        if t.text == "J" or re.fullmatch(r"[xy]\d+", t.text):
            raise DSLSyntaxError(f"reserved name {t.text!r}", t.line, t.col)
        if t.text in comps:
            raise DSLSyntaxError(f"duplicate component {t.text!r}", t.line, t.col)
        comps.append(t.text)
    if not comps:
        raise DSLSyntaxError("expected at least one component", p.tok.line, p.tok.col)
    symmetry = None
    for kw in ("symmetric", "antisymmetric"):
        if p.accept(kw):
            symmetry = kw
    p.n = n
    p.components = set(comps)
    laws = {}
    if p.tok.text != "action":
        raise DSLSyntaxError("expected 'action'", p.tok.line, p.tok.col)
    while p.accept("action"):
        t = p.expect_kind("name", "component name")
        if t.text not in p.components:
            raise UnknownSymbol(f"unknown component {t.text!r} at line {t.line}, column {t.col}")
        if t.text in laws:
            raise DSLSyntaxError(f"second action for {t.text!r}", t.line, t.col)
        p.expect("'")
        p.expect("=")
        laws[t.text] = p.expr()
    p.expect("}")
    if p.tok.kind != "eof":
        raise DSLSyntaxError(f"trailing input {p.tok.text!r}", p.tok.line, p.tok.col)
    missing = [c for c in comps if c not in laws]
    if missing:
        raise DSLSyntaxError(f"no action given for {', '.join(missing)}", p.tok.line, p.tok.col)
    return ParsedAction(name, n, q, comps, symmetry, [laws[c] for c in comps])


def action_name_of(components):
    """Atom renderer used inside action files: fibre placeholders print bare."""
    comps = set(components)

    def name_of(a: Atom) -> str:
        if a.kind == "w" and a.side == TARGET and not any(a.index) and a.comp in comps:
            return a.comp
        return str(a)

    return name_of


def format_action(name, n, q, components, symmetry, laws) -> str:
    lines = [f"object {name} {{", f"  dim {n}", f"  order {q}", "  components " + " ".join(components)]
    if symmetry:
        lines.append(f"  {symmetry}")
    name_of = action_name_of(components)
    for c, law in zip(components, laws):
        lines.append(f"  action {c}' = {to_string(law, name_of)}")
    lines.append("}")
    return "\n".join(lines) + "\n"
