"""Input language for polynomial programs.

A program is a variable declaration line followed by one expression:

    vars x1 in [-15, 15], x2 in [-15, 15], x3 in [-15, 15];
    -x1*x2 - 2*x2*x3 - x1 - x3

Grammar (rational literals only; division and any non-polynomial operation
are rejected):

    program  := "vars" decl ("," decl)* ";" expr
    decl     := NAME "in" "[" number "," number "]"
    expr     := term (("+" | "-") term)*
    term     := factor ("*" factor)*
    factor   := "-" factor | atom ("^" INT)?
    atom     := NAME | number | "(" expr ")"
    number   := INT | DECIMAL | INT "/" INT

"#" starts a comment that runs to end of line.

Expression nodes compare by object identity, not structurally.  That matters
for the rounding model: a subtree that is *shared* (the same object reachable
twice) is one computation and gets one rounding error, while two structurally
equal but distinct subtrees are independent computations.  The parser always
builds trees, with one exception: ``a^k`` desugars into k-1 multiplications
whose base is a single shared node, since a power is computed from one
evaluation of its base.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .poly import Interval, Polynomial


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


# -- AST ---------------------------------------------------------------------


@dataclass(eq=False)
class ExprNode:
    pass


@dataclass(eq=False)
class Constant(ExprNode):
    value: Fraction


@dataclass(eq=False)
class Variable(ExprNode):
    index: int


@dataclass(eq=False)
class Neg(ExprNode):
    operand: ExprNode


@dataclass(eq=False)
class Add(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(eq=False)
class Sub(ExprNode):
    left: ExprNode
    right: ExprNode


@dataclass(eq=False)
class Mul(ExprNode):
    left: ExprNode
    right: ExprNode


def children(node: ExprNode) -> tuple[ExprNode, ...]:
    if isinstance(node, (Constant, Variable)):
        return ()
    if isinstance(node, Neg):
        return (node.operand,)
    return (node.left, node.right)


def postorder(root: ExprNode) -> Iterator[ExprNode]:
    """Each reachable node exactly once (by identity), children first."""
    seen: set[int] = set()
    stack: list[tuple[ExprNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            yield node
        else:
            stack.append((node, True))
            for child in reversed(children(node)):
                stack.append((child, False))


def structurally_equal(a: ExprNode, b: ExprNode) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Constant):
        return a.value == b.value
    if isinstance(a, Variable):
        return a.index == b.index
    return all(structurally_equal(x, y) for x, y in zip(children(a), children(b)))


def flatten(root: ExprNode, nvars: int) -> Polynomial:
    """The exact polynomial a program computes, ignoring rounding."""
    memo: dict[int, Polynomial] = {}
    for node in postorder(root):
        if isinstance(node, Constant):
            value = Polynomial.constant(nvars, node.value)
        elif isinstance(node, Variable):
            value = Polynomial.variable(nvars, node.index)
        elif isinstance(node, Neg):
            value = -memo[id(node.operand)]
        elif isinstance(node, Add):
            value = memo[id(node.left)] + memo[id(node.right)]
        elif isinstance(node, Sub):
            value = memo[id(node.left)] - memo[id(node.right)]
        elif isinstance(node, Mul):
            value = memo[id(node.left)] * memo[id(node.right)]
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        memo[id(node)] = value
    return memo[id(root)]


# -- programs ------------------------------------------------------------------


@dataclass(frozen=True)
class ProgramSpec:
    """A named expression over box-constrained input variables."""

    name: str
    inputs: tuple[tuple[str, Fraction, Fraction], ...]
    body: ExprNode = field(compare=False)

    @property
    def n(self) -> int:
        return len(self.inputs)

    def box(self) -> list[Interval]:
        return [Interval(lo, hi) for _, lo, hi in self.inputs]

    def var_names(self) -> list[str]:
        return [name for name, _, _ in self.inputs]

    def exact_polynomial(self) -> Polynomial:
        return flatten(self.body, self.n)


# -- tokenizer -----------------------------------------------------------------

_PUNCT = {"+", "-", "*", "^", "(", ")", "[", "]", ",", ";"}


@dataclass(frozen=True)
class _Token:
    kind: str  # "name" | "number" | punctuation literal | "end"
    text: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("name", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    while k < n and source[k].isdigit():
                        k += 1
                    j = k
            tokens.append(_Token("number", source[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == "/":
            # only valid between integer literals, handled by the parser
            tokens.append(_Token("/", "/", line, start_col))
            i += 1
            col += 1
            continue
        if ch in _PUNCT:
            tokens.append(_Token(ch, ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("end", "", line, col))
    return tokens


# -- parser --------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            what = tok.text or "end of input"
            raise ParseError(f"expected {kind!r}, found {what!r}", tok.line, tok.col)
        return self.next()

    def fail(self, message: str):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    # number := INT | DECIMAL | INT "/" INT; returns an exact Fraction
    def parse_number(self, negative: bool = False) -> Fraction:
        tok = self.expect("number")
        value = self._literal_value(tok)
        if self.peek().kind == "/":
            if "." in tok.text or "e" in tok.text or "E" in tok.text:
                self.fail("rational literals need integer numerator and denominator")
            self.next()
            den_tok = self.expect("number")
            if not den_tok.text.isdigit():
                raise ParseError("rational literals need integer numerator and denominator", den_tok.line, den_tok.col)
            den = int(den_tok.text)
            if den == 0:
                raise ParseError("zero denominator", den_tok.line, den_tok.col)
            value = value / den
        return -value if negative else value

    @staticmethod
    def _literal_value(tok: _Token) -> Fraction:
        text = tok.text
        if text.isdigit():
            return Fraction(int(text))
        # Decimal or scientific literal: Fraction parses these exactly
        # (0.1 means 1/10, not the nearest double).
        return Fraction(text)

    def parse_program(self, name: str) -> ProgramSpec:
        kw = self.expect("name")
        if kw.text != "vars":
            raise ParseError(f"expected 'vars', found {kw.text!r}", kw.line, kw.col)
        inputs: list[tuple[str, Fraction, Fraction]] = []
        index: dict[str, int] = {}
        while True:
            name_tok = self.expect("name")
            if name_tok.text in index:
                raise ParseError(f"duplicate variable {name_tok.text!r}", name_tok.line, name_tok.col)
            in_tok = self.expect("name")
            if in_tok.text != "in":
                raise ParseError(f"expected 'in', found {in_tok.text!r}", in_tok.line, in_tok.col)
            self.expect("[")
            lo = self.parse_signed_number()
            self.expect(",")
            hi = self.parse_signed_number()
            self.expect("]")
            if lo > hi:
                raise ParseError(f"empty range for {name_tok.text!r}", name_tok.line, name_tok.col)
            index[name_tok.text] = len(inputs)
            inputs.append((name_tok.text, lo, hi))
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect(";")
        body = self.parse_expr(index)
        end = self.peek()
        if end.kind != "end":
            raise ParseError(f"unexpected trailing input {end.text!r}", end.line, end.col)
        return ProgramSpec(name=name, inputs=tuple(inputs), body=body)

    def parse_signed_number(self) -> Fraction:
        if self.peek().kind == "-":
            self.next()
            return self.parse_number(negative=True)
        if self.peek().kind == "+":
            self.next()
        return self.parse_number()

    def parse_expr(self, index: dict[str, int]) -> ExprNode:
        node = self.parse_term(index)
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            right = self.parse_term(index)
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def parse_term(self, index: dict[str, int]) -> ExprNode:
        node = self.parse_factor(index)
        while self.peek().kind == "*":
            self.next()
            node = Mul(node, self.parse_factor(index))
        return node

    def parse_factor(self, index: dict[str, int]) -> ExprNode:
        if self.peek().kind == "-":
            minus = self.next()
            # A minus directly on a literal is part of the literal: no
            # negation is computed at run time for "-2*x".
            if self.peek().kind == "number":
                value = self.parse_number(negative=True)
                return self.maybe_power(Constant(value), minus)
            return Neg(self.parse_factor(index))
        return self.parse_atom(index)

    def parse_atom(self, index: dict[str, int]) -> ExprNode:
        tok = self.peek()
        if tok.kind == "number":
            return self.maybe_power(Constant(self.parse_number()), tok)
        if tok.kind == "name":
            self.next()
            if tok.text not in index:
                raise ParseError(f"undeclared variable {tok.text!r}", tok.line, tok.col)
            return self.maybe_power(Variable(index[tok.text]), tok)
        if tok.kind == "(":
            self.next()
            node = self.parse_expr(index)
            self.expect(")")
            return self.maybe_power(node, tok)
        self.fail(f"expected a variable, number, or '(', found {tok.text or 'end of input'!r}")

    def maybe_power(self, base: ExprNode, at: _Token) -> ExprNode:
        if self.peek().kind != "^":
            return base
        self.next()
        exp_tok = self.expect("number")
        if not exp_tok.text.isdigit():
            raise ParseError("exponent must be a nonnegative integer", exp_tok.line, exp_tok.col)
        k = int(exp_tok.text)
        if k == 0:
            return Constant(Fraction(1))
        # a^k is computed from a single evaluation of a: the repeated
        # multiplications all share the base node.
        node = base
        for _ in range(k - 1):
            node = Mul(node, base)
        return node


def parse_program(source: str, name: str = "program") -> ProgramSpec:
    """Parse a full program (vars line plus expression)."""
    return _Parser(source).parse_program(name)


def parse_expression(source: str, variables: list[str]) -> ExprNode:
    """Parse a bare expression against a fixed variable list."""
    parser = _Parser(source)
    index = {name: i for i, name in enumerate(variables)}
    node = parser.parse_expr(index)
    end = parser.peek()
    if end.kind != "end":
        raise ParseError(f"unexpected trailing input {end.text!r}", end.line, end.col)
    return node


# -- printing ------------------------------------------------------------------


def pretty(node: ExprNode, var_names: list[str]) -> str:
    """Render an expression with minimal parentheses."""

    def prec(n: ExprNode) -> int:
        if isinstance(n, (Add, Sub)):
            return 1
        if isinstance(n, Mul):
            return 2
        if isinstance(n, Neg):
            return 3
        return 4

    def go(n: ExprNode, parent: int, right_side: bool) -> str:
        p = prec(n)
        if isinstance(n, Constant):
            text = str(n.value)
            wrapped = text if n.value >= 0 else f"({text})"
            return wrapped if parent > 0 and n.value < 0 else text
        if isinstance(n, Variable):
            return var_names[n.index]
        if isinstance(n, Neg):
            body = f"-{go(n.operand, p, False)}"
        elif isinstance(n, Add):
            body = f"{go(n.left, p, False)} + {go(n.right, p, True)}"
        elif isinstance(n, Sub):
            body = f"{go(n.left, p, False)} - {go(n.right, p + 1, True)}"
        else:
            body = f"{go(n.left, p, False)}*{go(n.right, p + 1, True)}"
        need = parent > p or (parent == p and right_side)
        return f"({body})" if need else body

    return go(node, 0, False)


def program_text(program: ProgramSpec) -> str:
    decls = ", ".join(f"{name} in [{lo}, {hi}]" for name, lo, hi in program.inputs)
    return f"vars {decls};\n{pretty(program.body, program.var_names())}\n"
