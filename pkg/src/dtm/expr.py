"""Expression trees for problem definitions and symbolic transform output.

One node family serves both uses: problem files parse into trees over the
time variable, unknowns and elementary functions, while the symbolic
recurrence engine builds trees over named Symbol atoms (t0 and the
transform coefficients).  Trees are immutable; the parser and both
evaluators are pure functions.

Grammar (whitespace-insensitive)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?           # '^' binds tighter than unary '-'
    atom   := NUMBER | 't' | IDENT | IDENT '(' NUMBER '*' 't' ')'
            | FUNC '(' expr ')' | 'integral' '(' expr ')'
            | 'diff' '(' IDENT ',' INT (',' 'scale' '=' expr)? ')'
            | '(' expr ')'
    FUNC   := exp | ln | sin | cos | tan | sec | asin | atan | sqrt | nsqrt

IDENT must be a declared unknown name.  '^' is right-associative and its
exponent must constant-fold to a number.  Inside integral(...) the time
variable denotes the integration dummy; factors in the outer variable
must multiply the integral from outside.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping

from . import series
from .errors import (
    DivisionBySingularSeries,
    DomainError,
    ParseError,
    SeriesMismatchError,
    UnboundSymbol,
    UnsupportedNode,
)
from .series import TruncatedSeries

UNARY_OPS = (
    "neg", "exp", "ln", "sin", "cos", "tan", "sec",
    "asin", "atan", "sqrt_pos", "sqrt_neg",
)
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

# surface name -> node op
FUNC_NAMES = {
    "exp": "exp", "ln": "ln", "sin": "sin", "cos": "cos", "tan": "tan",
    "sec": "sec", "asin": "asin", "atan": "atan",
    "sqrt": "sqrt_pos", "nsqrt": "sqrt_neg",
}
_OP_TO_FUNC = {v: k for k, v in FUNC_NAMES.items()}
RESERVED = set(FUNC_NAMES) | {"t", "integral", "diff", "scale"}


class _Ops:
    """Operator sugar so trees can be built like ordinary arithmetic."""

    def __add__(self, other):
        return Binary("add", self, as_expr(other))

    def __radd__(self, other):
        return Binary("add", as_expr(other), self)

    def __sub__(self, other):
        return Binary("sub", self, as_expr(other))

    def __rsub__(self, other):
        return Binary("sub", as_expr(other), self)

    def __mul__(self, other):
        return Binary("mul", self, as_expr(other))

    def __rmul__(self, other):
        return Binary("mul", as_expr(other), self)

    def __truediv__(self, other):
        return Binary("div", self, as_expr(other))

    def __rtruediv__(self, other):
        return Binary("div", as_expr(other), self)

    def __pow__(self, other):
        return Binary("pow", self, as_expr(other))

    def __neg__(self):
        return Unary("neg", self)


@dataclass(frozen=True)
class Number(_Ops):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Time(_Ops):
    """The independent variable t (the dummy variable inside integrals)."""


@dataclass(frozen=True)
class Unknown(_Ops):
    """An unknown y(scale * t); scale 1 is the plain unknown."""

    name: str
    scale: float = 1.0


@dataclass(frozen=True)
class Symbol(_Ops):
    """A named symbolic atom such as t0 or a transform coefficient."""

    name: str


@dataclass(frozen=True)
class Unary(_Ops):
    op: str
    child: "Expr"


@dataclass(frozen=True)
class Binary(_Ops):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Integral(_Ops):
    """Integral of the body from the expansion point to t."""

    body: "Expr"


@dataclass(frozen=True)
class Deriv(_Ops):
    """Equation-level atom: m-th derivative of unknown(scale * t)."""

    name: str
    order: int
    scale: float = 1.0


Expr = Number | Time | Unknown | Symbol | Unary | Binary | Integral | Deriv


def as_expr(x) -> Expr:
    if isinstance(x, (Number, Time, Unknown, Symbol, Unary, Binary, Integral, Deriv)):
        return x
    if isinstance(x, (int, float)):
        return Number(float(x))
    raise TypeError(f"cannot treat {x!r} as an expression")


def walk(e: Expr) -> Iterator[Expr]:
    """Yield every distinct node, parents before children.

    Trees built by repeated differentiation share subtrees; each shared
    node is visited once.
    """
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        if isinstance(node, Unary):
            stack.append(node.child)
        elif isinstance(node, Binary):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, Integral):
            stack.append(node.body)


def contains(e: Expr, kinds: type | tuple) -> bool:
    return any(isinstance(node, kinds) for node in walk(e))


def unknown_occurrences(e: Expr) -> list[tuple[str, float]]:
    """Distinct (name, scale) pairs in order of first appearance."""
    seen: list[tuple[str, float]] = []
    for node in walk(e):
        if isinstance(node, Unknown) and (node.name, node.scale) not in seen:
            seen.append((node.name, node.scale))
    return seen


def symbol_names(e: Expr) -> set[str]:
    return {node.name for node in walk(e) if isinstance(node, Symbol)}


# ---------------------------------------------------------------------------
# printing


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


_PREC_ADD, _PREC_NEG, _PREC_MUL, _PREC_POW, _PREC_ATOM = 10, 15, 20, 30, 40


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        if e.op in ("add", "sub"):
            return _PREC_ADD
        if e.op in ("mul", "div"):
            return _PREC_MUL
        return _PREC_POW
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC_NEG
    if isinstance(e, Number) and e.value < 0:
        return _PREC_NEG
    return _PREC_ATOM


def to_text(e: Expr) -> str:
    """Render the tree so that parsing it back gives an identical tree."""
    if isinstance(e, Number):
        return _fmt_number(e.value)
    if isinstance(e, Time):
        return "t"
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Unknown):
        if e.scale == 1.0:
            return e.name
        return f"{e.name}({_fmt_number(e.scale)}*t)"
    if isinstance(e, Deriv):
        if e.scale == 1.0:
            return f"diff({e.name}, {e.order})"
        return f"diff({e.name}, {e.order}, scale={_fmt_number(e.scale)})"
    if isinstance(e, Integral):
        return f"integral({to_text(e.body)})"
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_text(e.child)
            if _prec(e.child) < _PREC_POW:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{_OP_TO_FUNC[e.op]}({to_text(e.child)})"
    if isinstance(e, Binary):
        if e.op == "pow":
            base = to_text(e.left)
            if _prec(e.left) < _PREC_ATOM:
                base = f"({base})"
            expo = to_text(e.right)
            if _prec(e.right) < _PREC_ATOM:
                expo = f"({expo})"
            return f"{base}^{expo}"
        sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[e.op]
        prec = _prec(e)
        left = to_text(e.left)
        if _prec(e.left) < prec:
            left = f"({left})"
        right = to_text(e.right)
        if _prec(e.right) < prec or (_prec(e.right) == prec and e.op in ("sub", "div")):
            right = f"({right})"
        return f"{left}{sym}{right}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# parsing

_NUM_RE = re.compile(r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OP_CHARS = "+-*/^(),="


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _NUM_RE.match(text, pos)
        if m:
            tokens.append(("num", m.group(0), pos))
            pos = m.end()
            continue
        m = _NAME_RE.match(text, pos)
        if m:
            tokens.append(("name", m.group(0), pos))
            pos = m.end()
            continue
        if ch in _OP_CHARS:
            tokens.append(("op", ch, pos))
            pos += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, unknowns):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.unknowns = tuple(unknowns)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, ch: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != ch:
            raise ParseError(f"expected {ch!r}, found {val!r}", pos)
        return self.advance()

    def at_op(self, *chars) -> bool:
        kind, val, _ = self.peek()
        return kind == "op" and val in chars

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {val!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.at_op("+", "-"):
            op = self.advance()[1]
            right = self.term()
            left = Binary("add" if op == "+" else "sub", left, right)
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.at_op("*", "/"):
            op = self.advance()[1]
            right = self.factor()
            left = Binary("mul" if op == "*" else "div", left, right)
        return left

    def factor(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            inner = self.factor()
            # a negated bare literal is just a negative number; keeping it
            # folded lets printed trees reparse to identical structure
            if isinstance(inner, Number):
                return Number(-inner.value)
            return Unary("neg", inner)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at_op("^"):
            _, _, pos = self.advance()
            raw = self.factor()
            expo = simplify(raw)
            if not isinstance(expo, Number):
                raise ParseError("exponent must be a numeric constant", pos)
            return Binary("pow", base, expo)
        return base

    def number(self) -> float:
        kind, val, pos = self.peek()
        if kind != "num":
            raise ParseError(f"expected a number, found {val!r}", pos)
        self.advance()
        return float(val)

    def constant_expr(self) -> Number:
        _, _, pos = self.peek()
        folded = simplify(self.expr())
        if not isinstance(folded, Number):
            raise ParseError("expected a constant expression", pos)
        return folded

    def atom(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "num":
            self.advance()
            return Number(float(val))
        if kind == "op" and val == "(":
            self.advance()
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "name":
            self.advance()
            if val == "t":
                return Time()
            if val in FUNC_NAMES:
                self.expect_op("(")
                child = self.expr()
                self.expect_op(")")
                return Unary(FUNC_NAMES[val], child)
            if val == "integral":
                self.expect_op("(")
                body = self.expr()
                self.expect_op(")")
                return Integral(body)
            if val == "diff":
                return self.diff_atom(pos)
            if val in self.unknowns:
                if self.at_op("("):
                    self.advance()
                    q = self.number()
                    self.expect_op("*")
                    nkind, nval, npos = self.advance()
                    if nkind != "name" or nval != "t":
                        raise ParseError("scaled unknown must be written name(q*t)", npos)
                    self.expect_op(")")
                    return Unknown(val, q)
                return Unknown(val, 1.0)
            raise ParseError(
                f"unknown identifier {val!r}; declare it as an unknown", pos
            )
        raise ParseError(f"expected an expression, found {val!r}", pos)

    def diff_atom(self, pos: int) -> Deriv:
        self.expect_op("(")
        kind, val, npos = self.advance()
        if kind != "name" or val not in self.unknowns:
            raise ParseError(f"diff expects a declared unknown, found {val!r}", npos)
        name = val
        self.expect_op(",")
        mpos = self.peek()[2]
        m = self.number()
        if m != int(m) or m < 1:
            raise ParseError("derivative order must be a positive integer", mpos)
        q = 1.0
        if self.at_op(","):
            self.advance()
            kind2, val2, spos = self.advance()
            if kind2 != "name" or val2 != "scale":
                raise ParseError(f"expected 'scale', found {val2!r}", spos)
            self.expect_op("=")
            q = self.constant_expr().value
            if q == 0.0:
                raise ParseError("scale must be nonzero", spos)
        self.expect_op(")")
        return Deriv(name, int(m), q)


def parse(text: str, unknowns=()) -> Expr:
    """Parse an expression over the given declared unknown names."""
    return _Parser(text, unknowns).parse()


def scan_unknowns(text: str) -> list[str]:
    """Candidate unknown names: identifiers that are not reserved words."""
    names = []
    for kind, val, _ in _tokenize(text):
        if kind == "name" and val not in RESERVED and val not in names:
            names.append(val)
    return names


# ---------------------------------------------------------------------------
# simplification

_FOLD_UNARY: dict[str, Callable[[float], float | None]] = {
    "neg": lambda v: -v,
    "exp": math.exp,
    "ln": lambda v: math.log(v) if v > 0 else None,
    "sin": math.sin,
    "cos": math.cos,
    "tan": lambda v: math.tan(v) if abs(math.cos(v)) > series.SINGULAR_TOL else None,
    "sec": lambda v: 1.0 / math.cos(v) if abs(math.cos(v)) > series.SINGULAR_TOL else None,
    "asin": lambda v: math.asin(v) if abs(v) <= 1 else None,
    "atan": math.atan,
    "sqrt_pos": lambda v: math.sqrt(v) if v >= 0 else None,
    "sqrt_neg": lambda v: -math.sqrt(v) if v >= 0 else None,
}


def _is_num(e: Expr, v: float) -> bool:
    return isinstance(e, Number) and e.value == v


def _fold_binary(op: str, a: float, b: float) -> float | None:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b if b != 0 else None
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError):
        return None


class _Simplifier:
    """One simplification pass over a shared tree.

    Results are memoized per node and rebuilt nodes are hash-consed, so
    structurally identical fragments collapse to one shared object.  This
    keeps the output of repeated symbolic differentiation compact.
    """

    def __init__(self):
        self.memo: dict[int, Expr] = {}
        self.table: dict[tuple, Expr] = {}

    def num(self, v: float) -> Number:
        key = ("n", float(v))
        hit = self.table.get(key)
        if hit is None:
            hit = Number(v)
            self.table[key] = hit
        return hit

    def node1(self, op: str, child: Expr) -> Expr:
        key = ("1", op, id(child))
        hit = self.table.get(key)
        if hit is None:
            hit = Unary(op, child)
            self.table[key] = hit
        return hit

    def node2(self, op: str, left: Expr, right: Expr) -> Expr:
        key = ("2", op, id(left), id(right))
        hit = self.table.get(key)
        if hit is None:
            hit = Binary(op, left, right)
            self.table[key] = hit
        return hit

    def run(self, e: Expr) -> Expr:
        out = self.memo.get(id(e))
        if out is not None:
            return out
        if isinstance(e, Number):
            out = self.num(e.value)
        elif isinstance(e, Unary):
            out = self.local(self.node1(e.op, self.run(e.child)))
        elif isinstance(e, Binary):
            out = self.local(self.node2(e.op, self.run(e.left), self.run(e.right)))
        elif isinstance(e, Integral):
            out = Integral(self.run(e.body))
        else:
            out = e
        self.memo[id(e)] = out
        return out

    def local(self, e: Expr) -> Expr:
        while True:
            out = self.step(e)
            if out is e:
                return e
            e = out

    def step(self, e: Expr) -> Expr:
        if isinstance(e, Unary):
            if e.op == "neg" and isinstance(e.child, Unary) and e.child.op == "neg":
                return e.child.child
            if isinstance(e.child, Number):
                v = _FOLD_UNARY[e.op](e.child.value)
                if v is not None:
                    return self.num(v)
            return e
        if not isinstance(e, Binary):
            return e
        a, b = e.left, e.right
        if isinstance(a, Number) and isinstance(b, Number):
            v = _fold_binary(e.op, a.value, b.value)
            if v is not None:
                return self.num(v)
        if e.op == "add":
            if _is_num(a, 0.0):
                return b
            if _is_num(b, 0.0):
                return a
        elif e.op == "sub":
            if _is_num(b, 0.0):
                return a
            if _is_num(a, 0.0):
                return self.node1("neg", b)
        elif e.op == "mul":
            if _is_num(a, 0.0) or _is_num(b, 0.0):
                return self.num(0.0)
            if _is_num(a, 1.0):
                return b
            if _is_num(b, 1.0):
                return a
            # keep numeric factors left and merged
            if isinstance(b, Number):
                return self.node2("mul", b, a)
            if (
                isinstance(a, Number)
                and isinstance(b, Binary)
                and b.op == "mul"
                and isinstance(b.left, Number)
            ):
                return self.node2("mul", self.num(a.value * b.left.value), b.right)
            # a * (1/b) reads better as a quotient
            if isinstance(b, Binary) and b.op == "div" and _is_num(b.left, 1.0):
                return self.node2("div", a, b.right)
            if isinstance(a, Binary) and a.op == "div" and _is_num(a.left, 1.0):
                return self.node2("div", b, a.right)
        elif e.op == "div":
            if _is_num(b, 1.0):
                return a
            if _is_num(a, 0.0) and not _is_num(b, 0.0):
                return self.num(0.0)
            if (
                isinstance(b, Number)
                and b.value != 0
                and isinstance(a, Binary)
                and a.op == "mul"
                and isinstance(a.left, Number)
            ):
                return self.node2("mul", self.num(a.left.value / b.value), a.right)
        elif e.op == "pow":
            if _is_num(b, 1.0):
                return a
            if _is_num(b, 0.0):
                return self.num(1.0)
            # collapse nested constant powers
            if (
                isinstance(a, Binary)
                and a.op == "pow"
                and isinstance(b, Number)
                and isinstance(a.right, Number)
            ):
                return self.node2("pow", a.left, self.num(a.right.value * b.value))
        return e


def simplify(e: Expr) -> Expr:
    """Constant folding and 0/1 identity elimination; idempotent."""
    return _Simplifier().run(e)


# ---------------------------------------------------------------------------
# symbolic differentiation (over Symbol atoms only)

_ZERO = Number(0.0)


def _add2(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    return Binary("add", a, b)


def _mul2(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _ZERO
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    return Binary("mul", a, b)


def _d(e: Expr, name: str, memo: dict[int, Expr]) -> Expr:
    hit = memo.get(id(e))
    if hit is None:
        hit = _d_node(e, name, memo)
        memo[id(e)] = hit
    return hit


def _d_node(e: Expr, name: str, memo: dict[int, Expr]) -> Expr:
    if isinstance(e, Number):
        return _ZERO
    if isinstance(e, Symbol):
        return Number(1.0) if e.name == name else _ZERO
    if isinstance(e, Unary):
        u, du = e.child, _d(e.child, name, memo)
        if _is_num(du, 0.0):
            return _ZERO
        if e.op == "neg":
            return Unary("neg", du)
        if e.op == "exp":
            return _mul2(e, du)
        if e.op == "ln":
            return Binary("div", du, u)
        if e.op == "sin":
            return _mul2(Unary("cos", u), du)
        if e.op == "cos":
            return Unary("neg", _mul2(Unary("sin", u), du))
        if e.op == "tan":
            return _mul2(_add2(Number(1.0), Binary("pow", Unary("tan", u), Number(2.0))), du)
        if e.op == "sec":
            return _mul2(_mul2(Unary("sec", u), Unary("tan", u)), du)
        if e.op == "asin":
            rad = Binary("sub", Number(1.0), Binary("pow", u, Number(2.0)))
            return Binary("div", du, Unary("sqrt_pos", rad))
        if e.op == "atan":
            return Binary("div", du, _add2(Number(1.0), Binary("pow", u, Number(2.0))))
        if e.op in ("sqrt_pos", "sqrt_neg"):
            return Binary("div", du, _mul2(Number(2.0), Unary(e.op, u)))
        raise UnsupportedNode(f"cannot differentiate op {e.op!r}")
    if isinstance(e, Binary):
        da, db = _d(e.left, name, memo), _d(e.right, name, memo)
        if e.op == "add":
            return _add2(da, db)
        if e.op == "sub":
            if _is_num(db, 0.0):
                return da
            if _is_num(da, 0.0):
                return Unary("neg", db)
            return Binary("sub", da, db)
        if e.op == "mul":
            return _add2(_mul2(da, e.right), _mul2(e.left, db))
        if e.op == "div":
            if _is_num(db, 0.0):
                return _ZERO if _is_num(da, 0.0) else Binary("div", da, e.right)
            num = Binary("sub", _mul2(da, e.right), _mul2(e.left, db))
            return Binary("div", num, Binary("pow", e.right, Number(2.0)))
        if e.op == "pow":
            if not isinstance(e.right, Number):
                raise UnsupportedNode("pow exponent must be a number")
            c = e.right.value
            if _is_num(da, 0.0):
                return _ZERO
            inner = Binary("pow", e.left, Number(c - 1.0)) if c != 1.0 else Number(1.0)
            return _mul2(_mul2(Number(c), inner), da)
    raise UnsupportedNode(
        f"symbolic differentiation does not support {type(e).__name__} nodes"
    )


def diff_sym(e: Expr, name: str) -> Expr:
    """Exact partial derivative with respect to Symbol ``name``, simplified."""
    return simplify(_d(e, name, {}))


def substitute(e: Expr, mapping: Mapping[str, Expr | float]) -> Expr:
    """Replace Symbol atoms by expressions or numbers."""
    if isinstance(e, Symbol) and e.name in mapping:
        return as_expr(mapping[e.name])
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.child, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Integral):
        return Integral(substitute(e.body, mapping))
    return e


def flip_sqrt_branch(e: Expr) -> Expr:
    """Swap the positive and negative square-root branches everywhere."""
    if isinstance(e, Unary):
        op = {"sqrt_pos": "sqrt_neg", "sqrt_neg": "sqrt_pos"}.get(e.op, e.op)
        return Unary(op, flip_sqrt_branch(e.child))
    if isinstance(e, Binary):
        return Binary(e.op, flip_sqrt_branch(e.left), flip_sqrt_branch(e.right))
    if isinstance(e, Integral):
        return Integral(flip_sqrt_branch(e.body))
    return e


# ---------------------------------------------------------------------------
# numeric (pointwise) evaluation


def eval_numeric(e: Expr, binding: Mapping[str, float]) -> float:
    """IEEE evaluation with every atom bound; sec evaluates as 1/cos."""
    return _eval_numeric(e, binding, {})


def _eval_numeric(e: Expr, binding: Mapping[str, float], memo: dict[int, float]) -> float:
    hit = memo.get(id(e))
    if hit is None:
        hit = _eval_numeric_node(e, binding, memo)
        memo[id(e)] = hit
    return hit


def _eval_numeric_node(e: Expr, binding: Mapping[str, float], memo) -> float:
    if isinstance(e, Number):
        return e.value
    if isinstance(e, Time):
        try:
            return float(binding["t"])
        except KeyError:
            raise UnboundSymbol("the time variable 't' is not bound") from None
    if isinstance(e, Symbol):
        try:
            return float(binding[e.name])
        except KeyError:
            raise UnboundSymbol(f"symbol {e.name!r} is not bound") from None
    if isinstance(e, Unknown):
        if e.scale != 1.0:
            raise UnsupportedNode(
                f"scaled unknown {e.name}({e.scale}*t) has no pointwise value"
            )
        try:
            return float(binding[e.name])
        except KeyError:
            raise UnboundSymbol(f"unknown {e.name!r} is not bound") from None
    if isinstance(e, Unary):
        v = _eval_numeric(e.child, binding, memo)
        if e.op == "neg":
            return -v
        if e.op == "exp":
            return math.exp(v)
        if e.op == "ln":
            if v <= 0:
                raise DomainError(f"ln of non-positive value {v!r}", node=e)
            return math.log(v)
        if e.op == "sin":
            return math.sin(v)
        if e.op == "cos":
            return math.cos(v)
        if e.op == "tan":
            return math.tan(v)
        if e.op == "sec":
            c = math.cos(v)
            if abs(c) <= series.SINGULAR_TOL:
                raise DomainError(f"sec undefined where cos vanishes (t={v!r})", node=e)
            return 1.0 / c
        if e.op == "asin":
            if abs(v) > 1:
                raise DomainError(f"asin of value {v!r} outside [-1, 1]", node=e)
            return math.asin(v)
        if e.op == "atan":
            return math.atan(v)
        if e.op in ("sqrt_pos", "sqrt_neg"):
            if v < 0:
                raise DomainError(f"sqrt of negative value {v!r}", node=e)
            r = math.sqrt(v)
            return -r if e.op == "sqrt_neg" else r
        raise UnsupportedNode(f"unknown unary op {e.op!r}")
    if isinstance(e, Binary):
        a = _eval_numeric(e.left, binding, memo)
        b = _eval_numeric(e.right, binding, memo)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if e.op == "div":
            if b == 0.0:
                raise DomainError("division by zero", node=e)
            return a / b
        if not isinstance(e.right, Number):
            raise UnsupportedNode("pow exponent must be a number")
        if b == int(b):
            if a == 0.0 and b < 0:
                raise DomainError("zero base with negative exponent", node=e)
            return a ** int(b)
        if a <= 0.0:
            raise DomainError(
                f"non-integer power of non-positive base {a!r}", node=e
            )
        return math.pow(a, b)
    raise UnsupportedNode(
        f"{type(e).__name__} nodes cannot be evaluated pointwise"
    )


# ---------------------------------------------------------------------------
# series (jet) evaluation


def eval_series(
    e: Expr,
    binding: Mapping[str, TruncatedSeries],
    t0: float,
    n: int,
) -> TruncatedSeries:
    """Truncated series of the expression along the bound trajectory.

    The time variable maps to the jet of t about t0 (also inside integral
    bodies, where it plays the dummy variable), unknowns map to their
    bound series (argument-rescaled when a scale is present), and every
    operator maps to the corresponding series operation.  Coefficient k
    of the result is the k-th differential transform of the expression
    at t0, up to truncation.
    """
    if isinstance(e, Number):
        return series.constant(e.value, t0, n)
    if isinstance(e, Time):
        return series.time_var(t0, n)
    if isinstance(e, Symbol):
        raise UnboundSymbol(
            f"symbol {e.name!r} cannot appear in a series evaluation"
        )
    if isinstance(e, Unknown):
        s = _bound_series(e.name, binding, t0, n)
        return _annotate(series.rescale_argument, e)(s, e.scale)
    if isinstance(e, Deriv):
        s = _bound_series(e.name, binding, t0, n)
        d = series.formal_derivative(s, e.order)
        if e.scale != 1.0:
            d = series.scale(e.scale ** e.order, series.rescale_argument(d, e.scale))
        return d
    if isinstance(e, Integral):
        return series.integrate(eval_series(e.body, binding, t0, n))
    if isinstance(e, Unary):
        u = eval_series(e.child, binding, t0, n)
        if e.op == "neg":
            return series.negate(u)
        if e.op == "sec":
            cos_u = _annotate(series.elementary, e)("cos", u)
            return _annotate(series.div, e)(series.constant(1.0, t0, n), cos_u)
        return _annotate(series.elementary, e)(e.op, u)
    if isinstance(e, Binary):
        a = eval_series(e.left, binding, t0, n)
        if e.op == "pow":
            return _pow_series(a, e, binding, t0, n)
        b = eval_series(e.right, binding, t0, n)
        if e.op == "add":
            return series.add(a, b)
        if e.op == "sub":
            return series.sub(a, b)
        if e.op == "mul":
            return series.mul(a, b)
        return _annotate(series.div, e)(a, b)
    raise UnsupportedNode(f"cannot evaluate {type(e).__name__} as a series")


def _bound_series(name, binding, t0, n) -> TruncatedSeries:
    try:
        s = binding[name]
    except KeyError:
        raise UnboundSymbol(f"unknown {name!r} has no bound series") from None
    if s.base_point != t0 or s.order != n:
        raise SeriesMismatchError(
            f"series bound to {name!r} has base {s.base_point}, order {s.order}; "
            f"expected base {t0}, order {n}"
        )
    return s


def _annotate(fn, node):
    """Tag domain failures with the subtree that caused them."""

    def wrapped(*args):
        try:
            return fn(*args)
        except DomainError as err:
            if err.node is None:
                raise DomainError(f"{err} in '{to_text(node)}'", node=node) from None
            raise
        except DivisionBySingularSeries as err:
            if not getattr(err, "expr_node", None):
                err.expr_node = node
                err.args = (f"{err.args[0]} in '{to_text(node)}'",)
            raise

    return wrapped


def _pow_series(base, e, binding, t0, n) -> TruncatedSeries:
    if not isinstance(e.right, Number):
        raise UnsupportedNode("pow exponent must be a number")
    c = e.right.value
    if c == int(c):
        k = int(c)
        out = series.constant(1.0, t0, n)
        for _ in range(abs(k)):
            out = series.mul(out, base)
        if k < 0:
            out = _annotate(series.div, e)(series.constant(1.0, t0, n), out)
        return out
    ln_base = _annotate(series.elementary, e)("ln", base)
    return series.elementary("exp", series.scale(c, ln_base))
