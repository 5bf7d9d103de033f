"""Symbolic expression trees shared by every fitting engine.

An expression is an immutable tree of :class:`Const`, :class:`Var`,
:class:`Unary` and :class:`Binary` nodes.  The module provides vectorised
evaluation over sample matrices, a structural complexity measure, a small
semantics-preserving simplifier, infix formatting/parsing and a JSON wire
format, plus random tree generation for the genetic engine.

Conventions baked into the evaluation semantics:

* ``sign(0) == 0``
* ``sqrt`` is always the protected square root ``sqrt(|x|)``
* non-finite intermediate values propagate to the output; callers treat
  them as an infinite loss
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

UNARY_FUNCTIONS = ("neg", "abs", "sign", "exp", "sqrt", "pow")
BINARY_OPERATORS = ("add", "sub", "mul", "div")


class ParseError(ValueError):
    """Raised for malformed formula text; carries the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ArityError(ValueError):
    """Raised when an expression reads a variable the inputs do not have."""


@dataclass(frozen=True)
class Expr:
    """Base class for expression nodes."""


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise ValueError(f"constant must be finite, got {self.value}")


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if not isinstance(self.index, (int, np.integer)) or self.index < 0:
            raise ValueError(f"variable index must be a non-negative int, got {self.index}")
        object.__setattr__(self, "index", int(self.index))


@dataclass(frozen=True)
class Unary(Expr):
    fn: str
    child: Expr
    exponent: float | None = None

    def __post_init__(self):
        if self.fn not in UNARY_FUNCTIONS:
            raise ValueError(f"unknown unary function {self.fn!r}")
        if self.fn == "pow":
            if self.exponent is None or not math.isfinite(float(self.exponent)):
                raise ValueError("pow node requires a finite exponent")
            object.__setattr__(self, "exponent", float(self.exponent))
        elif self.exponent is not None:
            raise ValueError(f"{self.fn} does not take an exponent")


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPERATORS:
            raise ValueError(f"unknown binary operator {self.op!r}")


# ---------------------------------------------------------------------------
# function sets


@dataclass(frozen=True)
class FunctionSet:
    """Node vocabulary available to a search engine.

    ``unary`` holds plain unary names, ``powers`` the allowed integer
    exponents (each becomes a separate ``pow`` choice) and ``binary`` the
    operator names.  Division never enters the default vocabulary; request
    it explicitly with ``FunctionSet.default(allow_division=True)``.
    """

    unary: tuple[str, ...] = ("exp", "sqrt", "sign", "abs", "neg")
    powers: tuple[int, ...] = (2, 3, 4)
    binary: tuple[str, ...] = ("add", "sub", "mul")

    def __post_init__(self):
        for fn in self.unary:
            if fn not in UNARY_FUNCTIONS or fn == "pow":
                raise ValueError(f"unknown unary function {fn!r}")
        for op in self.binary:
            if op not in BINARY_OPERATORS:
                raise ValueError(f"unknown binary operator {op!r}")
        for n in self.powers:
            if not isinstance(n, (int, np.integer)) or n < 2:
                raise ValueError(f"integer powers must be >= 2, got {n}")
        object.__setattr__(self, "powers", tuple(int(n) for n in self.powers))

    @classmethod
    def default(cls, allow_division: bool = False) -> "FunctionSet":
        binary = ("add", "sub", "mul", "div") if allow_division else ("add", "sub", "mul")
        return cls(binary=binary)

    def unary_choices(self) -> tuple[tuple[str, float | None], ...]:
        """All unary node constructions as (fn, exponent) pairs."""
        plain = tuple((fn, None) for fn in self.unary)
        pows = tuple(("pow", float(n)) for n in self.powers)
        return plain + pows

    def contains(self, expr: Expr) -> bool:
        """Whether every node of ``expr`` is drawn from this set."""
        if isinstance(expr, (Const, Var)):
            return True
        if isinstance(expr, Unary):
            if expr.fn == "pow":
                ok = float(expr.exponent).is_integer() and int(expr.exponent) in self.powers
            else:
                ok = expr.fn in self.unary
            return ok and self.contains(expr.child)
        if isinstance(expr, Binary):
            return expr.op in self.binary and self.contains(expr.left) and self.contains(expr.right)
        return False


# ---------------------------------------------------------------------------
# evaluation


def evaluate(expr: Expr, inputs) -> np.ndarray:
    """Evaluate ``expr`` on an ``(n_samples, arity)`` input matrix.

    Returns a float vector of length ``n_samples``.  Non-finite values are
    propagated unchanged.  Reading a variable index outside the input arity
    raises :class:`ArityError`.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"inputs must be a 2-d matrix, got shape {X.shape}")
    with np.errstate(all="ignore"):
        out = _eval(expr, X)
    return out


def _eval(e: Expr, X: np.ndarray) -> np.ndarray:
    if isinstance(e, Const):
        return np.full(X.shape[0], e.value)
    if isinstance(e, Var):
        if e.index >= X.shape[1]:
            raise ArityError(
                f"expression reads x{e.index} but inputs have arity {X.shape[1]}"
            )
        return X[:, e.index].copy()
    if isinstance(e, Unary):
        c = _eval(e.child, X)
        if e.fn == "neg":
            return -c
        if e.fn == "abs":
            return np.abs(c)
        if e.fn == "sign":
            return np.sign(c)
        if e.fn == "exp":
            return np.exp(c)
        if e.fn == "sqrt":
            return np.sqrt(np.abs(c))
        n = e.exponent
        if float(n).is_integer():
            return np.power(c, int(n))
        return np.power(c, n)
    assert isinstance(e, Binary)
    l = _eval(e.left, X)
    r = _eval(e.right, X)
    if e.op == "add":
        return l + r
    if e.op == "sub":
        return l - r
    if e.op == "mul":
        return l * r
    return l / r


_EMPTY_ROW = np.empty((1, 0))


def _fold(e: Expr) -> Const | None:
    """Fold a variable-free node to a constant when the result is finite."""
    try:
        with np.errstate(all="ignore"):
            v = float(_eval(e, _EMPTY_ROW)[0])
    except ArityError:
        return None
    if not math.isfinite(v):
        return None
    return Const(v)


# ---------------------------------------------------------------------------
# structural measures


def complexity(expr: Expr) -> int:
    """Structural cost of an expression.

    Operators, function applications and variable reads each count one.
    A power application counts two (the function and its degree).  Numeric
    constant leaves and sign-absorbing negation are free.
    """
    if isinstance(expr, Const):
        return 0
    if isinstance(expr, Var):
        return 1
    if isinstance(expr, Unary):
        own = {"neg": 0, "pow": 2}.get(expr.fn, 1)
        return own + complexity(expr.child)
    return 1 + complexity(expr.left) + complexity(expr.right)


def depth(expr: Expr) -> int:
    if isinstance(expr, (Const, Var)):
        return 1
    if isinstance(expr, Unary):
        return 1 + depth(expr.child)
    return 1 + max(depth(expr.left), depth(expr.right))


def iter_nodes(expr: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    yield expr
    if isinstance(expr, Unary):
        yield from iter_nodes(expr.child)
    elif isinstance(expr, Binary):
        yield from iter_nodes(expr.left)
        yield from iter_nodes(expr.right)


def node_count(expr: Expr) -> int:
    return sum(1 for _ in iter_nodes(expr))


def get_node(expr: Expr, index: int) -> Expr:
    for i, node in enumerate(iter_nodes(expr)):
        if i == index:
            return node
    raise IndexError(index)


def replace_node(expr: Expr, index: int, replacement: Expr) -> Expr:
    """Return a copy of ``expr`` with the pre-order ``index``-th node swapped."""
    counter = [0]

    def rebuild(e: Expr) -> Expr:
        i = counter[0]
        counter[0] += 1
        if i == index:
            _skip(e)
            return replacement
        if isinstance(e, Unary):
            return Unary(e.fn, rebuild(e.child), e.exponent)
        if isinstance(e, Binary):
            return Binary(e.op, rebuild(e.left), rebuild(e.right))
        return e

    def _skip(e: Expr) -> None:
        # keep the pre-order counter consistent for the replaced subtree
        counter[0] += node_count(e) - 1

    out = rebuild(expr)
    if counter[0] <= index:
        raise IndexError(index)
    return out


def collect_constants(expr: Expr) -> list[float]:
    """Constant leaf values in pre-order (power exponents are structural)."""
    return [n.value for n in iter_nodes(expr) if isinstance(n, Const)]


def with_constants(expr: Expr, values) -> Expr:
    """Rebuild ``expr`` with constant leaves replaced in pre-order."""
    vals = list(values)
    slot = [0]

    def rebuild(e: Expr) -> Expr:
        if isinstance(e, Const):
            if slot[0] >= len(vals):
                raise ValueError(
                    f"expression has more constants than the {len(vals)} values given"
                )
            v = vals[slot[0]]
            slot[0] += 1
            return Const(v)
        if isinstance(e, Unary):
            return Unary(e.fn, rebuild(e.child), e.exponent)
        if isinstance(e, Binary):
            return Binary(e.op, rebuild(e.left), rebuild(e.right))
        return e

    out = rebuild(expr)
    if slot[0] != len(vals):
        raise ValueError(f"expression has {slot[0]} constants, got {len(vals)} values")
    return out


# ---------------------------------------------------------------------------
# simplification


def simplify(expr: Expr) -> Expr:
    """Bottom-up rewrite.  Semantics-preserving on the reals under the
    sign / protected-sqrt conventions, and never increases complexity.
    """
    if isinstance(expr, (Const, Var)):
        return expr
    if isinstance(expr, Unary):
        return _simplify_unary(expr.fn, simplify(expr.child), expr.exponent)
    out = _simplify_binary(expr.op, simplify(expr.left), simplify(expr.right))
    if isinstance(out, Binary) and out.op in ("add", "sub"):
        collected = _collect_additive(out)
        if collected is not None and complexity(collected) < complexity(out):
            return collected
    return out


def _simplify_unary(fn: str, c: Expr, exponent: float | None = None) -> Expr:
    node = Unary(fn, c, exponent)
    if isinstance(c, Const):
        folded = _fold(node)
        if folded is not None:
            return folded
    if fn == "neg":
        if isinstance(c, Unary) and c.fn == "neg":
            return c.child
        return node
    if fn == "sign":
        if isinstance(c, Unary) and c.fn == "sign":
            return c
        return node
    if fn == "abs":
        if isinstance(c, Unary) and c.fn in ("abs", "sqrt"):
            return c
        if isinstance(c, Unary) and c.fn == "neg":
            return _simplify_unary("abs", c.child)
        return node
    if fn == "sqrt":
        if isinstance(c, Unary) and c.fn == "abs":
            return _simplify_unary("sqrt", c.child)
        if isinstance(c, Unary) and c.fn == "neg":
            return _simplify_unary("sqrt", c.child)
        return node
    if fn == "pow":
        if exponent == 1.0:
            return c
        if exponent == 0.0:
            return Const(1.0)
        return node
    return node


def _is_const(e: Expr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def _simplify_binary(op: str, l: Expr, r: Expr) -> Expr:
    node = Binary(op, l, r)
    if isinstance(l, Const) and isinstance(r, Const):
        folded = _fold(node)
        if folded is not None:
            return folded
    if op == "add":
        if _is_const(l, 0.0):
            return r
        if _is_const(r, 0.0):
            return l
    elif op == "sub":
        if _is_const(r, 0.0):
            return l
        if _is_const(l, 0.0):
            return _simplify_unary("neg", r)
        if l == r:
            return Const(0.0)
    elif op == "mul":
        if _is_const(l, 0.0) or _is_const(r, 0.0):
            return Const(0.0)
        if _is_const(l, 1.0):
            return r
        if _is_const(r, 1.0):
            return l
        if _is_const(l, -1.0):
            return _simplify_unary("neg", r)
        if _is_const(r, -1.0):
            return _simplify_unary("neg", l)
    elif op == "div":
        if _is_const(r, 1.0):
            return l
    return node


def _additive_terms(e: Expr, sign: float, out: list) -> None:
    if isinstance(e, Binary) and e.op == "add":
        _additive_terms(e.left, sign, out)
        _additive_terms(e.right, sign, out)
    elif isinstance(e, Binary) and e.op == "sub":
        _additive_terms(e.left, sign, out)
        _additive_terms(e.right, -sign, out)
    elif isinstance(e, Unary) and e.fn == "neg":
        _additive_terms(e.child, -sign, out)
    else:
        out.append((sign, e))


def _coeff_core(e: Expr) -> tuple[float, Expr | None]:
    if isinstance(e, Const):
        return e.value, None
    if isinstance(e, Binary) and e.op == "mul":
        if isinstance(e.left, Const):
            return e.left.value, e.right
        if isinstance(e.right, Const):
            return e.right.value, e.left
    return 1.0, e


def _collect_additive(node: Binary) -> Expr | None:
    """Merge like terms across an additive chain (x + 2*x becomes 3*x),
    keeping first-appearance order.  Returns None when coefficient sums
    overflow."""
    terms, offset = additive_decomposition(node)
    if not math.isfinite(offset) or not all(math.isfinite(c) for c, _ in terms):
        return None
    return from_additive_terms(terms, offset)


def additive_decomposition(expr: Expr) -> tuple[list[tuple[float, Expr]], float]:
    """Split an expression into weighted additive terms plus an offset.

    Returns ``(terms, offset)`` where ``terms`` is a list of
    ``(coefficient, core)`` pairs with structurally distinct non-constant
    cores, such that the expression equals
    ``sum(c * core for c, core in terms) + offset`` wherever it is finite.
    """
    raw: list[tuple[float, Expr]] = []
    _additive_terms(expr, 1.0, raw)
    cores: list[Expr] = []
    coeffs: list[float] = []
    offset = 0.0
    for sign, term in raw:
        c, core = _coeff_core(term)
        c *= sign
        if core is None:
            offset += c
            continue
        for i, known in enumerate(cores):
            if known == core:
                coeffs[i] += c
                break
        else:
            cores.append(core)
            coeffs.append(c)
    return list(zip(coeffs, cores)), offset


def from_additive_terms(terms: list[tuple[float, Expr]], offset: float) -> Expr:
    """Rebuild an expression from ``additive_decomposition`` output,
    dropping zero-weight terms."""
    parts: list[Expr] = []
    for c, core in terms:
        if c == 0.0:
            continue
        if c == 1.0:
            parts.append(core)
        elif c == -1.0:
            parts.append(Unary("neg", core))
        else:
            parts.append(Binary("mul", Const(c), core))
    if offset != 0.0 or not parts:
        parts.append(Const(offset))
    total = parts[0]
    for p in parts[1:]:
        total = Binary("add", total, p)
    return total


# ---------------------------------------------------------------------------
# infix formatting


_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 10, 20, 30, 40, 100

_FN_NAMES = {"sign": "sgn", "abs": "abs", "sqrt": "sqrt", "exp": "exp"}


def _fmt_float(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return repr(v)
    return repr(v)


def format_expr(expr: Expr) -> str:
    """Render with ``sgn``/``abs``/``sqrt``/``exp`` calls, ``^`` powers and
    minimal parentheses.  ``parse(format_expr(e))`` evaluates identically
    to ``e``.
    """
    text, _ = _fmt(expr)
    return text


def _paren(text: str, prec: int, minimum: int) -> str:
    return f"({text})" if prec < minimum else text


def _fmt(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        if e.value < 0 or (e.value == 0 and math.copysign(1, e.value) < 0):
            return _fmt_float(e.value), _PREC_NEG - 1
        return _fmt_float(e.value), _PREC_ATOM
    if isinstance(e, Var):
        return f"x{e.index}", _PREC_ATOM
    if isinstance(e, Unary):
        if e.fn == "neg":
            ct, cp = _fmt(e.child)
            return f"-{_paren(ct, cp, _PREC_NEG + 1)}", _PREC_NEG
        if e.fn == "pow":
            bt, bp = _fmt(e.child)
            n = e.exponent
            ns = str(int(n)) if float(n).is_integer() else _fmt_float(n)
            if n < 0:
                ns = f"({ns})"
            return f"{_paren(bt, bp, _PREC_ATOM)}^{ns}", _PREC_POW
        ct, _ = _fmt(e.child)
        return f"{_FN_NAMES[e.fn]}({ct})", _PREC_ATOM
    assert isinstance(e, Binary)
    lt, lp = _fmt(e.left)
    rt, rp = _fmt(e.right)
    if e.op == "add":
        if isinstance(e.right, Unary) and e.right.fn == "neg":
            rt2, rp2 = _fmt(e.right.child)
            return f"{_paren(lt, lp, _PREC_ADD)} - {_paren(rt2, rp2, _PREC_ADD + 1)}", _PREC_ADD
        if isinstance(e.right, Const) and e.right.value < 0:
            return f"{_paren(lt, lp, _PREC_ADD)} - {_fmt_float(-e.right.value)}", _PREC_ADD
        return f"{_paren(lt, lp, _PREC_ADD)} + {_paren(rt, rp, _PREC_ADD + 1)}", _PREC_ADD
    if e.op == "sub":
        return f"{_paren(lt, lp, _PREC_ADD)} - {_paren(rt, rp, _PREC_ADD + 1)}", _PREC_ADD
    sym = "*" if e.op == "mul" else "/"
    return f"{_paren(lt, lp, _PREC_MUL)}{sym}{_paren(rt, rp, _PREC_MUL + 1)}", _PREC_MUL


# ---------------------------------------------------------------------------
# parsing


_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()|·×−])"
    r"|(?P<ws>\s+)"
)

_VAR_RE = re.compile(r"x(\d+)$")
_PARSE_FNS = {"sgn": "sign", "sign": "sign", "abs": "abs", "sqrt": "sqrt", "exp": "exp"}
_OP_ALIASES = {"·": "*", "×": "*", "−": "-", "**": "^"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "op":
                value = _OP_ALIASES.get(value, value)
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, value: str) -> None:
        kind, val, off = self.peek()
        if kind != "op" or val != value:
            raise ParseError(f"expected {value!r}", off)
        self.advance()

    def parse(self) -> Expr:
        e = self.additive()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", off)
        return e

    def additive(self) -> Expr:
        e = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                e = Binary("add" if val == "+" else "sub", e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                rhs = self.unary()
                e = Binary("mul" if val == "*" else "div", e, rhs)
            else:
                return e

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            inner = self.unary()
            if isinstance(inner, Const):
                return Const(-inner.value)
            return Unary("neg", inner)
        if kind == "op" and val == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            _, _, off = self.peek()
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ParseError("power exponent must be a constant", off)
            return Unary("pow", base, exponent.value)
        return base

    def atom(self) -> Expr:
        kind, val, off = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            m = _VAR_RE.match(val)
            if m:
                return Var(int(m.group(1)))
            if val in _PARSE_FNS:
                self.expect_op("(")
                inner = self.additive()
                self.expect_op(")")
                return Unary(_PARSE_FNS[val], inner)
            raise ParseError(f"unknown function or variable {val!r}", off)
        if kind == "op" and val == "(":
            inner = self.additive()
            self.expect_op(")")
            return inner
        if kind == "op" and val == "|":
            inner = self.additive()
            k2, v2, o2 = self.peek()
            if k2 != "op" or v2 != "|":
                raise ParseError("unterminated |...|", o2)
            self.advance()
            return Unary("abs", inner)
        raise ParseError(f"unexpected token {val!r}" if val else "unexpected end of input", off)


def parse(text: str) -> Expr:
    """Parse infix formula text into an expression tree.

    Accepts ``x0, x1, ...`` variables, ``sgn``/``sign``, ``abs`` or ``|...|``,
    ``sqrt``, ``exp``, the four arithmetic operators (``·`` and ``×`` are
    multiplication), and ``^``/``**`` powers with constant exponents.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# JSON wire format


def to_json(expr: Expr) -> dict:
    """Nested-dict encoding: ``{"op": ..., "args": [...]}`` with leaf nodes
    ``{"const": v}`` and ``{"var": i}``.  Power exponents travel as a
    constant second argument.
    """
    if isinstance(expr, Const):
        return {"const": expr.value}
    if isinstance(expr, Var):
        return {"var": expr.index}
    if isinstance(expr, Unary):
        if expr.fn == "pow":
            return {"op": "pow", "args": [to_json(expr.child), {"const": expr.exponent}]}
        return {"op": expr.fn, "args": [to_json(expr.child)]}
    assert isinstance(expr, Binary)
    return {"op": expr.op, "args": [to_json(expr.left), to_json(expr.right)]}


def from_json(data: dict) -> Expr:
    if not isinstance(data, dict):
        raise ValueError(f"expression node must be a dict, got {type(data).__name__}")
    if "const" in data:
        return Const(float(data["const"]))
    if "var" in data:
        return Var(int(data["var"]))
    if "op" not in data:
        raise ValueError(f"malformed expression node: {data!r}")
    op = data["op"]
    args = data.get("args", [])
    if op == "pow":
        if len(args) != 2 or "const" not in args[1]:
            raise ValueError("pow node requires [child, {'const': exponent}] args")
        return Unary("pow", from_json(args[0]), float(args[1]["const"]))
    if op in UNARY_FUNCTIONS:
        if len(args) != 1:
            raise ValueError(f"{op} takes one argument, got {len(args)}")
        return Unary(op, from_json(args[0]))
    if op in BINARY_OPERATORS:
        if len(args) != 2:
            raise ValueError(f"{op} takes two arguments, got {len(args)}")
        return Binary(op, from_json(args[0]), from_json(args[1]))
    raise ValueError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# random generation


def random_expr(
    rng: np.random.Generator,
    max_depth: int,
    arity: int,
    fset: FunctionSet | None = None,
    p_leaf: float = 0.3,
) -> Expr:
    """Grow a random tree of depth at most ``max_depth``."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if fset is None:
        fset = FunctionSet.default()
    if max_depth == 1:
        return _random_leaf(rng, arity)
    r = rng.random()
    if r < p_leaf:
        return _random_leaf(rng, arity)
    if r < p_leaf + 0.3:
        fn, exponent = fset.unary_choices()[rng.integers(len(fset.unary_choices()))]
        return Unary(fn, random_expr(rng, max_depth - 1, arity, fset, p_leaf), exponent)
    op = fset.binary[rng.integers(len(fset.binary))]
    return Binary(
        op,
        random_expr(rng, max_depth - 1, arity, fset, p_leaf),
        random_expr(rng, max_depth - 1, arity, fset, p_leaf),
    )


def _random_leaf(rng: np.random.Generator, arity: int) -> Expr:
    if arity > 0 and rng.random() < 0.7:
        return Var(int(rng.integers(arity)))
    return Const(round(float(rng.normal(0.0, 2.0)), 3))
