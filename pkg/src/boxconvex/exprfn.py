"""Function inputs: expression trees, the builtin catalog, tabulated grids and combinations.

Every function the rest of the package manipulates is a :class:`FunctionSpec`.
Evaluation is vectorised: ``f.values(X)`` takes an ``(N, arity)`` array of points
and returns ``N`` values.  ``f(x1, ..., xd)`` and :func:`evaluate` are thin scalar
wrappers around the same code path, so scalar and batch results are bit-identical.

Truncated powers follow ``tpow_plus(e, k) = max(e, 0)**k`` and
``tpow_minus(e, k) = max(-e, 0)**k`` for ``k >= 1``.  For ``k == 0`` the plus side
is the closed step ``1{e >= 0}`` and the minus side the open step ``1{e < 0}``, so
that ``tpow_plus(e, k) - (-1)**(k+1) * tpow_minus(e, k) == e**k`` for every ``k``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, ParseError, SchemaError


def as_points(X, arity: int) -> np.ndarray:
    """Coerce `X` to a float array of shape ``(N, arity)``."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if arity != 1 or arr.size == 1 else arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != arity:
        raise EvaluationError(f"expected points of dimension {arity}, got shape {np.shape(X)}")
    return arr


def tpow(e, k: int, side: str = "plus") -> np.ndarray:
    """Truncated power ``(e)_+^k`` or ``(e)_-^k`` (see module docstring for k = 0)."""
    e = np.asarray(e, dtype=float)
    if k < 0:
        raise EvaluationError("truncated power needs a nonnegative exponent")
    if side == "plus":
        if k == 0:
            return np.where(e >= 0.0, 1.0, 0.0)
        return np.where(e > 0.0, e, 0.0) ** k
    if side == "minus":
        if k == 0:
            return np.where(e < 0.0, 1.0, 0.0)
        return np.where(e < 0.0, -e, 0.0) ** k
    raise ValueError(f"unknown side {side!r}")


class FunctionSpec:
    """A real function of `arity` variables with vectorised evaluation."""

    arity: int

    def _values(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def values(self, X) -> np.ndarray:
        X = as_points(X, self.arity)
        out = np.asarray(self._values(X), dtype=float).reshape(X.shape[0])
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite value while evaluating {self!r}")
        return out

    def _values_mag(self, X: np.ndarray):
        v = self._values(X)
        return v, np.abs(v)

    def values_and_magnitude(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Values plus the size of what cancelled while computing them.

        For plain functions the magnitude is |f|; sums report sum |w_k| |f_k|,
        so a difference of two large nearly equal quantities is not mistaken
        for a small, exactly known value.
        """
        X = as_points(X, self.arity)
        v, m = self._values_mag(X)
        v = np.asarray(v, dtype=float).reshape(X.shape[0])
        m = np.asarray(m, dtype=float).reshape(X.shape[0])
        if not np.all(np.isfinite(v)):
            raise EvaluationError(f"non-finite value while evaluating {self!r}")
        return v, m

    def __call__(self, *x) -> float:
        if len(x) == 1 and np.ndim(x[0]) == 1:
            x = tuple(x[0])
        return float(self.values(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def to_json(self) -> dict:
        raise SchemaError(f"{type(self).__name__} has no JSON form")

    def __add__(self, other: "FunctionSpec") -> "Combination":
        return Combination(((1.0, self), (1.0, other)))

    def __sub__(self, other: "FunctionSpec") -> "Combination":
        return Combination(((1.0, self), (-1.0, other)))

    def __neg__(self) -> "Combination":
        return Combination(((-1.0, self),))

    def __rmul__(self, c: float) -> "Combination":
        return Combination(((float(c), self),))


def evaluate(f: FunctionSpec, x: Sequence[float]) -> float:
    """Evaluate `f` at a single point."""
    x = tuple(float(v) for v in np.atleast_1d(x))
    if len(x) != f.arity:
        raise EvaluationError(f"point has dimension {len(x)}, function has arity {f.arity}")
    return float(f.values(np.asarray(x).reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# Expression trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str  # neg | exp | abs
    arg: object


@dataclass(frozen=True)
class Binary:
    op: str  # + - * /
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


@dataclass(frozen=True)
class TPow:
    side: str  # plus | minus
    arg: object
    exponent: int


_ADD, _MUL, _NEG, _POW, _ATOM = 1, 2, 3, 4, 5
_FUNCS = {"exp": 1, "abs": 1, "tpow_plus": 2, "tpow_minus": 2}
_CONSTS = {"pi": math.pi, "e": math.e}
_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[col]!r}", col)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, d: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.d = d

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind not in ("op",):
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek() [:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] in ("^", "**"):
            pos = self.take()[2]
            exponent = self.unary()
            return Pow(base, _integer_constant(exponent, pos))
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                return self.call(val, pos)
            if val in _CONSTS:
                return Const(_CONSTS[val])
            m = re.fullmatch(r"x([1-9]\d*)", val)
            if m is None:
                raise ParseError(f"unknown identifier {val!r}", pos)
            index = int(m.group(1))
            if index > self.d:
                raise ParseError(f"variable {val} out of range for arity {self.d}", pos)
            return Var(index)
        raise ParseError(f"unexpected token {val or 'end of input'!r}", pos)

    def call(self, name: str, pos: int):
        if name not in _FUNCS:
            raise ParseError(f"unknown function {name!r}", pos)
        self.expect("(")
        args = []
        if self.peek()[:2] != ("op", ")"):
            args.append(self.expr())
            while self.peek()[:2] == ("op", ","):
                self.take()
                args.append(self.expr())
        self.expect(")")
        if len(args) != _FUNCS[name]:
            raise ParseError(f"{name} takes {_FUNCS[name]} argument(s), got {len(args)}", pos)
        if name in ("exp", "abs"):
            return Unary(name, args[0])
        k = _integer_constant(args[1], pos)
        if k < 0:
            raise ParseError(f"{name} needs a nonnegative exponent", pos)
        return TPow(name[5:], args[0], k)


def _integer_constant(node, pos) -> int:
    value = _fold(node)
    if value is None or not float(value).is_integer():
        raise ParseError("exponent must be an integer constant", pos)
    return int(value)


def _fold(node):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Unary) and node.op == "neg":
        v = _fold(node.arg)
        return None if v is None else -v
    if isinstance(node, Pow):
        v = _fold(node.base)
        return None if v is None else v ** node.exponent
    return None


def parse_expression(text: str, d: int):
    """Parse infix `text` over variables ``x1..xd`` into an expression tree."""
    if d < 1:
        raise ParseError("arity must be at least 1")
    return _Parser(text, d).parse()


def _prec(node) -> int:
    if isinstance(node, Binary):
        return _ADD if node.op in "+-" else _MUL
    if isinstance(node, Unary) and node.op == "neg":
        return _NEG
    if isinstance(node, Pow):
        return _POW
    if isinstance(node, Const) and node.value < 0:
        return _NEG
    return _ATOM


def _wrap(node, need: int) -> str:
    text = to_text(node)
    return f"({text})" if _prec(node) < need else text


def to_text(node) -> str:
    """Canonical printer; ``parse_expression(to_text(t))`` reproduces a parsed tree `t`."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return "-" + _wrap(node.arg, _NEG)
        return f"{node.op}({to_text(node.arg)})"
    if isinstance(node, Binary):
        p = _prec(node)
        return f"{_wrap(node.left, p)}{node.op}{_wrap(node.right, p + 1)}"
    if isinstance(node, Pow):
        k = str(node.exponent) if node.exponent >= 0 else f"({node.exponent})"
        return f"{_wrap(node.base, _ATOM)}^{k}"
    if isinstance(node, TPow):
        return f"tpow_{node.side}({to_text(node.arg)},{node.exponent})"
    raise TypeError(f"not an expression node: {node!r}")


def _max_var(node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, (Unary, TPow)):
        return _max_var(node.arg)
    if isinstance(node, Pow):
        return _max_var(node.base)
    if isinstance(node, Binary):
        return max(_max_var(node.left), _max_var(node.right))
    return 0


def _eval_node(node, X: np.ndarray) -> np.ndarray:
    if isinstance(node, Const):
        return np.full(X.shape[0], node.value)
    if isinstance(node, Var):
        return X[:, node.index - 1]
    if isinstance(node, Unary):
        a = _eval_node(node.arg, X)
        if node.op == "neg":
            return -a
        if node.op == "exp":
            with np.errstate(over="ignore"):
                return np.exp(a)
        return np.abs(a)
    if isinstance(node, Binary):
        a = _eval_node(node.left, X)
        b = _eval_node(node.right, X)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(b == 0.0):
            raise EvaluationError("division by zero")
        return a / b
    if isinstance(node, Pow):
        a = _eval_node(node.base, X)
        if node.exponent < 0 and np.any(a == 0.0):
            raise EvaluationError("division by zero (negative power of 0)")
        with np.errstate(over="ignore"):
            return a ** float(node.exponent)
    if isinstance(node, TPow):
        return tpow(_eval_node(node.arg, X), node.exponent, node.side)
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True, eq=False)
class Expression(FunctionSpec):
    """A parsed infix expression in the variables ``x1..x{arity}``."""

    tree: object
    arity: int

    @classmethod
    def parse(cls, text: str, d: int | None = None) -> "Expression":
        if d is None:
            d = max(1, _max_var(parse_expression(text, 10**9)))
        return cls(parse_expression(text, d), d)

    @property
    def text(self) -> str:
        return to_text(self.tree)

    def _values(self, X):
        return _eval_node(self.tree, X)

    def to_json(self):
        return {"expr": self.text, "arity": self.arity}

    def __repr__(self):
        return f"Expression({self.text!r}, arity={self.arity})"


# ---------------------------------------------------------------------------
# Builtin catalog
# ---------------------------------------------------------------------------

def _axis(params, j, arity):
    i = int(params[j])
    if not 1 <= i <= arity:
        raise SchemaError(f"axis {i} out of range for arity {arity}", f"params[{j}]")
    return i - 1


def _b_const(p, X):
    return np.full(X.shape[0], float(p[0]))


def _b_monomial(p, X):
    return X[:, _axis(p, 0, X.shape[1])] ** float(int(p[1]))


def _b_power_product(p, X):
    out = np.ones(X.shape[0])
    for j, k in enumerate(p):
        out = out * X[:, j] ** float(int(k))
    return out


def _b_tpow(side):
    def ev(p, X):
        return tpow(X[:, _axis(p, 0, X.shape[1])] - float(p[1]), int(p[2]), side)
    return ev


def _b_hinge(p, X):
    return tpow(X[:, _axis(p, 0, X.shape[1])] - float(p[1]), 1, "plus")


def _b_exp_sum(p, X):
    c = np.ones(X.shape[1]) if len(p) == 0 else np.asarray(p, dtype=float)
    with np.errstate(over="ignore"):
        return np.exp(X @ c)


def _b_step(closed):
    def ev(p, X):
        x = X[:, _axis(p, 0, X.shape[1])]
        t = float(p[1])
        return np.where(x >= t if closed else x > t, 1.0, 0.0)
    return ev


# name -> (evaluator, minimal arity implied by params)
BUILTINS: dict[str, tuple[Callable, Callable]] = {
    "const": (_b_const, lambda p: 1),
    "monomial": (_b_monomial, lambda p: int(p[0])),
    "power_product": (_b_power_product, lambda p: len(p)),
    "tpow_plus": (_b_tpow("plus"), lambda p: int(p[0])),
    "tpow_minus": (_b_tpow("minus"), lambda p: int(p[0])),
    "hinge": (_b_hinge, lambda p: int(p[0])),
    "exp_sum": (_b_exp_sum, lambda p: max(1, len(p))),
    "step_ge": (_b_step(True), lambda p: int(p[0])),
    "step_gt": (_b_step(False), lambda p: int(p[0])),
}


@dataclass(frozen=True, eq=False)
class Builtin(FunctionSpec):
    """A named catalog function, e.g. ``Builtin("monomial", (1, 2), 2)`` is ``x1**2``."""

    name: str
    params: tuple = ()
    arity: int = 0

    def __post_init__(self):
        if self.name not in BUILTINS:
            raise SchemaError(f"unknown builtin {self.name!r}", "builtin")
        object.__setattr__(self, "params", tuple(self.params))
        need = BUILTINS[self.name][1](self.params)
        if self.arity == 0:
            object.__setattr__(self, "arity", need)
        elif self.arity < need:
            raise SchemaError(f"builtin {self.name} needs arity >= {need}", "arity")
        if self.name == "power_product" and len(self.params) != self.arity:
            raise SchemaError("power_product needs one exponent per axis", "params")
        if self.name == "exp_sum" and self.params and len(self.params) != self.arity:
            raise SchemaError("exp_sum needs one coefficient per axis", "params")

    def _values(self, X):
        return BUILTINS[self.name][0](self.params, X)

    def to_json(self):
        return {"builtin": self.name, "params": list(self.params), "arity": self.arity}

    def __repr__(self):
        return f"Builtin({self.name!r}, {self.params}, arity={self.arity})"


# ---------------------------------------------------------------------------
# Tabulated grids, combinations, tensor products, callables
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Tabulated(FunctionSpec):
    """Values on a tensor grid; defined only at the grid nodes (no interpolation)."""

    nodes: tuple
    table: np.ndarray

    def __post_init__(self):
        nodes = tuple(tuple(float(v) for v in axis) for axis in self.nodes)
        table = np.asarray(self.table, dtype=float)
        shape = tuple(len(axis) for axis in nodes)
        if table.size != math.prod(shape):
            raise SchemaError(
                f"value array has {table.size} entries, grid needs {math.prod(shape)}", "values")
        for i, axis in enumerate(nodes):
            if len(set(axis)) != len(axis):
                raise SchemaError("grid nodes must be distinct", f"nodes[{i}]")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "table", table.reshape(shape))

    @property
    def arity(self) -> int:
        return len(self.nodes)

    def _values(self, X):
        index = []
        for i, axis in enumerate(self.nodes):
            order = np.argsort(axis)
            sorted_axis = np.asarray(axis)[order]
            pos = np.clip(np.searchsorted(sorted_axis, X[:, i]), 0, len(axis) - 1)
            if not np.all(sorted_axis[pos] == X[:, i]):
                bad = X[np.argmax(sorted_axis[pos] != X[:, i])]
                raise EvaluationError(f"point {tuple(bad)} is not a grid node; tabulated "
                                      "functions are not interpolated")
            index.append(order[pos])
        return self.table[tuple(index)]

    def to_json(self):
        return {"tabulated": {"nodes": [list(a) for a in self.nodes],
                              "values": self.table.ravel().tolist()}}


@dataclass(frozen=True, eq=False)
class Combination(FunctionSpec):
    """Weighted sum ``sum_k w_k * f_k`` of functions of equal arity."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(w), f) for w, f in self.terms)
        if not terms:
            raise SchemaError("a combination needs at least one term", "sum")
        arities = {f.arity for _, f in terms}
        if len(arities) != 1:
            raise SchemaError(f"arity mismatch in combination: {sorted(arities)}", "sum")
        if not all(math.isfinite(w) for w, _ in terms):
            raise SchemaError("combination weights must be finite", "sum")
        object.__setattr__(self, "terms", terms)

    @property
    def arity(self) -> int:
        return self.terms[0][1].arity

    def _values(self, X):
        out = np.zeros(X.shape[0])
        for w, f in self.terms:
            out = out + w * f.values(X)
        return out

    def _values_mag(self, X):
        out, mag = np.zeros(X.shape[0]), np.zeros(X.shape[0])
        for w, f in self.terms:
            v, m = f.values_and_magnitude(X)
            out = out + w * v
            mag = mag + abs(w) * m
        return out, mag

    def to_json(self):
        return {"sum": [{"w": w, "f": f.to_json()} for w, f in self.terms]}


@dataclass(frozen=True, eq=False)
class Product(FunctionSpec):
    """Tensor product: each factor acts on its own (1-based) axes of the full point."""

    factors: tuple
    arity: int

    def __post_init__(self):
        factors = tuple((tuple(int(a) for a in axes), f) for axes, f in self.factors)
        for axes, f in factors:
            if len(axes) != f.arity:
                raise SchemaError("factor arity does not match its axis list", "prod")
            if any(not 1 <= a <= self.arity for a in axes):
                raise SchemaError("factor axis out of range", "prod")
        object.__setattr__(self, "factors", factors)

    def _values(self, X):
        out = np.ones(X.shape[0])
        for axes, f in self.factors:
            out = out * f.values(X[:, [a - 1 for a in axes]])
        return out

    def _values_mag(self, X):
        out, mag = np.ones(X.shape[0]), np.ones(X.shape[0])
        for axes, f in self.factors:
            v, m = f.values_and_magnitude(X[:, [a - 1 for a in axes]])
            out, mag = out * v, mag * m
        return out, mag

    def to_json(self):
        return {"prod": [{"axes": list(axes), "f": f.to_json()} for axes, f in self.factors],
                "arity": self.arity}


@dataclass(frozen=True, eq=False)
class Evaluator(FunctionSpec):
    """Wrap a vectorised Python callable ``fn(X) -> values``; not serialisable."""

    fn: Callable
    arity: int
    label: str = "callable"

    def _values(self, X):
        return self.fn(X)

    def __repr__(self):
        return f"Evaluator({self.label}, arity={self.arity})"


def tensor(*factors: FunctionSpec) -> Product:
    """Tensor product of functions acting on consecutive blocks of variables."""
    out, start = [], 1
    for f in factors:
        out.append((tuple(range(start, start + f.arity)), f))
        start += f.arity
    return Product(tuple(out), start - 1)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

_JSON_KINDS: dict[str, Callable] = {}


def register_json_kind(key: str):
    """Decorator registering a reader ``reader(doc, arity, path)`` for ``{key: ...}``."""
    def deco(reader):
        _JSON_KINDS[key] = reader
        return reader
    return deco


def function_from_json(doc, arity: int | None = None, path: str = "f") -> FunctionSpec:
    """Build a FunctionSpec from its JSON form (see README for the schema)."""
    if not isinstance(doc, dict):
        raise SchemaError("function must be a JSON object", path)
    arity = doc.get("arity", arity)
    for key, reader in _JSON_KINDS.items():
        if key in doc:
            return reader(doc, arity, path)
    raise SchemaError(f"unrecognised function form; expected one of {sorted(_JSON_KINDS)}", path)


@register_json_kind("expr")
def _read_expr(doc, arity, path):
    try:
        return Expression.parse(doc["expr"], arity)
    except ParseError as exc:
        raise SchemaError(str(exc), f"{path}.expr") from exc


@register_json_kind("builtin")
def _read_builtin(doc, arity, path):
    return Builtin(doc["builtin"], tuple(doc.get("params", ())), int(arity or 0))


@register_json_kind("tabulated")
def _read_tabulated(doc, arity, path):
    body = doc["tabulated"]
    return Tabulated(tuple(body["nodes"]), np.asarray(body["values"], dtype=float))


@register_json_kind("sum")
def _read_sum(doc, arity, path):
    terms = []
    for j, item in enumerate(doc["sum"]):
        terms.append((item.get("w", 1.0), function_from_json(item["f"], arity, f"{path}.sum[{j}].f")))
    return Combination(tuple(terms))


@register_json_kind("prod")
def _read_prod(doc, arity, path):
    factors = []
    for j, item in enumerate(doc["prod"]):
        axes = tuple(item["axes"])
        factors.append((axes, function_from_json(item["f"], len(axes), f"{path}.prod[{j}].f")))
    if arity is None:
        arity = max(a for axes, _ in factors for a in axes)
    return Product(tuple(factors), int(arity))
