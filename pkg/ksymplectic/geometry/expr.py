# KSymplectic project.
#
# Scalar-field expression language over the coordinates of a Darboux chart.
#
# Grammar (EBNF):
#
#   expr   := term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := atom ('^' ['-'] integer)?
#   atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom
#
# Identifiers are the chart coordinates x1..xn, y1..y{kn} and the functions
# sin, cos, exp, log, sqrt. Unary minus is an atom and binds tighter than '^', so
# "-y1^2" is (-y1)^2; write -(y1^2) for the negated square.
#
# Fields are evaluated with forward-mode, second-order truncated Taylor arithmetic
# (Jet2): every evaluation returns value, gradient and Hessian over all
# n(k+1) chart coordinates.
#
import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from ksymplectic.common.errors import (BadExponent, DimensionMismatch, EvalError,
                                       ExprSyntaxError, UnknownIdentifier)


#####################################################################
# Expression trees
#
@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Add:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Sub:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Mul:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Div:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Lit, Var, Neg, Add, Sub, Mul, Div, Pow, Call]


@dataclass(frozen=True)
class ScalarField:
    ast: Node
    n: int
    k: int
    source: str = field(default="", compare=False)

    @property
    def dim(self):
        return self.n * (self.k + 1)

    def __str__(self):
        return format_field(self)


# name -> (f, f', f'')
FUNCTIONS = {
    "sin": (math.sin, math.cos, lambda u: -math.sin(u)),
    "cos": (math.cos, lambda u: -math.sin(u), lambda u: -math.cos(u)),
    "exp": (math.exp, math.exp, math.exp),
    "log": (math.log, lambda u: 1.0 / u, lambda u: -1.0 / (u * u)),
    "sqrt": (math.sqrt, lambda u: 0.5 / math.sqrt(u), lambda u: -0.25 / (u * math.sqrt(u))),
}

_COORDINATE_RE = re.compile(r"^([xy])([1-9][0-9]*)$")


def coordinate_index(name, n, k):
    """
    Flat index of a coordinate name (x1..xn, y1..y{kn}), or None when the name
    is not a coordinate of the (n, k) chart.
    """
    match = _COORDINATE_RE.match(name)
    if not match:
        return None
    number = int(match.group(2))
    if match.group(1) == "x":
        return number - 1 if number <= n else None
    return n + number - 1 if number <= n * k else None


#####################################################################
# Tokenizer and parser
#
_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)

_INTEGER_RE = re.compile(r"^[0-9]+$")


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if not match:
            raise ExprSyntaxError(pos, ["number", "identifier", "operator"], src)
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, match.group(), pos))
        pos = match.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src, n, k):
        self.src = src
        self.n = n
        self.k = k
        self.tokens = tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        token = self.tokens[self.i]
        self.i += 1
        return token

    def expect(self, text):
        token = self.peek()
        if token.text != text or token.kind == "end":
            raise ExprSyntaxError(token.pos, [f"'{text}'"], self.src)
        return self.advance()

    def parse(self):
        node = self.expr()
        token = self.peek()
        if token.kind != "end":
            raise ExprSyntaxError(token.pos, ["operator", "end of input"], self.src)
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.advance().text
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def term(self):
        node = self.factor()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.advance().text
            right = self.factor()
            node = Mul(node, right) if op == "*" else Div(node, right)
        return node

    def factor(self):
        node = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            sign = 1
            token = self.peek()
            if token.kind == "op" and token.text == "-":
                sign = -1
                self.advance()
                token = self.peek()
            if token.kind != "number" or not _INTEGER_RE.match(token.text):
                raise BadExponent(token.pos, token.text)
            self.advance()
            node = Pow(node, sign * int(token.text))
        return node

    def atom(self):
        token = self.peek()
        if token.kind == "number":
            self.advance()
            return Lit(float(token.text))
        if token.kind == "ident":
            self.advance()
            if token.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(token.text, arg)
            index = coordinate_index(token.text, self.n, self.k)
            if index is None:
                raise UnknownIdentifier(token.text, token.pos)
            return Var(token.text, index)
        if token.kind == "op" and token.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if token.kind == "op" and token.text == "-":
            self.advance()
            return Neg(self.atom())
        raise ExprSyntaxError(token.pos, ["number", "identifier", "'('", "'-'"], self.src)


def parse_scalar_field(src, n, k):
    """
    Parse src into a ScalarField over the (n, k) chart.

    Raises ExprSyntaxError, UnknownIdentifier or BadExponent with the offending
    position.
    """
    if not src or not src.strip():
        raise ExprSyntaxError(0, ["expression"], src)
    return ScalarField(_Parser(src, n, k).parse(), n, k, source=src)


def zero_field(n, k):
    return ScalarField(Lit(0.0), n, k, source="0")


#####################################################################
# Formatting
#
def _precedence(node):
    if isinstance(node, (Add, Sub)):
        return 1
    if isinstance(node, (Mul, Div)):
        return 2
    if isinstance(node, Pow):
        return 3
    if isinstance(node, Neg):
        return 4
    return 5


def _format_number(value):
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def format_node(node, min_precedence=0):
    if isinstance(node, Lit):
        text = _format_number(node.value)
    elif isinstance(node, Var):
        text = node.name
    elif isinstance(node, Call):
        text = f"{node.func}({format_node(node.arg)})"
    elif isinstance(node, Neg):
        text = "-" + format_node(node.operand, 4)
    elif isinstance(node, Pow):
        text = f"{format_node(node.base, 4)}^{node.exponent}"
    else:
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
        prec = _precedence(node)
        text = f"{format_node(node.left, prec)}{op}{format_node(node.right, prec + 1)}"

    if _precedence(node) < min_precedence:
        return f"({text})"
    return text


def format_field(f):
    """Render a field so that parsing the text gives back the same tree."""
    return format_node(f.ast)


#####################################################################
# Second-order jets
#
class Jet2:
    """
    Value, gradient and Hessian of a scalar at a point. When hess is None the jet
    is first order only (used by the integrators, which never need curvature).
    """
    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess=None):
        self.value = value
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, value, dim, second=True):
        return cls(float(value), np.zeros(dim), np.zeros((dim, dim)) if second else None)

    @classmethod
    def variable(cls, value, index, dim, second=True):
        grad = np.zeros(dim)
        grad[index] = 1.0
        return cls(float(value), grad, np.zeros((dim, dim)) if second else None)

    def __add__(self, other):
        hess = None if self.hess is None else self.hess + other.hess
        return Jet2(self.value + other.value, self.grad + other.grad, hess)

    def __sub__(self, other):
        hess = None if self.hess is None else self.hess - other.hess
        return Jet2(self.value - other.value, self.grad - other.grad, hess)

    def __neg__(self):
        hess = None if self.hess is None else -self.hess
        return Jet2(-self.value, -self.grad, hess)

    def __mul__(self, other):
        a, b = self.value, other.value
        hess = None
        if self.hess is not None:
            cross = np.outer(self.grad, other.grad)
            hess = a * other.hess + b * self.hess + cross + cross.T
        return Jet2(a * b, a * other.grad + b * self.grad, hess)

    def apply(self, f0, f1, f2):
        """Chain rule for a scalar function with derivatives f1, f2."""
        u = self.value
        d1 = f1(u)
        hess = None
        if self.hess is not None:
            hess = d1 * self.hess + f2(u) * np.outer(self.grad, self.grad)
        return Jet2(f0(u), d1 * self.grad, hess)

    def reciprocal(self):
        return self.apply(lambda u: 1.0 / u,
                          lambda u: -1.0 / (u * u),
                          lambda u: 2.0 / (u * u * u))

    def __truediv__(self, other):
        return self * other.reciprocal()

    def powi(self, e):
        if e == 0:
            return Jet2.constant(1.0, len(self.grad), self.hess is not None)
        if e == 1:
            return self
        return self.apply(lambda u: u ** e,
                          lambda u: e * u ** (e - 1),
                          lambda u: e * (e - 1) * u ** (e - 2))


def _jet(node, p, second):
    dim = len(p)
    if isinstance(node, Lit):
        return Jet2.constant(node.value, dim, second)
    if isinstance(node, Var):
        return Jet2.variable(p[node.index], node.index, dim, second)
    if isinstance(node, Neg):
        return -_jet(node.operand, p, second)
    if isinstance(node, Add):
        return _jet(node.left, p, second) + _jet(node.right, p, second)
    if isinstance(node, Sub):
        return _jet(node.left, p, second) - _jet(node.right, p, second)
    if isinstance(node, Mul):
        return _jet(node.left, p, second) * _jet(node.right, p, second)
    if isinstance(node, Div):
        denominator = _jet(node.right, p, second)
        if denominator.value == 0.0:
            raise EvalError(format_node(node), "division by zero")
        return _jet(node.left, p, second) / denominator
    if isinstance(node, Pow):
        base = _jet(node.base, p, second)
        if node.exponent < 0 and base.value == 0.0:
            raise EvalError(format_node(node), "negative power of zero")
        return base.powi(node.exponent)
    if isinstance(node, Call):
        arg = _jet(node.arg, p, second)
        if node.func in ("log", "sqrt") and arg.value <= 0.0:
            raise EvalError(format_node(node), f"{node.func} of nonpositive argument {arg.value!r}")
        return arg.apply(*FUNCTIONS[node.func])
    raise TypeError(f"not an expression node: {node!r}")


def _check_point(f, p):
    p = np.asarray(p, dtype=float)
    if p.shape != (f.dim,):
        raise DimensionMismatch(f"point has shape {p.shape}, chart needs ({f.dim},)")
    return p


def eval_jet2(f, p):
    """Value, gradient and Hessian of f at p."""
    p = _check_point(f, p)
    try:
        return _jet(f.ast, p, True)
    except (OverflowError, ValueError) as e:
        raise EvalError(format_field(f), str(e))


def eval_jet1(f, p):
    """Value and gradient of f at p (hess is None)."""
    p = _check_point(f, p)
    try:
        return _jet(f.ast, p, False)
    except (OverflowError, ValueError) as e:
        raise EvalError(format_field(f), str(e))


def eval_value(f, p):
    return eval_jet1(f, p).value


def is_constant(f):
    """True when the tree mentions no coordinate."""
    def walk(node):
        if isinstance(node, Var):
            return False
        if isinstance(node, Lit):
            return True
        if isinstance(node, Pow):
            return walk(node.base)
        if isinstance(node, (Neg,)):
            return walk(node.operand)
        if isinstance(node, Call):
            return walk(node.arg)
        return walk(node.left) and walk(node.right)
    return walk(f.ast)
