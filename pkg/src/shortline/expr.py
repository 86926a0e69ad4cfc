"""Scalar formula parsing and second-order forward-mode differentiation.

Grammar (whitespace ignored)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' unary)?
    atom    := number | constant | variable | func '(' expr ')' | '(' expr ')'

``^`` is right associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)`` while ``x^-2`` is ``x^(-2)``.

Every evaluation works on floats or on numpy arrays of matching shape, which
lets the tracer push a whole batch of trajectories through one tree walk.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

VARIABLES = frozenset({"x", "y", "z", "v", "w", "u"})
ALIASES = {"omega": "w", "ω": "w"}
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = ("sin", "cos", "tan", "sqrt", "exp", "ln", "atan")

# (i, j) pairs for the six stored Hessian slots, and the reverse lookup.
HESS_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_SLOT = {}
for _k, (_i, _j) in enumerate(HESS_PAIRS):
    _SLOT[(_i, _j)] = _k
    _SLOT[(_j, _i)] = _k


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        ExprError.__init__(self, f"unknown identifier {name!r} at byte offset {offset}")
        self.name = name
        self.offset = offset


class DomainError(ExprError, ArithmeticError):
    """Raised when an evaluation leaves the domain of a sub-expression."""

    def __init__(self, message: str, subexpr: "Expression"):
        super().__init__(f"{message} in {to_text(subexpr)!s}")
        self.subexpr = subexpr


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of FUNCTIONS
    arg: "Expression"

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Binary:
    op: str  # "add" | "sub" | "mul" | "div" | "pow"
    left: "Expression"
    right: "Expression"

    def __str__(self):
        return to_text(self)

    @cached_property
    def const_exponent(self):
        return constant_value(self.right) if self.op == "pow" else None


Expression = Union[Const, Var, Unary, Binary]


def variables(e: Expression) -> set:
    """Names of the variables that occur in ``e``."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return variables(e.arg)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return set()


def constant_value(e: Expression):
    """Value of a variable-free sub-tree, or None if it references variables."""
    if variables(e):
        return None
    with np.errstate(all="ignore"):
        val = float(_eval(e, {}, 0, True, ()).v)
    return val


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_ω][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    toks = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", _byte(text, bad))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append((kind, m.group(kind), _byte(text, start)))
        pos = m.end()
    toks.append(("end", "", _byte(text, len(text))))
    return toks


def _byte(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, off = self.take()
        if val != value or kind == "end":
            got = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, got {got}", off)

    def parse(self):
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", off)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = "add" if self.take()[1] == "+" else "sub"
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = "mul" if self.take()[1] == "*" else "div"
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Binary("pow", base, self.unary())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            if val in CONSTANTS:
                return Const(CONSTANTS[val])
            name = ALIASES.get(val, val)
            if name in VARIABLES:
                return Var(name)
            raise UnknownIdentifierError(val, off)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        got = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {got}", off)


def parse(text: str) -> Expression:
    """Parse ``text`` into an expression tree.

    Raises ExprSyntaxError (with ``offset``) on malformed input and
    UnknownIdentifierError for names outside the variable/function whitelist.
    """
    return _Parser(text).parse()


def as_expression(e) -> Expression:
    if isinstance(e, (Const, Var, Unary, Binary)):
        return e
    if isinstance(e, (int, float)):
        return Const(float(e))
    return parse(str(e))


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 4}
_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def _prec(e) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    return 5


def to_text(e: Expression) -> str:
    """Print ``e`` with the minimal parentheses that re-parse to the same tree."""
    if isinstance(e, Const):
        val = float(e.value)
        if val.is_integer() and abs(val) < 1e15:
            return str(int(val))
        return repr(val)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_text(e.arg)
            return "-" + (f"({inner})" if _prec(e.arg) < 3 else inner)
        return f"{e.op}({to_text(e.arg)})"
    p = _PREC[e.op]
    left, right = to_text(e.left), to_text(e.right)
    if e.op == "pow":
        if _prec(e.left) < 5:
            left = f"({left})"
        if _prec(e.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {_SYM[e.op]} {right}"


# ---------------------------------------------------------------------------
# Jets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and symmetric Hessian of a scalar at a point.

    The Hessian keeps six slots; ``hessian(i, j)`` and ``hessian(j, i)`` read
    the same one.  Entries are floats, or arrays for batched evaluation.
    """

    value: object
    gradient: tuple
    hess6: tuple

    def hessian(self, i: int, j: int):
        return self.hess6[_SLOT[(i, j)]]

    @property
    def hessian_matrix(self) -> np.ndarray:
        return np.array([[self.hessian(i, j) for j in range(3)] for i in range(3)], dtype=float)

    def __add__(self, other: "Jet2") -> "Jet2":
        return Jet2(
            self.value + other.value,
            tuple(a + b for a, b in zip(self.gradient, other.gradient)),
            tuple(a + b for a, b in zip(self.hess6, other.hess6)),
        )


_NONE3 = (None, None, None)
_NONE6 = (None,) * 6


class _J:
    """Sparse internal jet: ``None`` marks a structural zero."""

    __slots__ = ("v", "g", "h")

    def __init__(self, v, g=_NONE3, h=_NONE6):
        self.v = v
        self.g = g
        self.h = h


# ---------------------------------------------------------------------------
# Code generation.  An expression is compiled, per (order, strictness,
# differentiation variables), into straight-line numpy code.  Symbolic
# entries are None (structural zero), a float (folded constant) or the name
# of a temporary; zeros and constants are folded at compile time.
# ---------------------------------------------------------------------------

_UFUNC = {"sin": "np.sin", "cos": "np.cos", "tan": "np.tan", "exp": "np.exp",
          "atan": "np.arctan", "sqrt": "np.sqrt", "ln": "np.log"}
_FOLD = {"sin": math.sin, "cos": math.cos, "tan": math.tan, "atan": math.atan}


class _Gen:
    def __init__(self, order: int, strict: bool, names: tuple):
        self.order = order
        self.strict = strict
        self.names = names
        self.lines = []
        self.memo = {}
        self.consts = []
        self.nodes = []
        self.loaded = {}
        self.jets = {}

    # scalar emission ---------------------------------------------------------

    def lit(self, a):
        if isinstance(a, str):
            return a
        if math.isfinite(a):
            return f"({a!r})"
        self.consts.append(a)
        return f"_C[{len(self.consts) - 1}]"

    def emit(self, text):
        name = self.memo.get(text)
        if name is None:
            name = f"t{len(self.memo)}"
            self.memo[text] = name
            self.lines.append(f"{name} = {text}")
        return name

    def add(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        if isinstance(a, float) and isinstance(b, float):
            return a + b
        if isinstance(a, float) and a == 0.0:
            return b
        if isinstance(b, float) and b == 0.0:
            return a
        return self.emit(f"{self.lit(a)} + {self.lit(b)}")

    def neg(self, a):
        if a is None:
            return None
        if isinstance(a, float):
            return -a
        return self.emit(f"-{a}")

    def sub(self, a, b):
        if b is None:
            return a
        if a is None:
            return self.neg(b)
        if isinstance(a, float) and isinstance(b, float):
            return a - b
        if isinstance(b, float) and b == 0.0:
            return a
        if isinstance(a, float) and a == 0.0:
            return self.neg(b)
        return self.emit(f"{self.lit(a)} - {self.lit(b)}")

    def mul(self, a, b):
        if a is None or b is None:
            return None
        if isinstance(a, float) and isinstance(b, float):
            return a * b
        if isinstance(a, float):
            a, b = b, a
        if isinstance(b, float):
            if b == 1.0:
                return a
            if b == -1.0:
                return self.neg(a)
            if b == 0.0:
                return 0.0
            return self.emit(f"{self.lit(b)} * {a}")
        if a > b:
            a, b = b, a
        return self.emit(f"{a} * {b}")

    def div(self, a, b):
        if a is None:
            return None
        if isinstance(a, float) and isinstance(b, float):
            return a / b if b != 0.0 else (math.copysign(math.inf, a) if a else math.nan)
        if isinstance(b, float) and b == 1.0:
            return a
        return self.emit(f"{self.lit(a)} / {self.lit(b)}")

    def call(self, fn, a):
        if isinstance(a, float):
            with np.errstate(all="ignore"):
                return float(getattr(np, _UFUNC[fn][3:])(a))
        return self.emit(f"{_UFUNC[fn]}({a})")

    def check(self, cond_text, ok_const, message, node):
        """Emit a strict domain check; ``ok_const`` is the folded verdict for constants."""
        if not self.strict:
            return
        self.nodes.append((message, node))
        k = len(self.nodes) - 1
        if ok_const is not None:
            if not ok_const:
                self.lines.append(f"_fail({k})")
            return
        self.lines.append(f"if not _ok({cond_text}): _fail({k})")

    # jet emission -------------------------------------------------------------

    def dz(self, t):
        return None if isinstance(t, float) and t == 0.0 else t

    def const(self, c):
        return (float(c), _NONE3, _NONE6)

    def jmul(self, A, B):
        av, ag, ah = A
        bv, bg, bh = B
        v = self.mul(av, bv)
        if self.order == 0:
            return v, _NONE3, _NONE6
        g = tuple(self.dz(self.add(self.mul(av, bg[i]), self.mul(bv, ag[i]))) for i in range(3))
        if self.order == 1:
            return v, g, _NONE6
        h = []
        for k, (i, j) in enumerate(HESS_PAIRS):
            t = self.add(self.mul(av, bh[k]), self.mul(bv, ah[k]))
            if i == j:
                c = self.mul(2.0, self.mul(ag[i], bg[i]))
            else:
                c = self.add(self.mul(ag[i], bg[j]), self.mul(ag[j], bg[i]))
            h.append(self.dz(self.add(t, c)))
        return v, g, tuple(h)

    def jsquare(self, U):
        uv, ug, uh = U
        v = self.mul(uv, uv)
        if self.order == 0:
            return v, _NONE3, _NONE6
        tv = self.mul(2.0, uv)
        g = tuple(self.dz(self.mul(tv, t)) for t in ug)
        if self.order == 1:
            return v, g, _NONE6
        h = tuple(self.dz(self.add(self.mul(tv, uh[k]), self.mul(2.0, self.mul(ug[i], ug[j]))))
                  for k, (i, j) in enumerate(HESS_PAIRS))
        return v, g, h

    def jdiv(self, A, B):
        av, ag, ah = A
        bv, bg, bh = B
        q = self.div(av, bv)
        if self.order == 0:
            return q, _NONE3, _NONE6
        inv = self.div(1.0, bv)
        mq = self.neg(q)
        g = tuple(self.dz(self.mul(self.add(ag[i], self.mul(mq, bg[i])), inv)) for i in range(3))
        if self.order == 1:
            return q, g, _NONE6
        h = []
        for k, (i, j) in enumerate(HESS_PAIRS):
            t = self.add(ah[k], self.mul(mq, bh[k]))
            c = self.add(self.mul(g[i], bg[j]), self.mul(g[j], bg[i]))
            h.append(self.dz(self.mul(self.sub(t, c), inv)))
        return q, g, tuple(h)

    def jchain(self, U, f0, f1, f2):
        uv, ug, uh = U
        if self.order == 0:
            return f0, _NONE3, _NONE6
        g = tuple(self.dz(self.mul(f1, t)) for t in ug)
        if self.order == 1:
            return f0, g, _NONE6
        h = tuple(self.dz(self.add(self.mul(f1, uh[k]), self.mul(f2, self.mul(ug[i], ug[j]))))
                  for k, (i, j) in enumerate(HESS_PAIRS))
        return f0, g, h

    def jpowi(self, A, n):
        result = None
        base = A
        while n:
            if n & 1:
                result = base if result is None else self.jmul(result, base)
            n >>= 1
            if n:
                base = self.jsquare(base)
        return result

    def cmp(self, a, op, c):
        """Folded truth value of ``a op c`` for a constant, else None."""
        if isinstance(a, float):
            return bool({">": a > c, "!=": a != c, ">=": a >= c}[op])
        return None

    # tree walk ----------------------------------------------------------------

    def jet(self, e):
        got = self.jets.get(e)
        if got is None:
            got = self._jet(e)
            self.jets[e] = got
        return got

    def _jet(self, e):
        if isinstance(e, Const):
            return self.const(e.value)
        if isinstance(e, Var):
            name = self.loaded.get(e.name)
            if name is None:
                name = f"v_{e.name}"
                self.lines.append(f"{name} = _env[{e.name!r}]")
                self.loaded[e.name] = name
            if self.order >= 1 and e.name in self.names:
                k = self.names.index(e.name)
                return name, tuple(1.0 if i == k else None for i in range(3)), _NONE6
            return name, _NONE3, _NONE6
        if isinstance(e, Binary):
            return self._binary(e)
        return self._unary(e)

    def _binary(self, e):
        if e.op == "pow":
            return self._pow(e)
        A = self.jet(e.left)
        B = self.jet(e.right)
        if e.op == "add":
            return (self.add(A[0], B[0]), tuple(self.add(p, q) for p, q in zip(A[1], B[1])),
                    tuple(self.add(p, q) for p, q in zip(A[2], B[2])))
        if e.op == "sub":
            return (self.sub(A[0], B[0]), tuple(self.sub(p, q) for p, q in zip(A[1], B[1])),
                    tuple(self.sub(p, q) for p, q in zip(A[2], B[2])))
        if e.op == "mul":
            return self.jmul(A, B)
        self.check(f"{B[0]} != 0", self.cmp(B[0], "!=", 0.0), "division by zero", e)
        return self.jdiv(A, B)

    def _pow(self, e):
        A = self.jet(e.left)
        c = e.const_exponent
        if c is not None and math.isfinite(c) and float(c).is_integer() and abs(c) <= 1024:
            n = int(c)
            if n == 0:
                return self.const(1.0)
            if n > 0:
                return self.jpowi(A, n)
            R = self.jpowi(A, -n)
            self.check(f"{R[0]} != 0", self.cmp(R[0], "!=", 0.0), "division by zero", e)
            return self.jdiv(self.const(1.0), R)
        x = A[0]
        self.check(f"{x} > 0", self.cmp(x, ">", 0.0), "non-integer power of non-positive base", e)
        if c is not None:
            f0 = self.emit(f"{self.lit(x)} ** {self.lit(c)}") if isinstance(x, str) else (
                x ** c if x > 0 else math.nan)
            f1 = self.div(self.mul(c, f0), x)
            f2 = self.div(self.mul(c * (c - 1.0), f0), self.mul(x, x))
            return self.jchain(A, f0, f1, f2)
        B = self.jet(e.right)
        inv = self.div(1.0, x)
        la = self.jchain(A, self.call("ln", x), inv, self.neg(self.mul(inv, inv)))
        prod = self.jmul(B, la)
        ev = self.call("exp", prod[0])
        return self.jchain(prod, ev, ev, ev)

    def _unary(self, e):
        U = self.jet(e.arg)
        op, x = e.op, U[0]
        if op == "neg":
            return (self.neg(x), tuple(self.neg(t) for t in U[1]), tuple(self.neg(t) for t in U[2]))
        if op == "sqrt":
            if self.order == 0:
                self.check(f"{x} >= 0", self.cmp(x, ">=", 0.0), "sqrt of negative argument", e)
                return self.call("sqrt", x), _NONE3, _NONE6
            self.check(f"{x} > 0", self.cmp(x, ">", 0.0), "sqrt derivative at non-positive argument", e)
            r = self.call("sqrt", x)
            d1 = self.div(0.5, r)
            return self.jchain(U, r, d1, self.neg(self.div(self.mul(0.5, d1), x)))
        if op == "ln":
            self.check(f"{x} > 0", self.cmp(x, ">", 0.0), "ln of non-positive argument", e)
            inv = self.div(1.0, x)
            return self.jchain(U, self.call("ln", x), inv, self.neg(self.mul(inv, inv)))
        if op == "exp":
            ev = self.call("exp", x)
            return self.jchain(U, ev, ev, ev)
        if self.order == 0:
            return self.call(op, x), _NONE3, _NONE6
        if op == "sin":
            s, c = self.call("sin", x), self.call("cos", x)
            return self.jchain(U, s, c, self.neg(s))
        if op == "cos":
            c, s = self.call("cos", x), self.call("sin", x)
            return self.jchain(U, c, self.neg(s), self.neg(c))
        if op == "tan":
            t = self.call("tan", x)
            d = self.add(1.0, self.mul(t, t))
            return self.jchain(U, t, d, self.mul(2.0, self.mul(t, d)))
        if op == "atan":
            d = self.div(1.0, self.add(1.0, self.mul(x, x)))
            return self.jchain(U, self.call("atan", x), d, self.mul(-2.0, self.mul(x, self.mul(d, d))))
        raise ExprError(f"unknown operator {op!r}")


def _ok(mask) -> bool:
    return bool(np.all(mask))


def _compile(e: Expression, order: int, strict: bool, names: tuple = ("x", "y", "z")):
    """Compile ``e`` to a function env -> _J; cached on the node."""
    cache = e.__dict__.setdefault("_compiled", {})
    key = (order, strict, names)
    f = cache.get(key)
    if f is None:
        gen = _Gen(order, strict, names)
        v, g, h = gen.jet(e)
        nodes = gen.nodes

        def fail(k):
            message, node = nodes[k]
            raise DomainError(message, node)

        def lit(t):
            return "None" if t is None else gen.lit(t)

        body = gen.lines + [
            f"return _J({lit(v)}, ({', '.join(lit(t) for t in g)},), "
            f"({', '.join(lit(t) for t in h)},))"
        ]
        src = "def _jet(_env):\n" + "".join(f"    {line}\n" for line in body)
        scope = {"np": np, "_J": _J, "_C": gen.consts, "_ok": _ok, "_fail": fail}
        exec(compile(src, f"<expr {to_text(e)[:60]}>", "exec"), scope)
        f = scope["_jet"]
        f.source = src
        cache[key] = f
    return f


def _eval(e: Expression, env: Mapping[str, object], order: int, strict: bool,
          names: tuple = ("x", "y", "z")) -> _J:
    try:
        return _compile(e, order, strict, names)(env)
    except KeyError as err:
        raise ExprError(f"variable {err.args[0]!r} is not bound in this evaluation") from None


def _finite(j: _J, order: int) -> bool:
    acc = j.v
    if order >= 1:
        for t in j.g:
            if t is not None:
                acc = acc + t
    if order >= 2:
        for t in j.h:
            if t is not None:
                acc = acc + t
    return bool(np.all(np.isfinite(acc)))


def _locate_nonfinite(e: Expression, env, order: int, names: tuple):
    """Return the innermost sub-expression whose jet is not finite."""
    children = ()
    if isinstance(e, Unary):
        children = (e.arg,)
    elif isinstance(e, Binary):
        children = (e.left, e.right)
    for ch in children:
        bad = _locate_nonfinite(ch, env, order, names)
        if bad is not None:
            return bad
    if not _finite(_eval(e, env, order, False, names), order):
        return e
    return None


def jet(e: Expression, env: Mapping[str, object], order: int = 2, strict: bool = True,
        names: Sequence[str] = ("x", "y", "z"), check: bool = True) -> _J:
    """Internal-facing evaluation returning the sparse jet.

    ``env`` maps variable names to floats or arrays.  Derivatives are taken
    with respect to ``names`` (at most three, in gradient-slot order); other
    bound variables act as constants.  With ``check=False`` the scan for
    non-finite output is skipped (explicit domain checks still apply) and the
    caller must check its own results.
    """
    names = tuple(names)
    with np.errstate(all="ignore"):
        out = _eval(e, env, order, strict, names)
        if strict and check and not _finite(out, order):
            bad = _locate_nonfinite(e, env, order, names) or e
            raise DomainError("non-finite result", bad)
    return out


def _dense(t, like):
    if t is None:
        return np.zeros_like(like) if isinstance(like, np.ndarray) else 0.0
    if isinstance(like, np.ndarray) and not isinstance(t, np.ndarray):
        return np.full_like(like, t, dtype=float)
    return t if isinstance(t, np.ndarray) else float(t)


def eval_jet2(e: Expression, point: Sequence, variables: Sequence[str] = ("x", "y", "z")) -> Jet2:
    """Value, gradient and Hessian of ``e`` at ``point``.

    ``point`` gives the values of ``variables`` (default x, y, z) in order;
    the gradient and Hessian are taken with respect to those variables,
    padded to three slots.
    """
    env = dict(zip(variables, point))
    j = jet(e, env, 2, True, tuple(variables))
    like = j.v if isinstance(j.v, np.ndarray) else None
    if like is None:
        for t in point:
            if isinstance(t, np.ndarray):
                like = np.zeros_like(t, dtype=float)
                break
    ref = like if like is not None else 0.0
    return Jet2(_dense(j.v, ref), tuple(_dense(t, ref) for t in j.g),
                tuple(_dense(t, ref) for t in j.h))


def eval_jet1d(e: Expression, var: str, t):
    """(f, f', f'') of a one-variable expression at ``t`` (float or array)."""
    j = jet(e, {var: t}, 2, True, (var,))
    ref = t if isinstance(t, np.ndarray) else 0.0
    return _dense(j.v, ref), _dense(j.g[0], ref), _dense(j.h[0], ref)


def evaluate(e: Expression, strict: bool = True, **env):
    """Plain value of ``e`` with variables bound from keyword arguments."""
    return jet(e, env, 0, strict, ()).v


def check_variables(e: Expression, allowed: Iterable[str], what: str = "expression") -> None:
    extra = variables(e) - set(allowed)
    if extra:
        raise ExprError(f"{what} {to_text(e)!r} uses {sorted(extra)}; allowed: {sorted(allowed)}")
