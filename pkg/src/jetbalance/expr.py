"""Immutable scalar expression trees.

Expressions are built through smart constructors (:func:`add`, :func:`mul`,
...) that fold constants, drop additive zeros and multiplicative ones, and
collect like terms.  Nothing else is canonicalised: there is no factoring and
no trigonometric rewriting.

Evaluation accepts scalars or numpy arrays in the binding, so the same tree
can be swept over a whole grid in one call.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Unary", "Add", "Mul", "Div", "Pow",
    "ExprError", "ParseError", "UnboundVariableError", "DomainViolation",
    "const", "var", "add", "sub", "mul", "div", "neg", "power",
    "sin", "cos", "exp", "ln", "sqrt",
    "parse", "render", "differentiate", "evaluate", "substitute",
    "simplify", "free_vars", "as_expr", "is_zero", "FUNCTIONS",
]

Number = Union[int, float]
FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected one of: {', '.join(expected)})"
        super().__init__(detail)


class UnboundVariableError(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name!r}")


class DomainViolation(ExprError):
    def __init__(self, message: str, subexpr: "Expr"):
        self.subexpr = subexpr
        super().__init__(f"{message} in {render(subexpr)!r}")


class Expr:
    """Base node.  Subclasses are immutable and hash structurally."""

    __slots__ = ("_hash",)

    def _key(self):
        raise NotImplementedError

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return hash(self) == hash(other) and self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def __repr__(self):
        return f"Expr({render(self)!r})"

    def __str__(self):
        return render(self)

    # arithmetic sugar, routed through the simplifying constructors
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)


def _init(node, **fields):
    for k, v in fields.items():
        object.__setattr__(node, k, v)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Number):
        _init(self, value=float(value))

    def _key(self):
        return (self.value,)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        _init(self, name=name)

    def _key(self):
        return (self.name,)


class Unary(Expr):
    __slots__ = ("op", "arg")
    OPS = ("neg",) + FUNCTIONS

    def __init__(self, op: str, arg: Expr):
        if op not in self.OPS:
            raise ExprError(f"unknown unary operation {op!r}")
        _init(self, op=op, arg=arg)

    def _key(self):
        return (self.op, self.arg)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        _init(self, terms=tuple(terms))

    def _key(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        _init(self, factors=tuple(factors))

    def _key(self):
        return self.factors


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        _init(self, num=num, den=den)

    def _key(self):
        return (self.num, self.den)


class Pow(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Fraction):
        _init(self, base=base, exponent=Fraction(exponent))

    def _key(self):
        return (self.base, self.exponent)


ZERO = Const(0)
ONE = Const(1)


# ---------------------------------------------------------------------------
# smart constructors

def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not expressions")
    if isinstance(x, (int, float, np.integer, np.floating, Fraction)):
        return Const(float(x))
    if isinstance(x, str):
        return parse(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def const(value: Number) -> Const:
    return Const(value)


def var(name: str) -> Var:
    if not _IDENT.fullmatch(name):
        raise ExprError(f"invalid identifier {name!r}")
    return Var(name)


def is_zero(e) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def _is_const(e, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _split_coeff(e: Expr) -> tuple[float, Expr | None]:
    """Split ``e`` into (numeric coefficient, non-constant core)."""
    if isinstance(e, Const):
        return e.value, None
    if isinstance(e, Unary) and e.op == "neg":
        c, core = _split_coeff(e.arg)
        return -c, core
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        core = rest[0] if len(rest) == 1 else Mul(rest)
        return e.factors[0].value, core
    return 1.0, e


def _scale(c: float, core: Expr) -> Expr:
    if c == 0.0:
        return ZERO
    if c == 1.0:
        return core
    if c == -1.0:
        return Unary("neg", core)
    if isinstance(core, Mul):
        return Mul((Const(c),) + core.factors)
    return Mul((Const(c), core))


def add(*terms) -> Expr:
    flat: list[Expr] = []
    for t in terms:
        t = as_expr(t)
        if isinstance(t, Add):
            flat.extend(t.terms)
        else:
            flat.append(t)
    total = 0.0
    order: list[Expr] = []
    coeffs: dict[Expr, float] = {}
    for t in flat:
        c, core = _split_coeff(t)
        if core is None:
            total += c
            continue
        if core in coeffs:
            coeffs[core] += c
        else:
            coeffs[core] = c
            order.append(core)
    out = [_scale(coeffs[core], core) for core in order if coeffs[core] != 0.0]
    if total != 0.0 or not out:
        out.append(Const(total))
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def neg(e) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const):
        return Const(-e.value)
    if isinstance(e, Unary) and e.op == "neg":
        return e.arg
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        return _scale(-e.factors[0].value, _split_coeff(e)[1])
    if isinstance(e, Add):
        return add(*(neg(t) for t in e.terms))
    return Unary("neg", e)


def sub(a, b) -> Expr:
    return add(a, neg(b))


def mul(*factors) -> Expr:
    coeff = 1.0
    flat: list[Expr] = []
    for f in factors:
        f = as_expr(f)
        c, core = _split_coeff(f)
        coeff *= c
        if core is None:
            continue
        if isinstance(core, Mul):
            flat.extend(core.factors)
        else:
            flat.append(core)
    if coeff == 0.0:
        return ZERO
    if not flat:
        return Const(coeff)
    core = flat[0] if len(flat) == 1 else Mul(tuple(flat))
    return _scale(coeff, core)


def div(a, b) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if isinstance(b, Const):
        if b.value == 0.0:
            # kept symbolic so evaluation reports the violation
            return Div(a, b)
        return mul(1.0 / b.value, a)
    if is_zero(a):
        return ZERO
    ca, core_a = _split_coeff(a)
    if core_a is not None and ca != 1.0:
        return mul(ca, div(core_a, b))
    return Div(a, b)


def _as_fraction(exponent) -> Fraction:
    if isinstance(exponent, Fraction):
        return exponent
    if isinstance(exponent, (int, np.integer)):
        return Fraction(int(exponent))
    if isinstance(exponent, Const):
        exponent = exponent.value
    if isinstance(exponent, (float, np.floating)):
        if not math.isfinite(exponent):
            raise ExprError("exponent must be finite")
        fr = Fraction(float(exponent)).limit_denominator(10**6)
        if abs(float(fr) - exponent) > 1e-15 * max(1.0, abs(exponent)):
            raise ExprError(f"exponent {exponent!r} is not a rational constant")
        return fr
    raise ExprError("exponent must be a constant rational")


def _real_power(base, exponent: Fraction):
    """``base ** exponent`` on reals; odd-denominator roots of negatives are real."""
    base = np.asarray(base, dtype=float)
    p, q = exponent.numerator, exponent.denominator
    if q == 1:
        with np.errstate(all="ignore"):
            return np.power(base, float(p)) if p >= 0 else 1.0 / np.power(base, float(-p))
    mag = np.power(np.abs(base), float(exponent))
    if q % 2 == 1 and p % 2 == 1:
        return np.sign(base) * mag
    return mag


def power(base, exponent) -> Expr:
    base = as_expr(base)
    r = _as_fraction(exponent)
    if r == 0:
        return ONE
    if r == 1:
        return base
    if isinstance(base, Const):
        b = base.value
        ok = not (b == 0 and r < 0) and not (b < 0 and r.denominator % 2 == 0)
        if ok:
            return Const(float(_real_power(b, r)))
        return Pow(base, r)
    if isinstance(base, Pow) and r.denominator == 1 and base.exponent.denominator == 1:
        return power(base.base, base.exponent * r)
    return Pow(base, r)


def _func(op: str):
    np_op = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "ln": np.log, "sqrt": np.sqrt}[op]

    def build(arg) -> Expr:
        arg = as_expr(arg)
        if isinstance(arg, Const):
            v = arg.value
            if (op == "ln" and v <= 0) or (op == "sqrt" and v < 0):
                return Unary(op, arg)
            return Const(float(np_op(v)))
        if op == "ln" and isinstance(arg, Unary) and arg.op == "exp":
            return arg.arg
        return Unary(op, arg)

    build.__name__ = op
    return build


sin = _func("sin")
cos = _func("cos")
exp = _func("exp")
ln = _func("ln")
sqrt = _func("sqrt")
_UNARY_BUILDERS = {"sin": sin, "cos": cos, "exp": exp, "ln": ln, "sqrt": sqrt, "neg": neg}


# ---------------------------------------------------------------------------
# traversal

@lru_cache(maxsize=None)
def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    return frozenset().union(*(free_vars(c) for c in _children(e)))


def _children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def _rebuild(e: Expr, children) -> Expr:
    if isinstance(e, Unary):
        return _UNARY_BUILDERS[e.op](children[0])
    if isinstance(e, Add):
        return add(*children)
    if isinstance(e, Mul):
        return mul(*children)
    if isinstance(e, Div):
        return div(*children)
    if isinstance(e, Pow):
        return power(children[0], e.exponent)
    return e


def simplify(e: Expr) -> Expr:
    """Re-run the constructor rules bottom-up (value preserving)."""
    e = as_expr(e)
    kids = _children(e)
    if not kids:
        return e
    return _rebuild(e, [simplify(k) for k in kids])


def substitute(e: Expr, mapping: Mapping[str, object]) -> Expr:
    """Replace variables by expressions (or numbers) and re-simplify."""
    e = as_expr(e)
    repl = {k: as_expr(v) for k, v in mapping.items()}
    if not repl:
        return e
    names = frozenset(repl)
    cache: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        if not (free_vars(node) & names):
            return node
        if node in cache:
            return cache[node]
        if isinstance(node, Var):
            out = repl[node.name]
        else:
            out = _rebuild(node, [go(k) for k in _children(node)])
        cache[node] = out
        return out

    return go(e)


@lru_cache(maxsize=200_000)
def _diff(e: Expr, name: str) -> Expr:
    if name not in free_vars(e):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(*(_diff(t, name) for t in e.terms))
    if isinstance(e, Mul):
        terms = []
        for k, f in enumerate(e.factors):
            df = _diff(f, name)
            if not is_zero(df):
                terms.append(mul(*e.factors[:k], df, *e.factors[k + 1:]))
        return add(*terms)
    if isinstance(e, Div):
        dn, dd = _diff(e.num, name), _diff(e.den, name)
        first = div(dn, e.den)
        if is_zero(dd):
            return first
        return sub(first, div(mul(e.num, dd), power(e.den, 2)))
    if isinstance(e, Pow):
        r = e.exponent
        return mul(Const(float(r)), power(e.base, r - 1), _diff(e.base, name))
    if isinstance(e, Unary):
        a = e.arg
        da = _diff(a, name)
        if e.op == "neg":
            return neg(da)
        if e.op == "sin":
            return mul(cos(a), da)
        if e.op == "cos":
            return neg(mul(sin(a), da))
        if e.op == "exp":
            return mul(e, da)
        if e.op == "ln":
            return div(da, a)
        if e.op == "sqrt":
            return div(da, mul(2, e))
    raise ExprError(f"cannot differentiate node {type(e).__name__}")


def differentiate(e, name: str, order: int = 1) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``name``.

    Variables absent from ``e`` give 0.  ``order`` > 1 iterates.
    """
    e = as_expr(e)
    if order < 0:
        raise ValueError("order must be non-negative")
    for _ in range(order):
        e = _diff(e, name)
    return e


# ---------------------------------------------------------------------------
# evaluation

def evaluate(e, binding: Mapping[str, object]):
    """Evaluate ``e`` under ``binding`` (scalars or broadcastable arrays).

    Returns a Python float when every bound value is scalar, otherwise an
    ndarray.  Unbound variables and domain violations raise.
    """
    e = as_expr(e)
    missing = free_vars(e) - set(binding)
    if missing:
        raise UnboundVariableError(sorted(missing)[0])
    cache: dict[Expr, object] = {}
    out = _eval(e, binding, cache)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


def _eval(e: Expr, b, cache):
    if e in cache:
        return cache[e]
    if isinstance(e, Const):
        out = e.value
    elif isinstance(e, Var):
        out = np.asarray(b[e.name], dtype=float) if not np.isscalar(b[e.name]) else float(b[e.name])
    elif isinstance(e, Add):
        out = _eval(e.terms[0], b, cache)
        for t in e.terms[1:]:
            out = out + _eval(t, b, cache)
    elif isinstance(e, Mul):
        out = _eval(e.factors[0], b, cache)
        for f in e.factors[1:]:
            out = out * _eval(f, b, cache)
    elif isinstance(e, Div):
        num = _eval(e.num, b, cache)
        den = _eval(e.den, b, cache)
        if np.any(np.asarray(den) == 0):
            raise DomainViolation("division by zero", e)
        out = num / den
    elif isinstance(e, Pow):
        base = _eval(e.base, b, cache)
        r = e.exponent
        arr = np.asarray(base)
        if r < 0 and np.any(arr == 0):
            raise DomainViolation("zero raised to a negative power", e)
        if r.denominator % 2 == 0 and np.any(arr < 0):
            raise DomainViolation("even root of a negative number", e)
        out = _real_power(base, r)
        if np.ndim(out) == 0:
            out = float(out)
    elif isinstance(e, Unary):
        a = _eval(e.arg, b, cache)
        if e.op == "neg":
            out = -a
        elif e.op == "ln":
            if np.any(np.asarray(a) <= 0):
                raise DomainViolation("logarithm of a non-positive number", e)
            out = np.log(a)
        elif e.op == "sqrt":
            if np.any(np.asarray(a) < 0):
                raise DomainViolation("square root of a negative number", e)
            out = np.sqrt(a)
        else:
            out = {"sin": np.sin, "cos": np.cos, "exp": np.exp}[e.op](a)
    else:
        raise ExprError(f"unknown node {type(e).__name__}")
    cache[e] = out
    return out


# ---------------------------------------------------------------------------
# rendering

_PREC = {"add": 1, "mul": 2, "neg": 3, "pow": 4, "atom": 5}


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _fmt_fraction(r: Fraction) -> str:
    if r.denominator == 1:
        s = str(r.numerator)
    else:
        s = f"{r.numerator}/{r.denominator}"
    return s if (r.denominator == 1 and r >= 0) else f"({s})"


def _render(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        s = _fmt_number(e.value)
        if s.startswith("-"):
            return s, _PREC["neg"]
        return s, _PREC["atom"]
    if isinstance(e, Var):
        return e.name, _PREC["atom"]
    if isinstance(e, Unary):
        inner, p = _render(e.arg)
        if e.op == "neg":
            if p <= _PREC["neg"] and p != _PREC["pow"]:
                inner = f"({inner})"
            return f"-{inner}", _PREC["neg"]
        return f"{e.op}({inner})", _PREC["atom"]
    if isinstance(e, Add):
        parts = []
        for k, t in enumerate(e.terms):
            c, core = _split_coeff(t)
            if k > 0 and c < 0:
                s, p = _render(_scale(-c, core) if core is not None else Const(-c))
                if p <= _PREC["add"]:
                    s = f"({s})"
                parts.append(f" - {s}")
                continue
            s, p = _render(t)
            if k > 0:
                parts.append(f" + {s}")
            else:
                parts.append(s)
        return "".join(parts), _PREC["add"]
    if isinstance(e, Mul):
        lead = e.factors[0]
        if isinstance(lead, Const) and lead.value < 0:
            s, p = _render(_scale(-lead.value, _split_coeff(e)[1]))
            if p < _PREC["mul"]:
                s = f"({s})"
            return f"-{s}", _PREC["neg"]
        parts = []
        for f in e.factors:
            s, p = _render(f)
            if p < _PREC["mul"] or (p == _PREC["neg"] and parts):
                s = f"({s})"
            parts.append(s)
        return "*".join(parts), _PREC["mul"]
    if isinstance(e, Div):
        n, pn = _render(e.num)
        d, pd = _render(e.den)
        if pn < _PREC["mul"]:
            n = f"({n})"
        if pd <= _PREC["mul"] or pd == _PREC["neg"]:
            d = f"({d})"
        return f"{n}/{d}", _PREC["mul"]
    if isinstance(e, Pow):
        s, p = _render(e.base)
        if p <= _PREC["pow"]:
            s = f"({s})"
        return f"{s}^{_fmt_fraction(e.exponent)}", _PREC["pow"]
    raise ExprError(f"unknown node {type(e).__name__}")


def render(e) -> str:
    """Formula string in the grammar accepted by :func:`parse`."""
    return _render(as_expr(e))[0]


# ---------------------------------------------------------------------------
# parsing

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def _fail(self, expected, what=None):
        self._skip()
        if what is None:
            what = "unexpected end of input" if self.pos >= len(self.src) \
                else f"unexpected {self.src[self.pos]!r}"
        raise ParseError(what, self.pos, expected)

    def parse(self) -> Expr:
        if not self._peek():
            self._fail(("number", "identifier", "(", "-"), "empty formula")
        e = self.expr()
        if self._peek():
            self._fail(("+", "-", "*", "/", "^", "end of input"))
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self._peek() in ("+", "-"):
            op = self.src[self.pos]
            self.pos += 1
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self._peek() in ("*", "/"):
            op = self.src[self.pos]
            self.pos += 1
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self._peek() == "-":
            self.pos += 1
            return neg(self.unary())
        if self._peek() == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._peek() == "^":
            self.pos += 1
            start = self.pos
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ParseError("exponent must be a constant rational", start)
            try:
                return power(base, _as_fraction(exponent.value))
            except ExprError as err:
                raise ParseError(str(err), start) from None
        return base

    def atom(self) -> Expr:
        c = self._peek()
        if c == "(":
            self.pos += 1
            e = self.expr()
            if self._peek() != ")":
                self._fail((")",))
            self.pos += 1
            return e
        m = _NUMBER.match(self.src, self.pos)
        if m:
            self.pos = m.end()
            return Const(float(m.group()))
        m = _IDENT.match(self.src, self.pos)
        if m:
            name = m.group()
            start = self.pos
            self.pos = m.end()
            if self._peek() == "(":
                if name not in FUNCTIONS:
                    raise ParseError(f"unknown function {name!r}", start, FUNCTIONS)
                self.pos += 1
                arg = self.expr()
                if self._peek() != ")":
                    self._fail((")",))
                self.pos += 1
                return _UNARY_BUILDERS[name](arg)
            return Var(name)
        self._fail(("number", "identifier", "(", "-"))


def parse(src: str) -> Expr:
    """Parse a formula string.

    >>> render(parse("2*x1*x2 - x1^3"))
    '2*x1*x2 - x1^3'
    """
    if not isinstance(src, str):
        raise TypeError("formula must be a string")
    return _Parser(src).parse()
