"""Expression language for statistics and symbolic results.

An :class:`Expr` is an immutable tree over exact rational constants, named
symbols, power-mean slots ``x1..xd``, sums, products, rational powers and the
primitives ``exp``, ``Phi`` (standard normal CDF) and ``phi`` (its density).
Decimal literals are rejected on input: every constant is an exact
``Fraction`` so that derived coefficients like ``5/72`` stay exact.

Half-integer powers (``sqrt``) are only allowed over bases known to be
positive: positive rational literals, symbols flagged positive (``sigma``,
``pi``, ``lambda``), or expressions registered in a :class:`KernelRegistry`.
Registration happens automatically when a model's asymptotic-variance
expression is formed, and can be requested explicitly for statistic
definitions such as ``sqrt(x2 - x1^2)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

Rational = Union[int, Fraction]


class ExprError(Exception):
    """Base error for the expression layer."""


class ParseError(ExprError):
    """Syntax error, with position information in the message."""


class PositivityError(ExprError):
    """Half-integer power requested over a base not known to be positive."""


class UnsupportedExponentError(ExprError):
    """Exponent is not an integer or half-integer rational."""


# Symbols with fixed semantics.  ``mu`` is the mean, ``sigma`` the scale,
# ``Gamma1`` the skewness, ``kappa1`` the excess kurtosis, ``mu5``... the
# higher standardized central moments, ``lambda`` an acceptance limit and
# ``pi`` the circle constant (used by the normal density's normalizer).
POSITIVE_SYMBOLS = frozenset({"sigma", "pi", "lambda"})
RESERVED_SYMBOLS = frozenset(
    {"mu", "sigma", "Gamma1", "kappa1", "lambda", "pi"}
)

_FUNCTIONS = ("exp", "sqrt", "Phi", "phi")


class Expr:
    """Base class for expression nodes.  Instances are immutable values."""

    __slots__ = ()

    # Operator sugar so generic coefficient arithmetic can run on Expr,
    # NormalForm or float values alike.
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, exponent):
        return pow_(self, exponent)

    def __neg__(self):
        return neg(self)


def _coerce(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(Fraction(value))
    raise TypeError(f"cannot coerce {value!r} into an Expr")


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True, slots=True)
class Sym(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ExprError(f"variable index must be >= 1, got {self.index}")


@dataclass(frozen=True, slots=True)
class Add(Expr):
    terms: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    factors: tuple[Expr, ...]


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True, slots=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class NormCdf(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class NormPdf(Expr):
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


class KernelRegistry:
    """Set of expressions that may sit under a square root.

    Shared, append-only; registering the same expression twice is a no-op.
    A fresh registry already knows ``kappa1 + 2`` (the excess-kurtosis
    radicand, strictly positive for absolutely continuous distributions).
    """

    def __init__(self, extra: Iterable[Expr] = ()):  # noqa: D401
        # kappa1 + 2, in canonical form (constant term last)
        self._registered: set[Expr] = {Add((Sym("kappa1"), Const(Fraction(2))))}
        for e in extra:
            self.register(e)

    def register(self, e: Expr) -> None:
        self._registered.add(e)

    def contains(self, e: Expr) -> bool:
        return e in self._registered


#: Default registry used when no explicit one is supplied.
DEFAULT_KERNELS = KernelRegistry()


def is_positive_known(e: Expr, kernels: KernelRegistry | None = None) -> bool:
    """Syntactic positivity check backing half-integer power construction."""
    kernels = kernels or DEFAULT_KERNELS
    if kernels.contains(e):
        return True
    if isinstance(e, Const):
        return e.value > 0
    if isinstance(e, Sym):
        return e.name in POSITIVE_SYMBOLS
    if isinstance(e, Var):
        # Even power-mean slots are raw moments of even powers: positive.
        return e.index % 2 == 0
    if isinstance(e, (Exp, NormCdf, NormPdf)):
        return True
    if isinstance(e, Mul):
        return all(is_positive_known(f, kernels) for f in e.factors)
    if isinstance(e, Add):
        return all(is_positive_known(t, kernels) for t in e.terms)
    if isinstance(e, Pow):
        if e.exponent.denominator == 1 and e.exponent.numerator % 2 == 0:
            return True  # even power: nonnegative, zero excluded at eval time
        return is_positive_known(e.base, kernels)
    return False


# ---------------------------------------------------------------------------
# Canonical constructors.  They flatten and fold constants but never reorder
# non-constant operands, so canonical form is stable under printing.
# ---------------------------------------------------------------------------

def const(value: Rational) -> Const:
    return Const(Fraction(value))


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    c = Fraction(0)
    for t in terms:
        if isinstance(t, Add):
            for sub_t in t.terms:
                if isinstance(sub_t, Const):
                    c += sub_t.value
                else:
                    flat.append(sub_t)
        elif isinstance(t, Const):
            c += t.value
        else:
            flat.append(t)
    if c != 0 or not flat:
        flat.append(Const(c))
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    # canonical factor order: constant, numerator factors, then negative
    # powers (matches the printed a*b/c layout, keeping print/parse stable)
    num: list[Expr] = []
    den: list[Expr] = []
    c = Fraction(1)

    def take(f: Expr) -> None:
        nonlocal c
        if isinstance(f, Const):
            c *= f.value
        elif isinstance(f, Pow) and f.exponent < 0:
            den.append(f)
        else:
            num.append(f)

    for f in factors:
        if isinstance(f, Mul):
            for sub_f in f.factors:
                take(sub_f)
        else:
            take(f)
    if c == 0:
        return ZERO
    out: list[Expr] = []
    if c != 1 or not (num or den):
        out.append(Const(c))
    out.extend(num)
    out.extend(den)
    if len(out) == 1:
        return out[0]
    return Mul(tuple(out))


def _split_square(m: int) -> tuple[int, int]:
    """m = a^2 * b with b squarefree, up to a trial-division bound.

    Factors beyond ~1e4 are only detected when the residual is a perfect
    square, so huge literals (e.g. exact binary fractions of doubles) stay
    under the radical instead of triggering unbounded factorization.
    """
    import math as _math

    a, b = 1, 1
    d = 2
    while d * d <= m and d <= 10_000:
        while m % (d * d) == 0:
            a *= d
            m //= d * d
        if m % d == 0:
            b *= d
            m //= d
        d += 1
    root = _math.isqrt(m)
    if root * root == m:
        return a * root, b
    return a, b * m


def _sqrt_of_fraction(v: Fraction) -> Expr:
    """Exact square root of a positive rational: ``a * sqrt(b)``."""
    pa, pb = _split_square(v.numerator)
    qa, qb = _split_square(v.denominator)
    # sqrt(p/q) = (pa/qa) * sqrt(pb*qb) / qb
    coeff = Fraction(pa, qa * qb)
    rad = pb * qb
    if rad == 1:
        return Const(coeff)
    return mul(Const(coeff), Pow(Const(Fraction(rad)), Fraction(1, 2)))


def pow_(base: Expr, exponent: Rational, kernels: KernelRegistry | None = None) -> Expr:
    q = Fraction(exponent)
    if q.denominator not in (1, 2):
        raise UnsupportedExponentError(
            f"exponent {q} not supported: integer or half-integer required"
        )
    if q == 0:
        return ONE
    if q == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0:
            if q < 0:
                raise ExprError("division by zero constant")
            return ZERO
        if q.denominator == 1:
            return Const(base.value ** q.numerator)
        if base.value < 0:
            raise PositivityError(f"sqrt of negative constant {base.value}")
        return _pow_root(_sqrt_of_fraction(base.value), q.numerator)
    if isinstance(base, Pow):
        folded = base.exponent * q
        if q.denominator == 1 or is_positive_known(base.base, kernels):
            return pow_(base.base, folded, kernels)
    if q.denominator == 2 and not is_positive_known(base, kernels):
        raise PositivityError(
            f"half-integer power of a base not registered as positive: {pretty_print(base)}"
        )
    return Pow(base, q)


def _pow_root(root: Expr, m: int) -> Expr:
    """(sqrt v)**m for the exact-root expression returned by _sqrt_of_fraction."""
    if m == 1:
        return root
    if isinstance(root, Const):
        return Const(root.value ** m)
    # root = coeff * rad^(1/2): split and recombine exactly
    coeff = Fraction(1)
    rad = None
    factors = root.factors if isinstance(root, Mul) else (root,)
    for f in factors:
        if isinstance(f, Const):
            coeff *= f.value
        else:
            rad = f  # Pow(Const(r), 1/2)
    assert isinstance(rad, Pow)
    r = rad.base.value  # type: ignore[union-attr]
    odd = m % 2  # m = 2*half + odd with odd in {0, 1}
    half = (m - odd) // 2
    out = Const(coeff**m * r**half)
    if odd:
        return mul(out, rad)
    return out


def neg(e: Expr) -> Expr:
    return mul(Const(Fraction(-1)), e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr, kernels: KernelRegistry | None = None) -> Expr:
    return mul(a, pow_(b, Fraction(-1), kernels))


def sqrt(e: Expr, kernels: KernelRegistry | None = None) -> Expr:
    return pow_(e, Fraction(1, 2), kernels)


def sym(name: str) -> Sym:
    return Sym(name)


def var(index: int) -> Var:
    return Var(index)


def arity(e: Expr) -> int:
    """Largest variable index occurring in ``e`` (0 for constant expressions)."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Add):
        return max((arity(t) for t in e.terms), default=0)
    if isinstance(e, Mul):
        return max((arity(f) for f in e.factors), default=0)
    if isinstance(e, Pow):
        return arity(e.base)
    if isinstance(e, (Exp, NormCdf, NormPdf)):
        return arity(e.arg)
    return 0


def free_symbols(e: Expr) -> set[str]:
    if isinstance(e, Sym):
        return {e.name}
    if isinstance(e, Add):
        out: set[str] = set()
        for t in e.terms:
            out |= free_symbols(t)
        return out
    if isinstance(e, Mul):
        out = set()
        for f in e.factors:
            out |= free_symbols(f)
        return out
    if isinstance(e, Pow):
        return free_symbols(e.base)
    if isinstance(e, (Exp, NormCdf, NormPdf)):
        return free_symbols(e.arg)
    return set()


# ---------------------------------------------------------------------------
# Parser: recursive descent over
#   expr   := ['+'|'-'] term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := atom ['^' exponent]
#   atom   := number | ident | ident '(' expr ')' | '(' expr ')'
# Numbers are nonnegative integer literals; decimals are rejected.
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+\.\d*|\.\d+)|(\d+)|([A-Za-z][A-Za-z0-9_]*)|([-+*/^()]))")
_VAR_RE = re.compile(r"^x(\d+)$")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                raise ParseError(f"unexpected character {text[pos]!r} at position {pos}")
            if m.group(1):
                raise ParseError(
                    f"decimal literal {m.group(1)!r} at position {m.start(1)}: "
                    "constants must be exact rationals"
                )
            if m.group(2):
                self.tokens.append(("num", m.group(2), m.start(2)))
            elif m.group(3):
                self.tokens.append(("ident", m.group(3), m.start(3)))
            else:
                self.tokens.append(("op", m.group(4), m.start(4)))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", "", len(self.text))

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, value, pos = self.next()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r} at position {pos}, got {value or kind!r}")


def parse(text: str, kernels: KernelRegistry | None = None) -> Expr:
    """Parse ``text`` into a canonical AST.

    Raises :class:`ParseError` with position info on bad syntax, and
    :class:`PositivityError` when ``sqrt`` is applied to an expression that
    is not a registered positive kernel.
    """
    toks = _Tokens(text)
    e = _parse_expr(toks, kernels)
    kind, value, pos = toks.peek()
    if kind != "eof":
        raise ParseError(f"trailing input {value!r} at position {pos}")
    return e


def _parse_expr(toks: _Tokens, kernels) -> Expr:
    sign = 1
    kind, value, _ = toks.peek()
    if kind == "op" and value in "+-":
        toks.next()
        sign = -1 if value == "-" else 1
    e = _parse_term(toks, kernels)
    if sign < 0:
        e = neg(e)
    while True:
        kind, value, _ = toks.peek()
        if kind == "op" and value in "+-":
            toks.next()
            rhs = _parse_term(toks, kernels)
            e = add(e, rhs if value == "+" else neg(rhs))
        else:
            return e


def _parse_term(toks: _Tokens, kernels) -> Expr:
    e = _parse_factor(toks, kernels)
    while True:
        kind, value, _ = toks.peek()
        if kind == "op" and value in "*/":
            toks.next()
            rhs = _parse_factor(toks, kernels)
            e = mul(e, rhs) if value == "*" else div(e, rhs, kernels)
        else:
            return e


def _parse_factor(toks: _Tokens, kernels) -> Expr:
    base = _parse_atom(toks, kernels)
    kind, value, _ = toks.peek()
    if kind == "op" and value == "^":
        toks.next()
        return pow_(base, _parse_exponent(toks), kernels)
    return base


def _parse_exponent(toks: _Tokens) -> Fraction:
    # Bare exponents are (signed) integers; rational exponents need parens,
    # so that x^3/36 keeps its conventional meaning (x^3)/36.
    kind, value, pos = toks.peek()
    parenthesized = kind == "op" and value == "("
    if parenthesized:
        toks.next()
    sign = 1
    kind, value, pos = toks.peek()
    if kind == "op" and value == "-":
        toks.next()
        sign = -1
    kind, value, pos = toks.next()
    if kind != "num":
        raise ParseError(f"expected integer exponent at position {pos}")
    num = int(value)
    den = 1
    if parenthesized:
        kind, value, _ = toks.peek()
        if kind == "op" and value == "/":
            toks.next()
            kind, value, pos = toks.next()
            if kind != "num":
                raise ParseError(f"expected exponent denominator at position {pos}")
            den = int(value)
        toks.expect_op(")")
    return Fraction(sign * num, den)


def _parse_atom(toks: _Tokens, kernels) -> Expr:
    kind, value, pos = toks.next()
    if kind == "num":
        return Const(Fraction(int(value)))
    if kind == "op" and value == "(":
        e = _parse_expr(toks, kernels)
        toks.expect_op(")")
        return e
    if kind == "ident":
        nkind, nvalue, _ = toks.peek()
        if nkind == "op" and nvalue == "(":
            if value not in _FUNCTIONS:
                raise ParseError(f"unknown identifier {value!r} at position {pos}")
            toks.next()
            arg = _parse_expr(toks, kernels)
            toks.expect_op(")")
            if value == "exp":
                return Exp(arg)
            if value == "sqrt":
                return sqrt(arg, kernels)
            if value == "Phi":
                return NormCdf(arg)
            return NormPdf(arg)
        m = _VAR_RE.match(value)
        if m:
            idx = int(m.group(1))
            if idx < 1:
                raise ParseError(f"invalid variable {value!r} at position {pos}")
            return Var(idx)
        return Sym(value)
    raise ParseError(f"unexpected token {value or kind!r} at position {pos}")


# ---------------------------------------------------------------------------
# Pretty printer.  Deterministic; parse(pretty_print(e)) is structurally
# equal to e for canonical ASTs.
# ---------------------------------------------------------------------------

def pretty_print(e: Expr) -> str:
    return _print(e, 0)


def _is_negative_leading(e: Expr) -> bool:
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, Mul) and e.factors and isinstance(e.factors[0], Const):
        return e.factors[0].value < 0
    return False


def _negated(e: Expr) -> Expr:
    return neg(e)


def _print(e: Expr, prec: int) -> str:
    # precedence: 0 sum, 1 product, 2 power, 3 atom
    if isinstance(e, Const):
        v = e.value
        s = str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        if (v < 0 or v.denominator != 1) and prec >= 1:
            return f"({s})" if prec >= 2 or v < 0 else s
        return s
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Exp):
        return f"exp({_print(e.arg, 0)})"
    if isinstance(e, NormCdf):
        return f"Phi({_print(e.arg, 0)})"
    if isinstance(e, NormPdf):
        return f"phi({_print(e.arg, 0)})"
    if isinstance(e, Add):
        first = e.terms[0]
        if _is_negative_leading(first):
            parts = ["-" + _print(_negated(first), 1)]
        else:
            parts = [_print(first, 1)]
        for t in e.terms[1:]:
            if _is_negative_leading(t):
                parts.append(" - " + _print(_negated(t), 1))
            else:
                parts.append(" + " + _print(t, 1))
        s = "".join(parts)
        return f"({s})" if prec >= 1 else s
    if isinstance(e, (Mul, Pow)):
        s = _print_product(e)
        if prec >= 2 or (prec >= 1 and s.startswith("-")):
            return f"({s})"
        return s
    raise ExprError(f"unprintable node {e!r}")


def _print_product(e: Expr) -> str:
    factors = list(e.factors) if isinstance(e, Mul) else [e]
    coeff = Fraction(1)
    num_parts: list[str] = []
    den_parts: list[str] = []
    for f in factors:
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Pow) and f.exponent < 0:
            den_parts.append(_print_power(f.base, -f.exponent))
        else:
            num_parts.append(_print_power(f.base, f.exponent) if isinstance(f, Pow) else _print(f, 1))
    sign = "-" if coeff < 0 else ""
    coeff = abs(coeff)
    if coeff.numerator != 1 or not num_parts:
        num_parts.insert(0, str(coeff.numerator))
    if coeff.denominator != 1:
        den_parts.insert(0, str(coeff.denominator))
    s = sign + "*".join(num_parts)
    for d in den_parts:
        s += "/" + d
    return s


def _print_power(base: Expr, q: Fraction) -> str:
    if q == 1:
        # only reached for denominator factors: base must bind tighter than /
        return _print(base, 2)
    if q == Fraction(1, 2):
        return f"sqrt({_print(base, 0)})"
    base_s = _print(base, 2)
    if q.denominator == 1:
        return f"{base_s}^{q.numerator}"
    return f"{base_s}^({q.numerator}/{q.denominator})"
