"""Symbolic calculus and canonical forms on the expression language.

Provides exact differentiation (with built-in rules for ``exp``, ``Phi``,
``phi``), simultaneous substitution, double-precision evaluation (scalar or
numpy-array bindings), and a canonical :class:`NormalForm` for the
rational-with-square-root-kernels subclass.

A normal form is a fraction of two multivariate polynomials with exact
rational coefficients.  Square roots are adjoined as kernel generators
``s`` with the rewrite rule ``s^2 -> radicand``; denominators are kept
kernel-free (rationalized) and monic under a graded-lexicographic monomial
order with variables < symbols < kernels.  Radicand canonicalization pulls
out rational squares and even powers of positive atoms; it does not detect
perfect squares of general polynomials (nothing in this problem produces
them).

Expressions still containing ``exp``/``Phi``/``phi`` after substitution do
not normalize; equality checking for those falls back to comparison at
deterministic pseudo-random bindings and is reported as numeric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

import numpy as np

from .expr import (
    Add,
    Const,
    Exp,
    Expr,
    KernelRegistry,
    Mul,
    NormCdf,
    NormPdf,
    POSITIVE_SYMBOLS,
    Pow,
    Sym,
    Var,
    ZERO,
    ONE,
    add,
    free_symbols,
    mul,
    neg,
    pow_,
    pretty_print,
    sub,
)


class AlgebraError(Exception):
    """Base error for the algebra layer."""


class TranscendentalResidueError(AlgebraError):
    """normalize() hit an exp/Phi/phi node: transcendental residue."""


class EvalError(AlgebraError):
    """Numeric evaluation failed (unbound symbol, domain violation)."""


class DomainError(EvalError):
    """Negative base under fractional power, or division by zero."""


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expr, index: int, kernels: KernelRegistry | None = None) -> Expr:
    """Exact partial derivative with respect to ``x<index>``.

    Chain rules: d Phi(u) = phi(u) du, d phi(u) = -u phi(u) du,
    d exp(u) = exp(u) du.  Shared subtrees are differentiated once.
    """
    return _differentiate(e, index, kernels, {})


def _differentiate(e: Expr, index: int, kernels, memo: dict[int, Expr]) -> Expr:
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    out = _differentiate_node(e, index, kernels, memo)
    memo[id(e)] = out
    return out


def _differentiate_node(e: Expr, index: int, kernels, memo) -> Expr:
    if isinstance(e, (Const, Sym)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == index else ZERO
    if isinstance(e, Add):
        return add(*[_differentiate(t, index, kernels, memo) for t in e.terms])
    if isinstance(e, Mul):
        pieces = []
        for i, f in enumerate(e.factors):
            df = _differentiate(f, index, kernels, memo)
            if df != ZERO:
                pieces.append(mul(*e.factors[:i], df, *e.factors[i + 1:]))
        return add(*pieces)
    if isinstance(e, Pow):
        db = _differentiate(e.base, index, kernels, memo)
        if db == ZERO:
            return ZERO
        return mul(Const(e.exponent), pow_(e.base, e.exponent - 1, kernels), db)
    if isinstance(e, Exp):
        du = _differentiate(e.arg, index, kernels, memo)
        return ZERO if du == ZERO else mul(e, du)
    if isinstance(e, NormCdf):
        du = _differentiate(e.arg, index, kernels, memo)
        return ZERO if du == ZERO else mul(NormPdf(e.arg), du)
    if isinstance(e, NormPdf):
        du = _differentiate(e.arg, index, kernels, memo)
        return ZERO if du == ZERO else mul(neg(e.arg), e, du)
    raise AlgebraError(f"unsupported primitive for differentiation: {e!r}")


def differentiate_multi(e: Expr, indices: tuple[int, ...],
                        kernels: KernelRegistry | None = None) -> Expr:
    """Mixed partial; ``indices`` lists one variable index per derivative."""
    out = e
    for i in indices:
        out = differentiate(out, i, kernels)
    return out


# ---------------------------------------------------------------------------
# Substitution
# ---------------------------------------------------------------------------

def substitute(e: Expr, mapping: Mapping[Expr, Expr],
               kernels: KernelRegistry | None = None) -> Expr:
    """Simultaneous substitution of Sym/Var nodes; rebuilds canonically."""
    if not mapping:
        return e
    memo: dict[int, Expr] = {}

    def walk(node: Expr) -> Expr:
        key = id(node)
        got = memo.get(key)
        if got is not None:
            return got
        if isinstance(node, (Sym, Var)):
            out = mapping.get(node, node)
        elif isinstance(node, Add):
            out = add(*[walk(t) for t in node.terms])
        elif isinstance(node, Mul):
            out = mul(*[walk(f) for f in node.factors])
        elif isinstance(node, Pow):
            new_base = walk(node.base)
            if node.exponent.denominator == 2 and kernels is not None:
                # the original base passed the positivity gate; substitution
                # is mechanical, so its image stays a valid kernel
                kernels.register(new_base)
            out = pow_(new_base, node.exponent, kernels)
        elif isinstance(node, Exp):
            out = Exp(walk(node.arg))
        elif isinstance(node, NormCdf):
            out = NormCdf(walk(node.arg))
        elif isinstance(node, NormPdf):
            out = NormPdf(walk(node.arg))
        else:
            out = node
        memo[key] = out
        return out

    return walk(e)


# ---------------------------------------------------------------------------
# Numeric evaluation
# ---------------------------------------------------------------------------

Number = Union[float, np.ndarray]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Bindings:
    """Values for symbols (by name) and variables (by index).

    ``pi`` is bound automatically.  Values may be floats or numpy arrays;
    with array values, domain violations propagate as NaN instead of
    raising, so callers can count undefined draws.
    """

    syms: Mapping[str, Number] = field(default_factory=dict)
    vars: Mapping[int, Number] = field(default_factory=dict)


def norm_cdf(u: Number) -> Number:
    if isinstance(u, np.ndarray):
        from scipy.special import ndtr

        return ndtr(u)
    return 0.5 * math.erfc(-u / _SQRT2)


def norm_pdf(u: Number) -> Number:
    if isinstance(u, np.ndarray):
        return _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    return _INV_SQRT_2PI * math.exp(-0.5 * u * u)


def eval_numeric(e: Expr, b: Bindings) -> Number:
    """Evaluate to double precision.  Raises :class:`EvalError` for unbound
    symbols; :class:`DomainError` for scalar domain violations.  Shared
    subtrees are evaluated once per call."""
    return _eval(e, b, {})


def _eval(e: Expr, b: Bindings, memo: dict[int, Number]) -> Number:
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    out = _eval_node(e, b, memo)
    memo[id(e)] = out
    return out


def _eval_node(e: Expr, b: Bindings, memo: dict[int, Number]) -> Number:
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return b.syms[e.name]
        except KeyError:
            if e.name == "pi":
                return math.pi
            raise EvalError(f"unbound symbol {e.name!r}") from None
    if isinstance(e, Var):
        try:
            return b.vars[e.index]
        except KeyError:
            raise EvalError(f"unbound variable x{e.index}") from None
    if isinstance(e, Add):
        total = _eval(e.terms[0], b, memo)
        for t in e.terms[1:]:
            total = total + _eval(t, b, memo)
        return total
    if isinstance(e, Mul):
        prod = _eval(e.factors[0], b, memo)
        for f in e.factors[1:]:
            prod = prod * _eval(f, b, memo)
        return prod
    if isinstance(e, Pow):
        base = _eval(e.base, b, memo)
        q = e.exponent
        if isinstance(base, np.ndarray):
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.power(base, float(q))
        if q.denominator == 2 and base < 0:
            raise DomainError(f"negative base {base} under fractional power {q}")
        if base == 0 and q < 0:
            raise DomainError("division by zero")
        return float(base) ** float(q) if q.denominator == 2 else float(base) ** q.numerator
    if isinstance(e, Exp):
        u = _eval(e.arg, b, memo)
        return np.exp(u) if isinstance(u, np.ndarray) else math.exp(u)
    if isinstance(e, NormCdf):
        return norm_cdf(_eval(e.arg, b, memo))
    if isinstance(e, NormPdf):
        return norm_pdf(_eval(e.arg, b, memo))
    raise AlgebraError(f"unsupported primitive for evaluation: {e!r}")


# ---------------------------------------------------------------------------
# Multivariate polynomials over Q with square-root kernels
#
# Generators are tagged tuples:  (0, i) variable x_i, (1, name) symbol,
# (2, radicand_key) kernel.  A monomial is a tuple of (gen, exp) pairs
# sorted by generator; a polynomial maps monomials to Fraction coefficients.
# ---------------------------------------------------------------------------

Gen = tuple
Monomial = tuple
EMPTY_MONO: Monomial = ()


def _mono_key(m: Monomial):
    # graded lex: total degree first, then the sorted (gen, exp) sequence
    return (sum(e for _, e in m), m)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for g, e in m2:
        d[g] = d.get(g, 0) + e
    return tuple(sorted((g, e) for g, e in d.items() if e != 0))


def _mono_div(m1: Monomial, m2: Monomial) -> Monomial | None:
    d = dict(m1)
    for g, e in m2:
        r = d.get(g, 0) - e
        if r < 0:
            return None
        if r == 0:
            d.pop(g, None)
        else:
            d[g] = r
    return tuple(sorted(d.items()))


class MPoly:
    """Sparse multivariate polynomial with Fraction coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, Fraction] | None = None):
        self.terms = terms if terms is not None else {}

    @staticmethod
    def constant(c: Fraction) -> "MPoly":
        return MPoly({EMPTY_MONO: Fraction(c)}) if c != 0 else MPoly()

    @staticmethod
    def gen(g: Gen) -> "MPoly":
        return MPoly({((g, 1),): Fraction(1)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def copy(self) -> "MPoly":
        return MPoly(dict(self.terms))

    def __eq__(self, other) -> bool:
        return isinstance(other, MPoly) and self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def key(self) -> tuple:
        """Canonical hashable form (used as kernel radicand identity)."""
        return tuple(
            sorted((m, (c.numerator, c.denominator)) for m, c in self.terms.items())
        )

    @staticmethod
    def from_key(key: tuple) -> "MPoly":
        return MPoly({m: Fraction(n, d) for m, (n, d) in key})

    def __add__(self, other: "MPoly") -> "MPoly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, Fraction(0)) + c
            if s == 0:
                out.pop(m, None)
            else:
                out[m] = s
        return MPoly(out)

    def __neg__(self) -> "MPoly":
        return MPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "MPoly") -> "MPoly":
        return self + (-other)

    def scale(self, c: Fraction) -> "MPoly":
        if c == 0:
            return MPoly()
        return MPoly({m: v * c for m, v in self.terms.items()})

    def mono_scale(self, mono: Monomial, c: Fraction) -> "MPoly":
        out: dict[Monomial, Fraction] = {}
        for m, v in self.terms.items():
            out[_mono_mul(m, mono)] = v * c
        return MPoly(out)

    def __mul__(self, other: "MPoly") -> "MPoly":
        out = MPoly()
        if len(self.terms) > len(other.terms):
            a, bp = other, self
        else:
            a, bp = self, other
        for m1, c1 in a.terms.items():
            for m2, c2 in bp.terms.items():
                m = _mono_mul(m1, m2)
                reduced = _reduce_kernels(m, c1 * c2)
                out = out + reduced
        return out

    def __pow__(self, n: int) -> "MPoly":
        if n < 0:
            raise AlgebraError("negative polynomial power")
        result = MPoly.constant(Fraction(1))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def leading(self) -> tuple[Monomial, Fraction]:
        m = max(self.terms, key=_mono_key)
        return m, self.terms[m]

    def content(self) -> Fraction:
        """Positive rational content; sign carried by the leading coefficient."""
        if self.is_zero:
            return Fraction(1)
        from math import gcd

        num = 0
        den = 1
        for c in self.terms.values():
            num = gcd(num, abs(c.numerator))
            den = den * c.denominator // gcd(den, c.denominator)
        return Fraction(num, den)

    def divexact(self, g: "MPoly") -> "MPoly | None":
        """Exact quotient self/g, or None when g does not divide self."""
        if g.is_zero:
            raise AlgebraError("division by zero polynomial")
        if self.is_zero:
            return MPoly()
        gm, gc = g.leading()
        q: dict[Monomial, Fraction] = {}
        r = self.copy()
        while not r.is_zero:
            rm, rc = r.leading()
            mq = _mono_div(rm, gm)
            if mq is None:
                return None
            cq = rc / gc
            q[mq] = q.get(mq, Fraction(0)) + cq
            r = r - g.mono_scale(mq, cq)
        return MPoly(q)

    def has_kernels(self) -> bool:
        return any(g[0] == 2 for m in self.terms for g, _ in m)

    def gens(self) -> set[Gen]:
        return {g for m in self.terms for g, _ in m}


def _reduce_kernels(m: Monomial, c: Fraction) -> MPoly:
    """Rewrite kernel powers: s^2 -> radicand; merge distinct kernels."""
    kernel_items = [(g, e) for g, e in m if g[0] == 2]
    if not (any(e >= 2 for _, e in kernel_items) or len(kernel_items) >= 2):
        return MPoly({m: c})
    plain = tuple((g, e) for g, e in m if g[0] != 2)
    out = MPoly({plain: c})
    odd_gens: list[Gen] = []
    for g, e in kernel_items:
        half, odd = divmod(e, 2)
        if half:
            out = out * MPoly.from_key(g[1]) ** half  # radicands are kernel-free
        if odd:
            odd_gens.append(g)
    if len(odd_gens) == 1:
        out = out.mono_scale(((odd_gens[0], 1),), Fraction(1))
    elif len(odd_gens) > 1:
        rad = MPoly.from_key(odd_gens[0][1])
        for g in odd_gens[1:]:
            rad = rad * MPoly.from_key(g[1])
        coeff, mono, kern = _sqrt_poly(rad)
        out = out.mono_scale(_mono_mul(mono, kern), coeff)
    return out


def _rational_sqrt_split(v: Fraction) -> tuple[Fraction, int]:
    """v = out^2 * rad with rad a square-reduced positive integer."""
    from .expr import _split_square

    pa, pb = _split_square(v.numerator)
    qa, qb = _split_square(v.denominator)
    return Fraction(pa, qa * qb), pb * qb


def _gen_is_positive(g: Gen) -> bool:
    if g[0] == 0:
        return g[1] % 2 == 0  # even power-mean slots are positive
    if g[0] == 1:
        return g[1] in POSITIVE_SYMBOLS
    return True  # kernels denote the nonnegative root


def _sqrt_poly(p: MPoly) -> tuple[Fraction, Monomial, Monomial]:
    """sqrt of a kernel-free polynomial as (coeff, monomial, kernel-monomial).

    The value is ``coeff * monomial * sqrt(radicand)`` where the radicand is
    the content-times-primitive residual after extracting rational squares
    and even powers of positive generators.
    """
    if p.is_zero:
        raise AlgebraError("sqrt of zero polynomial")
    if p.has_kernels():
        raise AlgebraError("nested radical: sqrt of an expression already containing one")
    _, lead_c = p.leading()
    cont = p.content()
    if lead_c < 0:
        raise AlgebraError(f"sqrt of a polynomial with negative leading coefficient")
    prim = p.scale(1 / cont)  # integer coefficients, gcd 1, positive lead
    coeff, rad_const = _rational_sqrt_split(cont)
    # even-power extraction of positive generators present in every monomial
    extracted: list[tuple[Gen, int]] = []
    gens = prim.gens()
    for g in sorted(gens):
        if not _gen_is_positive(g):
            continue
        e_min = min(dict(m).get(g, 0) for m in prim.terms)
        if e_min >= 2:
            extracted.append((g, e_min // 2))
    if extracted:
        divisor = MPoly({tuple((g, 2 * h) for g, h in extracted): Fraction(1)})
        q = prim.divexact(divisor)
        assert q is not None
        prim = q
    mono = tuple(extracted)
    radicand = prim.scale(Fraction(rad_const))
    if radicand == MPoly.constant(Fraction(1)):
        return coeff, mono, EMPTY_MONO
    kernel_gen: Gen = (2, radicand.key())
    return coeff, mono, ((kernel_gen, 1),)


# ---------------------------------------------------------------------------
# Normal forms
# ---------------------------------------------------------------------------

class NormalForm:
    """Fraction of multivariate polynomials, kernel-free monic denominator.

    Arithmetic keeps forms lightly reduced (content/monomial cancellation,
    denominator-divisibility detection); :meth:`canonical` additionally
    cancels the full polynomial gcd so that equal expressions have identical
    normal forms.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: MPoly, den: MPoly | None = None, *, reduce: bool = True):
        if den is None:
            den = MPoly.constant(Fraction(1))
        if den.is_zero:
            raise AlgebraError("zero denominator")
        if den.has_kernels():
            num, den = _rationalize(num, den)
        self.num = num
        self.den = den
        if reduce:
            self._light_reduce()

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_fraction(c: Fraction) -> "NormalForm":
        return NormalForm(MPoly.constant(Fraction(c)))

    @staticmethod
    def sym(name: str) -> "NormalForm":
        return NormalForm(MPoly.gen((1, name)))

    @staticmethod
    def var(index: int) -> "NormalForm":
        return NormalForm(MPoly.gen((0, index)))

    # -- reductions --------------------------------------------------------

    def _light_reduce(self) -> None:
        num, den = self.num, self.den
        if num.is_zero:
            self.den = MPoly.constant(Fraction(1))
            return
        # common monomial factor
        shared: dict[Gen, int] = {}
        first = True
        for poly in (num, den):
            for m in poly.terms:
                d = dict(m)
                if first:
                    shared = d
                    first = False
                else:
                    shared = {g: min(e, d.get(g, 0)) for g, e in shared.items() if d.get(g, 0) > 0}
                if not shared:
                    break
        if shared:
            mono = tuple(sorted(shared.items()))
            divisor = MPoly({mono: Fraction(1)})
            num = num.divexact(divisor) or num
            den = den.divexact(divisor) or den
        # monic denominator
        _, lc = den.leading()
        if lc != 1:
            den = den.scale(1 / lc)
            num = num.scale(1 / lc)
        self.num, self.den = num, den

    def canonical(self) -> "NormalForm":
        """Fully cancelled form (polynomial gcd via sympy)."""
        if self.num.is_zero:
            return NormalForm(MPoly(), MPoly.constant(Fraction(1)), reduce=False)
        den = self.den
        if den == MPoly.constant(Fraction(1)):
            return self
        parts = _kernel_parts(self.num)
        g = _sympy_gcd_many([den, *parts.values()])
        if g is not None:
            qd = den.divexact(g)
            if qd is not None:
                qs = {k: p.divexact(g) for k, p in parts.items()}
                if all(v is not None for v in qs.values()):
                    num = MPoly()
                    for kmono, p in qs.items():
                        num = num + p.mono_scale(kmono, Fraction(1))  # type: ignore[union-attr]
                    return NormalForm(num, qd)
        return NormalForm(self.num, self.den)

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def __eq__(self, other) -> bool:
        if not isinstance(other, NormalForm):
            return NotImplemented
        diff = self - other
        if not diff.is_zero:
            return False
        return True

    def __hash__(self):
        c = self.canonical()
        return hash((c.num.key(), c.den.key()))

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other) -> "NormalForm":
        other = _as_nf(other)
        if self.den == other.den:
            return NormalForm(self.num + other.num, self.den)
        q = other.den.divexact(self.den)
        if q is not None:
            return NormalForm(self.num * q + other.num, other.den)
        q = self.den.divexact(other.den)
        if q is not None:
            return NormalForm(self.num + other.num * q, self.den)
        return NormalForm(self.num * other.den + other.num * self.den,
                          self.den * other.den)

    def __radd__(self, other) -> "NormalForm":
        return self.__add__(other)

    def __neg__(self) -> "NormalForm":
        return NormalForm(-self.num, self.den, reduce=False)

    def __sub__(self, other) -> "NormalForm":
        return self + (-_as_nf(other))

    def __rsub__(self, other) -> "NormalForm":
        return _as_nf(other) + (-self)

    def __mul__(self, other) -> "NormalForm":
        other = _as_nf(other)
        return NormalForm(self.num * other.num, self.den * other.den)

    def __rmul__(self, other) -> "NormalForm":
        return self.__mul__(other)

    def __truediv__(self, other) -> "NormalForm":
        return self * _as_nf(other).inverse()

    def __rtruediv__(self, other) -> "NormalForm":
        return _as_nf(other) * self.inverse()

    def inverse(self) -> "NormalForm":
        if self.num.is_zero:
            raise AlgebraError("division by zero normal form")
        return NormalForm(self.den, self.num)

    def pow(self, q: Fraction) -> "NormalForm":
        q = Fraction(q)
        if q.denominator == 1:
            n = q.numerator
            base = self if n >= 0 else self.inverse()
            n = abs(n)
            return NormalForm(base.num ** n, base.den ** n)
        if q.denominator != 2:
            raise AlgebraError(f"unsupported normal-form exponent {q}")
        k = (q.numerator - 1) // 2  # q = k + 1/2
        return self.pow(Fraction(k)) * self.sqrt()

    def sqrt(self) -> "NormalForm":
        # sqrt(num/den) = sqrt(num*den)/den; denominators arising here are
        # positive (powers of scale symbols and positive radicands)
        coeff, mono, kern = _sqrt_poly(self.num * self.den)
        return NormalForm(MPoly({_mono_mul(mono, kern): coeff}), self.den)

    # -- conversion --------------------------------------------------------

    def to_expr(self) -> Expr:
        num = _poly_to_expr(self.num)
        if self.den == MPoly.constant(Fraction(1)):
            return num
        return num / _poly_to_expr(self.den)

    def __repr__(self):
        return f"NormalForm({pretty_print(self.to_expr())})"


def _as_nf(v) -> NormalForm:
    if isinstance(v, NormalForm):
        return v
    if isinstance(v, (int, Fraction)):
        return NormalForm.from_fraction(Fraction(v))
    raise TypeError(f"cannot mix {v!r} with NormalForm")


def _rationalize(num: MPoly, den: MPoly) -> tuple[MPoly, MPoly]:
    """Clear kernel generators from the denominator (multiply by the odd part)."""
    kernel_gens = sorted({g for m in den.terms for g, e in m if g[0] == 2 and e % 2})
    if not kernel_gens:
        # only even kernel powers: reduction during multiplication clears them
        clear = MPoly.constant(Fraction(1))
    else:
        clear = MPoly({tuple((g, 1) for g in kernel_gens): Fraction(1)})
    num2 = num * clear
    den2 = den * clear
    if den2.has_kernels():
        raise AlgebraError("could not rationalize denominator")
    return num2, den2


def _kernel_parts(num: MPoly) -> dict[Monomial, MPoly]:
    """Split a numerator by its kernel monomial (each exponent is 0 or 1)."""
    parts: dict[Monomial, MPoly] = {}
    for m, c in num.terms.items():
        kmono = tuple((g, e) for g, e in m if g[0] == 2)
        plain = tuple((g, e) for g, e in m if g[0] != 2)
        parts.setdefault(kmono, MPoly())
        parts[kmono] = parts[kmono] + MPoly({plain: c})
    return parts


# -- sympy bridge for polynomial gcd ----------------------------------------

def _sympy_gcd_many(polys: list[MPoly]):
    import sympy

    gens = sorted({g for p in polys for g in p.gens()})
    if not gens:
        return None
    symbols = {g: sympy.Symbol(f"g{i}") for i, g in enumerate(gens)}

    def to_sympy(p: MPoly):
        total = sympy.Integer(0)
        for m, c in p.terms.items():
            term = sympy.Rational(c.numerator, c.denominator)
            for g, e in m:
                term *= symbols[g] ** e
            total += term
        return total

    acc = None
    for p in polys:
        sp = to_sympy(p)
        acc = sp if acc is None else sympy.gcd(acc, sp)
        if acc == 1:
            return None
    if acc is None or acc.is_number:
        return None
    poly = sympy.Poly(acc, *[symbols[g] for g in gens])
    out = MPoly()
    for powers, coeff in poly.terms():
        mono = tuple(
            (g, int(e)) for g, e in zip(gens, powers) if e
        )
        out = out + MPoly({tuple(sorted(mono)): Fraction(int(coeff.p), int(coeff.q))})
    return out


def _poly_to_expr(p: MPoly) -> Expr:
    if p.is_zero:
        return ZERO
    terms = []
    for m, c in sorted(p.terms.items(), key=lambda kv: _mono_key(kv[0]), reverse=True):
        factors: list[Expr] = [Const(c)]
        for g, e in m:
            factors.append(pow_(_gen_to_expr(g), Fraction(e)))
        terms.append(mul(*factors))
    return add(*terms)


def _gen_to_expr(g: Gen) -> Expr:
    if g[0] == 0:
        return Var(g[1])
    if g[0] == 1:
        return Sym(g[1])
    radicand = _poly_to_expr(MPoly.from_key(g[1]))
    return Pow(radicand, Fraction(1, 2))


# ---------------------------------------------------------------------------
# normalize / sym_equal
# ---------------------------------------------------------------------------

def _to_nf(e: Expr) -> NormalForm:
    if isinstance(e, Const):
        return NormalForm.from_fraction(e.value)
    if isinstance(e, Sym):
        return NormalForm.sym(e.name)
    if isinstance(e, Var):
        return NormalForm.var(e.index)
    if isinstance(e, Add):
        total = _to_nf(e.terms[0])
        for t in e.terms[1:]:
            total = total + _to_nf(t)
        return total
    if isinstance(e, Mul):
        prod = _to_nf(e.factors[0])
        for f in e.factors[1:]:
            prod = prod * _to_nf(f)
        return prod
    if isinstance(e, Pow):
        return _to_nf(e.base).pow(e.exponent)
    raise TranscendentalResidueError(
        f"transcendental residue: {type(e).__name__} node cannot be normalized"
    )


def normalize(e: Expr) -> NormalForm:
    """Canonical normal form; raises :class:`TranscendentalResidueError`
    when exp/Phi/phi nodes remain."""
    return _to_nf(e).canonical()


@dataclass(frozen=True)
class Comparison:
    equal: bool
    method: str  # "symbolic" | "numeric"


_NUMERIC_EQ_SEED = 20130415
_NUMERIC_EQ_TRIALS = 50
_NUMERIC_EQ_RTOL = 1e-9


def sym_compare(a: Expr, b: Expr) -> Comparison:
    """Symbolic equality when both sides normalize, else agreement at 50
    deterministic pseudo-random bindings (reported as numeric)."""
    try:
        return Comparison(_to_nf(sub(a, b)).is_zero, "symbolic")
    except TranscendentalResidueError:
        pass
    return Comparison(_numeric_agree(a, b), "numeric")


def sym_equal(a: Expr, b: Expr) -> bool:
    return sym_compare(a, b).equal


def random_bindings(e: Expr, rng: np.random.Generator) -> Bindings:
    """One random binding consistent with positivity flags."""
    syms = {}
    for name in sorted(free_symbols(e)):
        if name == "pi":
            continue  # reserved constant, bound automatically
        if name in POSITIVE_SYMBOLS:
            syms[name] = float(rng.uniform(0.5, 2.0))
        else:
            syms[name] = float(rng.uniform(-2.0, 2.0))
    from .expr import arity

    vars_ = {}
    for i in range(1, arity(e) + 1):
        if i % 2 == 0:
            vars_[i] = float(rng.uniform(0.5, 3.0))
        else:
            vars_[i] = float(rng.uniform(-1.5, 1.5))
    return Bindings(syms, vars_)


def _numeric_agree(a: Expr, b: Expr) -> bool:
    rng = np.random.default_rng(_NUMERIC_EQ_SEED)
    both = sub(a, b)
    hits = 0
    attempts = 0
    while hits < _NUMERIC_EQ_TRIALS and attempts < 40 * _NUMERIC_EQ_TRIALS:
        attempts += 1
        bind = random_bindings(both, rng)
        try:
            va = eval_numeric(a, bind)
            vb = eval_numeric(b, bind)
        except DomainError:
            continue
        if not (math.isfinite(va) and math.isfinite(vb)):
            continue
        hits += 1
        if abs(va - vb) > _NUMERIC_EQ_RTOL * max(1.0, abs(va), abs(vb)):
            return False
    if hits == 0:
        raise AlgebraError("could not find valid bindings for numeric comparison")
    return True
