"""Second-order expansion machinery for smooth functions of power-means.

Given a statistic ``g`` over power-mean slots ``x1..xd``, this module builds
the normalized statistic (plain or studentized), its partial-derivative
table at the moment point, the four cumulant coefficients k12, k22, k31,
k41, the Edgeworth polynomials p1/p2, the Cornish-Fisher polynomials
p11/p21, the normalizing-constant adjustment, and the acceleration constant
for bias-corrected-accelerated bootstrap intervals.

The studentizing denominator is derived automatically from ``g``:
``h^2 = sum_{i,j<=d} dg/dx_i dg/dx_j (x_{i+j} - x_i x_j)``, the plug-in
covariance of the estimated influence components.  At the moment point this
equals the asymptotic variance, so the normalized statistic always has unit
first-order variance.

Coefficient evaluation runs in one of three value rings chosen by the
moment spec and the statistic: double precision for numeric specs, exact
normal forms for polynomial statistics over symbolic specs, and plain
expression arithmetic when transcendental primitives (Phi, phi, exp) make
normal forms unavailable (equality checks there are numeric-only).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Mapping, Union

from scipy.special import ndtri

from .algebra import (
    Bindings,
    NormalForm,
    TranscendentalResidueError,
    norm_cdf,
    norm_pdf,
    _to_nf,
    differentiate,
    eval_numeric,
    substitute,
)
from .expr import (
    Const,
    Expr,
    KernelRegistry,
    Sym,
    Var,
    ZERO,
    add as expr_add,
    arity,
    const,
    mul,
    pow_,
    sqrt,
    sub,
)
from .moments import MomentSpec, MomentTable, MomentOrderError, raw_moment

Value = Union[Expr, NormalForm, float]


class ModelError(Exception):
    """Invalid statistic model (zero variance, insufficient moments, ...)."""


class Mode(enum.Enum):
    NONSTUDENTIZED = "plain"
    STUDENTIZED = "studentized"

    @staticmethod
    def parse(text: str) -> "Mode":
        t = text.strip().lower()
        if t in ("plain", "nonstudentized", "non-studentized", "0"):
            return Mode.NONSTUDENTIZED
        if t in ("studentized", "s"):
            return Mode.STUDENTIZED
        raise ModelError(f"unknown mode {text!r}")


@dataclass
class StatModel:
    """A statistic g over d power-means plus its normalized function."""

    g: Expr
    d: int
    mode: Mode
    dims: int
    h2_expr: Expr  # squared studentizing function, over x1..x_{2d}
    g_at_mu: Value
    sigma_a: Value  # h at the moment point
    a_expr: Expr  # the normalized statistic over x1..x_dims
    deriv: dict[tuple[int, ...], Value]
    spec: MomentSpec
    params: dict[str, float]
    kernels: KernelRegistry

    @property
    def is_numeric(self) -> bool:
        return not self.spec.is_symbolic

    def table(self) -> MomentTable:
        return MomentTable(self.spec, self.dims)


def _sorted_tuples(dims: int, order: int):
    return combinations_with_replacement(range(1, dims + 1), order)


def _multiplicity(t: tuple[int, ...]) -> int:
    """Number of distinct orderings of a sorted index tuple."""
    from collections import Counter

    out = math.factorial(len(t))
    for c in Counter(t).values():
        out //= math.factorial(c)
    return out


def build_model(
    g: Expr,
    mode: Mode,
    spec: MomentSpec,
    d: int | None = None,
    params: Mapping[str, float] | None = None,
    kernels: KernelRegistry | None = None,
) -> StatModel:
    """Construct the normalized statistic and its derivative table.

    ``d`` may exceed arity(g) to embed the statistic in a higher-dimensional
    power basis (unused slots get zero derivatives).
    """
    params = dict(params or {})
    kernels = kernels or KernelRegistry()
    d0 = arity(g)
    if d0 < 1 and d is None:
        raise ModelError("statistic must depend on at least x1")
    d = d if d is not None else d0
    if d < max(d0, 1):
        raise ModelError(f"dimension override {d} below arity {d0}")
    dims = d if mode is Mode.NONSTUDENTIZED else 2 * d
    needed_K = max(2 * d, 4 * dims)
    if spec.K < needed_K:
        raise MomentOrderError(
            f"moment spec provides K={spec.K} but the model needs {needed_K}"
        )

    numeric = not spec.is_symbolic
    point_exprs: dict[int, Expr] = {}
    point_vals: dict[int, float] = {}
    for i in range(1, 2 * d + 1):
        r = raw_moment(spec, i)
        if numeric:
            point_vals[i] = float(r)  # type: ignore[arg-type]
        else:
            point_exprs[i] = r  # type: ignore[assignment]

    gi = {i: differentiate(g, i, kernels) for i in range(1, d + 1)}
    h2_terms = []
    for i in range(1, d + 1):
        if gi[i] == ZERO:
            continue
        for j in range(1, d + 1):
            if gi[j] == ZERO:
                continue
            h2_terms.append(
                mul(gi[i], gi[j], sub(Var(i + j), mul(Var(i), Var(j))))
            )
    if not h2_terms:
        raise ModelError("zero asymptotic variance: statistic has no slope")
    h2 = expr_add(*h2_terms)
    kernels.register(h2)

    env = Bindings(params, point_vals)
    if numeric:
        g_at_mu: Value = eval_numeric(g, env)
        h2_at_mu = eval_numeric(h2, env)
        if not (math.isfinite(h2_at_mu) and h2_at_mu > 0):
            raise ModelError(f"zero or invalid asymptotic variance {h2_at_mu}")
        sigma_a: Value = math.sqrt(h2_at_mu)
        g_mu_expr: Expr = Const(Fraction(float(g_at_mu)))
        h2_mu_expr: Expr | None = None  # numeric path divides by 1/sigma directly
    else:
        subs_map = {Var(i): point_exprs[i] for i in point_exprs}
        g_at_mu = substitute(g, subs_map, kernels)
        h2_at_mu = substitute(h2, subs_map, kernels)
        try:
            g_at_mu = _to_nf(g_at_mu).canonical().to_expr()
        except TranscendentalResidueError:
            pass
        try:
            nf_h2 = _to_nf(h2_at_mu).canonical()
            if nf_h2.is_zero:
                raise ModelError("zero asymptotic variance at the moment point")
            h2_at_mu = nf_h2.to_expr()
        except TranscendentalResidueError:
            pass  # transcendental variance: positivity is checked numerically
        kernels.register(h2_at_mu)
        sigma_a = sqrt(h2_at_mu, kernels)
        g_mu_expr = g_at_mu
        h2_mu_expr = h2_at_mu

    centered = sub(g, g_mu_expr)
    if mode is Mode.NONSTUDENTIZED:
        if numeric:
            a_expr = mul(centered, Const(Fraction(1.0 / sigma_a)))
        else:
            a_expr = mul(centered, pow_(h2_mu_expr, Fraction(-1, 2), kernels))
    else:
        a_expr = mul(centered, pow_(h2, Fraction(-1, 2), kernels))

    deriv_exprs: dict[tuple[int, ...], Expr] = {(): a_expr}
    for order in (1, 2, 3):
        for t in _sorted_tuples(dims, order):
            deriv_exprs[t] = differentiate(deriv_exprs[t[:-1]], t[-1], kernels)

    deriv: dict[tuple[int, ...], Value] = {}
    if numeric:
        for t, e in deriv_exprs.items():
            if t:
                deriv[t] = eval_numeric(e, env)
    else:
        subs_map = {Var(i): point_exprs[i] for i in point_exprs}
        for t, e in deriv_exprs.items():
            if t:
                deriv[t] = substitute(e, subs_map, kernels)

    return StatModel(
        g=g,
        d=d,
        mode=mode,
        dims=dims,
        h2_expr=h2,
        g_at_mu=g_at_mu,
        sigma_a=sigma_a,
        a_expr=a_expr,
        deriv=deriv,
        spec=spec,
        params=params,
        kernels=kernels,
    )


# ---------------------------------------------------------------------------
# Value rings
# ---------------------------------------------------------------------------

class _Ring:
    """Dispatch for float / NormalForm / Expr coefficient arithmetic."""

    def __init__(self, kind: str, kernels: KernelRegistry | None = None):
        self.kind = kind
        self.kernels = kernels

    def zero(self):
        if self.kind == "float":
            return 0.0
        if self.kind == "nf":
            return NormalForm.from_fraction(Fraction(0))
        return ZERO

    def is_zero(self, v) -> bool:
        if self.kind == "float":
            return v == 0.0
        if self.kind == "nf":
            return v.is_zero
        return v == ZERO

    def finish(self, v) -> Value:
        """Canonicalize for storage in results (symbolic values as Exprs)."""
        if self.kind == "nf":
            return v.canonical().to_expr()
        return v

    def sqrt32(self, v):
        """v^(3/2)."""
        if self.kind == "float":
            return v ** 1.5
        if self.kind == "nf":
            return v.pow(Fraction(3, 2))
        if self.kernels is not None:
            self.kernels.register(v)
        return pow_(v, Fraction(3, 2), self.kernels)

    def divide(self, a, b):
        if self.kind == "float":
            return a / b
        if self.kind == "nf":
            return a / b
        return a / b


def _model_ring(model: StatModel) -> tuple[_Ring, dict]:
    """Choose the value ring and build converted derivative lookups."""
    if model.is_numeric:
        return _Ring("float"), {t: float(v) for t, v in model.deriv.items()}
    try:
        memo: dict[int, NormalForm] = {}
        conv = {t: _to_nf_memo(v, memo) for t, v in model.deriv.items()}
        return _Ring("nf"), conv
    except TranscendentalResidueError:
        return _Ring("expr", model.kernels), dict(model.deriv)


def _to_nf_memo(e: Expr, memo: dict) -> NormalForm:
    key = id(e)
    hit = memo.get(key)
    if hit is not None:
        return hit
    from .expr import Add, Mul, Pow

    if isinstance(e, Add):
        out = _to_nf_memo(e.terms[0], memo)
        for t in e.terms[1:]:
            out = out + _to_nf_memo(t, memo)
    elif isinstance(e, Mul):
        out = _to_nf_memo(e.factors[0], memo)
        for f in e.factors[1:]:
            out = out * _to_nf_memo(f, memo)
    elif isinstance(e, Pow):
        out = _to_nf_memo(e.base, memo).pow(e.exponent)
    else:
        out = _to_nf(e)
    memo[key] = out
    return out


class _MomentView:
    """Ring-converted, memoized access to cross moments."""

    def __init__(self, table: MomentTable, ring: _Ring):
        self.table = table
        self.ring = ring
        self._cache: dict[tuple[int, ...], object] = {}
        self._nf_memo: dict[int, NormalForm] = {}

    def __call__(self, *indices: int):
        key = tuple(sorted(indices))
        got = self._cache.get(key)
        if got is None:
            raw = self.table.get(key)
            if self.ring.kind == "float":
                got = float(raw)  # type: ignore[arg-type]
            elif self.ring.kind == "nf":
                got = _to_nf_memo(raw, self._nf_memo)  # type: ignore[arg-type]
            else:
                got = raw
            self._cache[key] = got
        return got


@dataclass
class CumulantCoeffs:
    k12: Value
    k22: Value
    k31: Value
    k41: Value


def cumulant_coeffs(model: StatModel, spec: MomentSpec | None = None) -> CumulantCoeffs:
    """Symmetry-reduced evaluation of the four expansion coefficients.

    Derivative and moment symmetry are exploited through sorted-tuple
    lookups and vector/matrix contractions of the nested sums.
    """
    spec = spec or model.spec
    ring, a = _model_ring(model)
    M = _MomentView(MomentTable(spec, model.dims), ring)
    D = model.dims
    rng1 = range(1, D + 1)

    def a1(i):
        return a[(i,)]

    nonzero1 = [i for i in rng1 if not ring.is_zero(a1(i))]

    def _sum(terms):
        acc = None
        for t in terms:
            acc = t if acc is None else acc + t
        return acc if acc is not None else ring.zero()

    # B_j = sum_i a_i mu_ij
    B = {
        j: _sum(a1(i) * M(i, j) for i in nonzero1)
        for j in rng1
    }

    pairs = [(t, _multiplicity(t)) for t in _sorted_tuples(D, 2)]
    triples = [(t, _multiplicity(t)) for t in _sorted_tuples(D, 3)]
    quads = [(t, _multiplicity(t)) for t in _sorted_tuples(D, 4)]

    # sigma^2 of the normalized statistic (equals 1 in exact arithmetic)
    S2 = _sum(
        Fraction(m) * (a1(i) * a1(j) * M(i, j))
        for (i, j), m in pairs
        if not (ring.is_zero(a1(i)) or ring.is_zero(a1(j)))
    )

    k12 = Fraction(1, 2) * _sum(
        Fraction(m) * (a[t] * M(*t)) for t, m in pairs if not ring.is_zero(a[t])
    )

    k31_t1 = _sum(
        Fraction(m) * (a1(i) * a1(j) * a1(k) * M(i, j, k))
        for (i, j, k), m in triples
        if i in nonzero1 and j in nonzero1 and k in nonzero1
    )
    k31_t2 = _sum(
        Fraction(3 * m) * (a[t] * B[t[0]] * B[t[1]])
        for t, m in pairs
        if not ring.is_zero(a[t])
    )
    k31 = k31_t1 + k31_t2

    k22_t1 = _sum(
        a1(i) * _sum(
            Fraction(m) * (a[t] * M(i, t[0], t[1]))
            for t, m in pairs
            if not ring.is_zero(a[t])
        )
        for i in nonzero1
    )
    # N = a2 . M  (matrix product over pair lookups)
    N = {}
    for i in rng1:
        for j in rng1:
            N[(i, j)] = _sum(
                a[tuple(sorted((i, k)))] * M(k, j)
                for k in rng1
                if not ring.is_zero(a[tuple(sorted((i, k)))])
            )
    k22_t2 = Fraction(1, 2) * _sum(N[(i, j)] * N[(j, i)] for i in rng1 for j in rng1)
    k22_t3 = _sum(
        B[j] * _sum(
            Fraction(m) * (a[tuple(sorted((j,) + t))] * M(*t))
            for t, m in pairs
            if not ring.is_zero(a[tuple(sorted((j,) + t))])
        )
        for j in rng1
    )
    k22 = k22_t1 + k22_t2 + k22_t3

    k41_t1 = _sum(
        Fraction(m) * (a1(i) * a1(j) * a1(k) * a1(l) * M(i, j, k, l))
        for (i, j, k, l), m in quads
        if i in nonzero1 and j in nonzero1 and k in nonzero1 and l in nonzero1
    ) - Fraction(3) * (S2 * S2)
    T = {
        m_idx: _sum(
            Fraction(m) * (a1(j) * a1(k) * M(j, k, m_idx))
            for (j, k), m in pairs
            if j in nonzero1 and k in nonzero1
        )
        for m_idx in rng1
    }
    k41_t2 = Fraction(12) * _sum(
        a[tuple(sorted((l, m_idx)))] * B[l] * T[m_idx]
        for l in rng1
        for m_idx in rng1
        if not ring.is_zero(a[tuple(sorted((l, m_idx)))])
    )
    k41_t3 = Fraction(12) * _sum(
        a[tuple(sorted((k, l)))] * a[tuple(sorted((m_idx, o)))] * B[k] * B[m_idx] * M(l, o)
        for k in rng1
        for l in rng1
        if not ring.is_zero(a[tuple(sorted((k, l)))])
        for m_idx in rng1
        for o in rng1
        if not ring.is_zero(a[tuple(sorted((m_idx, o)))])
    )
    k41_t4 = Fraction(4) * _sum(
        Fraction(m) * (a[t] * B[t[0]] * B[t[1]] * B[t[2]])
        for t, m in triples
        if not ring.is_zero(a[t])
    )
    k41 = k41_t1 + k41_t2 + k41_t3 + k41_t4

    return CumulantCoeffs(
        k12=ring.finish(k12),
        k22=ring.finish(k22),
        k31=ring.finish(k31),
        k41=ring.finish(k41),
    )


def cumulant_coeffs_naive(model: StatModel, spec: MomentSpec | None = None) -> CumulantCoeffs:
    """Literal nested-loop reference evaluator of the coefficient formulas.

    Kept as an independent oracle for the symmetry-reduced implementation;
    intended for numeric specs (full six-deep loops).
    """
    spec = spec or model.spec
    ring, a = _model_ring(model)
    M = _MomentView(MomentTable(spec, model.dims), ring)
    D = model.dims
    rng1 = range(1, D + 1)

    def a_(*idx):
        return a[tuple(sorted(idx))]

    k12 = Fraction(1, 2) * sum(
        (a_(i, j) * M(i, j) for i in rng1 for j in rng1), start=ring.zero()
    )
    k22 = (
        sum((a_(i) * a_(j, k) * M(i, j, k) for i in rng1 for j in rng1 for k in rng1),
            start=ring.zero())
        + Fraction(1, 2) * sum(
            (a_(i, j) * a_(k, l) * M(i, k) * M(j, l)
             for i in rng1 for j in rng1 for k in rng1 for l in rng1),
            start=ring.zero())
        + sum(
            (a_(i) * a_(j, k, l) * M(i, j) * M(k, l)
             for i in rng1 for j in rng1 for k in rng1 for l in rng1),
            start=ring.zero())
    )
    k31 = (
        sum((a_(i) * a_(j) * a_(k) * M(i, j, k)
             for i in rng1 for j in rng1 for k in rng1), start=ring.zero())
        + 3 * sum(
            (a_(i) * a_(j) * a_(k, l) * M(i, k) * M(j, l)
             for i in rng1 for j in rng1 for k in rng1 for l in rng1),
            start=ring.zero())
    )
    k41 = (
        sum((a_(i) * a_(j) * a_(k) * a_(l) * (M(i, j, k, l) - 3 * (M(i, j) * M(k, l)))
             for i in rng1 for j in rng1 for k in rng1 for l in rng1),
            start=ring.zero())
        + 12 * sum(
            (a_(i) * a_(j) * a_(k) * a_(l, m) * M(i, l) * M(j, k, m)
             for i in rng1 for j in rng1 for k in rng1 for l in rng1 for m in rng1),
            start=ring.zero())
        + 12 * sum(
            (a_(i) * a_(j) * a_(k, l) * a_(m, o) * M(i, k) * M(j, m) * M(l, o)
             for i in rng1 for j in rng1 for k in rng1 for l in rng1
             for m in rng1 for o in rng1),
            start=ring.zero())
        + 4 * sum(
            (a_(i) * a_(j) * a_(k) * a_(l, m, o) * M(i, l) * M(j, m) * M(k, o)
             for i in rng1 for j in rng1 for k in rng1 for l in rng1
             for m in rng1 for o in rng1),
            start=ring.zero())
    )
    return CumulantCoeffs(
        k12=ring.finish(k12),
        k22=ring.finish(k22),
        k31=ring.finish(k31),
        k41=ring.finish(k41),
    )


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Poly:
    """Univariate polynomial with Expr or float coefficients, degree <= 5."""

    coeffs: tuple[Value, ...]  # coeffs[k] multiplies x^k

    @staticmethod
    def from_dict(d: Mapping[int, Value]) -> "Poly":
        deg = max(d, default=0)
        zero: Value = 0.0 if all(isinstance(v, float) for v in d.values()) else ZERO
        return Poly(tuple(d.get(k, zero) for k in range(deg + 1)))

    def coeff(self, k: int) -> Value:
        if k < len(self.coeffs):
            return self.coeffs[k]
        return 0.0 if self._numeric else ZERO

    @property
    def _numeric(self) -> bool:
        return all(isinstance(c, float) for c in self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(tuple(self.coeff(k) + other.coeff(k) for k in range(n)))

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        n = len(self.coeffs) + len(other.coeffs) - 1
        out: list[Value] = [None] * n  # type: ignore[list-item]
        for i, ci in enumerate(self.coeffs):
            for j, cj in enumerate(other.coeffs):
                term = ci * cj
                out[i + j] = term if out[i + j] is None else out[i + j] + term
        zero: Value = 0.0 if self._numeric and other._numeric else ZERO
        return Poly(tuple(zero if c is None else c for c in out))

    def scale(self, c: Value) -> "Poly":
        return Poly(tuple(coeff * c for coeff in self.coeffs))

    def dx(self) -> "Poly":
        if len(self.coeffs) <= 1:
            return Poly((0.0 if self._numeric else ZERO,))
        return Poly(tuple(Fraction(k) * self.coeffs[k] for k in range(1, len(self.coeffs))))

    def times_x(self) -> "Poly":
        zero: Value = 0.0 if self._numeric else ZERO
        return Poly((zero, *self.coeffs))

    def eval(self, x: float, bindings: Bindings | None = None) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            cv = c if isinstance(c, float) else float(
                eval_numeric(c, bindings or Bindings())
            )
            acc = acc * x + cv
        return acc

    def to_expr(self, variable: Expr | None = None) -> Expr:
        x = variable if variable is not None else Sym("x")
        terms = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            ce = c if isinstance(c, Expr) else Const(Fraction(float(c)))
            if ce == ZERO:
                continue
            terms.append(mul(ce, pow_(x, Fraction(k))))
        return expr_add(*terms) if terms else ZERO

    def simplified(self) -> "Poly":
        """Canonicalize symbolic coefficients through normal forms."""
        out = []
        for c in self.coeffs:
            if isinstance(c, Expr):
                try:
                    c = _to_nf(c).canonical().to_expr()
                except TranscendentalResidueError:
                    pass
            elif isinstance(c, NormalForm):
                c = c.canonical().to_expr()
            out.append(c)
        return Poly(tuple(out))


def _value_for_poly(v: Value) -> Value:
    if isinstance(v, NormalForm):
        return v.canonical().to_expr()
    return v


def edgeworth_polys(k: CumulantCoeffs) -> tuple[Poly, Poly]:
    """p1(x) = -(k12 + k31 (x^2-1)/6);
    p2(x) = -x ((k22+k12^2)/2 + (k41+4 k12 k31)(x^2-3)/24
            + k31^2 (x^4-10x^2+15)/72)."""
    k12 = _value_for_poly(k.k12)
    k22 = _value_for_poly(k.k22)
    k31 = _value_for_poly(k.k31)
    k41 = _value_for_poly(k.k41)
    c_a = Fraction(1, 2) * (k22 + k12 * k12)
    c_b = Fraction(1, 24) * (k41 + Fraction(4) * (k12 * k31))
    c_c = Fraction(1, 72) * (k31 * k31)
    p1 = Poly.from_dict({
        0: -(k12 - Fraction(1, 6) * k31),
        2: -(Fraction(1, 6) * k31),
    })
    p2 = Poly.from_dict({
        1: -(c_a - Fraction(3) * c_b + Fraction(15) * c_c),
        3: -(c_b - Fraction(10) * c_c),
        5: -c_c,
    })
    return p1.simplified(), p2.simplified()


def cornish_fisher_polys(p1: Poly, p2: Poly) -> tuple[Poly, Poly]:
    """p11 = -p1;  p21 = p1 p1' - x p1^2 / 2 - p2 (exact polynomial arithmetic)."""
    p11 = -p1
    p21 = (p1 * p1.dx()) - (p1 * p1).times_x().scale(Fraction(1, 2)) - p2
    return p11.simplified(), p21.simplified()


def scale_adjust(p1: Poly, p2: Poly, gamma: Fraction) -> tuple[Poly, Poly]:
    """Expansion of the statistic rescaled by (1 - gamma/n): p2 gains gamma*x."""
    gamma = Fraction(gamma)
    numeric = p1._numeric and p2._numeric
    bump = Poly.from_dict({1: float(gamma) if numeric else const(gamma)})
    return p1, (p2 + bump).simplified()


# ---------------------------------------------------------------------------
# Acceleration constant
# ---------------------------------------------------------------------------

@dataclass
class AccelResult:
    A_value: Value
    sigma3: Value
    a_over_sqrtn: Value  # divide by sqrt(n) at use time


def accel_constant(model: StatModel, spec: MomentSpec | None = None) -> AccelResult:
    """A = sum a_i a_j a_k mu_ijk over first derivatives; a = A/(6 sigma^3 sqrt(n))
    with sigma^2 = sum a_i a_j mu_ij from the same derivative set."""
    spec = spec or model.spec
    ring, a = _model_ring(model)
    M = _MomentView(MomentTable(spec, model.dims), ring)
    D = model.dims
    nonzero1 = [i for i in range(1, D + 1) if not ring.is_zero(a[(i,)])]
    if not nonzero1:
        raise ModelError("zero asymptotic variance in acceleration constant")

    def _sum(terms):
        acc = None
        for t in terms:
            acc = t if acc is None else acc + t
        return acc if acc is not None else ring.zero()

    S2 = _sum(
        Fraction(_multiplicity(t)) * (a[(t[0],)] * a[(t[1],)] * M(*t))
        for t in _sorted_tuples(D, 2)
        if t[0] in nonzero1 and t[1] in nonzero1
    )
    A = _sum(
        Fraction(_multiplicity(t)) * (a[(t[0],)] * a[(t[1],)] * a[(t[2],)] * M(*t))
        for t in _sorted_tuples(D, 3)
        if all(i in nonzero1 for i in t)
    )
    if ring.kind == "float" and (not math.isfinite(S2) or S2 <= 0):
        raise ModelError("zero asymptotic variance in acceleration constant")
    sigma3 = ring.sqrt32(S2)
    a_over = ring.divide(A, Fraction(6) * sigma3)
    return AccelResult(
        A_value=ring.finish(A),
        sigma3=ring.finish(sigma3),
        a_over_sqrtn=ring.finish(a_over),
    )


# ---------------------------------------------------------------------------
# CDF / quantile evaluation
# ---------------------------------------------------------------------------

def cdf_eval(
    p1: Poly,
    p2: Poly,
    bindings: Bindings | None,
    n: int,
    x: float,
    order: int = 2,
) -> float:
    """Phi(x) + n^{-1/2} p1(x) phi(x) + n^{-1} p2(x) phi(x), truncated at
    ``order``.  Raw value: not clipped or monotonized."""
    if n < 2:
        raise ModelError("n must be >= 2")
    if order not in (0, 1, 2):
        raise ModelError("order must be 0, 1 or 2")
    out = norm_cdf(float(x))
    if order >= 1:
        out += p1.eval(x, bindings) * norm_pdf(float(x)) / math.sqrt(n)
    if order >= 2:
        out += p2.eval(x, bindings) * norm_pdf(float(x)) / n
    return float(out)


def quantile_eval(
    p11: Poly,
    p21: Poly,
    bindings: Bindings | None,
    n: int,
    alpha: float,
) -> float:
    """Cornish-Fisher quantile w_alpha = z + n^{-1/2} p11(z) + n^{-1} p21(z)."""
    if not 0.0 < alpha < 1.0:
        raise ModelError("alpha must lie in (0, 1)")
    if n < 2:
        raise ModelError("n must be >= 2")
    z = float(ndtri(alpha))
    return z + p11.eval(z, bindings) / math.sqrt(n) + p21.eval(z, bindings) / n
