"""Exact symbolic expressions over jet coordinates.

An expression is an immutable tree of Const, Var, Sum, Product, Power,
Div and Fun nodes with Fraction constants.  `simplify` rewrites any
tree into a canonical form: a fully distributed sum of terms
Const * product of atom powers, where an atom is a variable or an
opaque function application.  Quotients are combined over a common
denominator and surface as a single Div at the root; the zero test for
a quotient is therefore the zero test of its numerator.  Rational
normalization is best effort (constant content and common monomial
factors are cancelled), polynomial normalization is exact.

Variables come in four kinds: independent coordinates x^i, dependent
components u^j, jet coordinates u^j_(k)[h] for derivative slot (k, h),
and named coefficient symbols that are opaque functions of a declared
set of base coordinates.  Differentiation of an opaque symbol tags it
with the coordinate it was differentiated against, so symbolic
condition systems can be written without committing to concrete
coefficient functions.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError, UnboundVariable
from .jet import DerivIndex, compose_index, index_to_axes


# ---------------------------------------------------------------------------
# variable identities

@dataclass(frozen=True)
class IndepVar:
    """Independent coordinate x^index (1-based)."""

    index: int


@dataclass(frozen=True)
class DepVar:
    """Dependent component u^component (1-based)."""

    component: int


@dataclass(frozen=True)
class JetVar:
    """Jet coordinate: derivative slot `index` of component u^component.

    Order zero is represented by DepVar, never by a JetVar; use
    `jet_var` to construct whichever is canonical.
    """

    component: int
    index: DerivIndex

    def __post_init__(self):
        if self.index.k < 1:
            raise ValueError("order-0 jet coordinate must be a DepVar")


Coord = tuple[str, int]  # ('x', i) or ('u', j)


@dataclass(frozen=True)
class FuncSym:
    """Opaque named function of the coordinates listed in `deps`.

    `derivs` is the multiset (stored sorted) of coordinates the symbol
    has been differentiated against.  The family plus integer indices
    identify the symbol, e.g. ('b', (2, 0, 1)) for a factor coefficient.
    """

    family: str
    indices: tuple[int, ...]
    derivs: tuple[Coord, ...] = ()
    deps: tuple[Coord, ...] = ()

    def partial(self, coord: Coord) -> "FuncSym":
        return FuncSym(self.family, self.indices,
                       tuple(sorted(self.derivs + (coord,))), self.deps)


VarId = IndepVar | DepVar | JetVar | FuncSym


def jet_var(component: int, index: DerivIndex) -> VarId:
    """Canonical variable for a derivative slot; order 0 folds to DepVar."""
    if index.k == 0:
        return DepVar(component)
    return JetVar(component, index)


def _vid_key(v):
    if isinstance(v, IndepVar):
        return (0, v.index)
    if isinstance(v, DepVar):
        return (1, v.component, 0, 1)
    if isinstance(v, JetVar):
        return (1, v.component, v.index.k, v.index.h)
    return (3, v.family, v.indices, v.derivs, v.deps)


# ---------------------------------------------------------------------------
# expression nodes

class Expr:
    """Base class; arithmetic operators build unsimplified trees."""

    __slots__ = ()

    def __add__(self, other):
        other = _coerce(other)
        a = self.terms if isinstance(self, Sum) else (self,)
        b = other.terms if isinstance(other, Sum) else (other,)
        return Sum(a + b)

    def __radd__(self, other):
        return _coerce(other) + self

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __neg__(self):
        return Const(Fraction(-1)) * self

    def __mul__(self, other):
        other = _coerce(other)
        a = self.factors if isinstance(self, Product) else (self,)
        b = other.factors if isinstance(other, Product) else (other,)
        return Product(a + b)

    def __rmul__(self, other):
        return _coerce(other) * self

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, k):
        return Power(self, k)


@dataclass(frozen=True)
class Const(Expr):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Expr):
    vid: VarId


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValueError("Sum needs at least two terms")


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("Product needs at least two factors")


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    exp: int

    def __post_init__(self):
        if not isinstance(self.exp, int):
            raise ValueError("Power exponent must be an int")


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr


FUN_NAMES = ("exp", "log", "sin", "cos", "sqrt")


@dataclass(frozen=True)
class Fun(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUN_NAMES:
            raise ValueError(f"unknown function {self.name!r}")


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    raise TypeError(f"cannot coerce {x!r} to Expr")


def const(x) -> Const:
    return Const(Fraction(x))


def x_(i: int) -> Var:
    return Var(IndepVar(i))


def u_(j: int = 1) -> Var:
    return Var(DepVar(j))


# ---------------------------------------------------------------------------
# ordering

@lru_cache(maxsize=None)
def sort_key(e: Expr):
    if isinstance(e, Const):
        return (0, e.value)
    if isinstance(e, Var):
        return (1, _vid_key(e.vid))
    if isinstance(e, Fun):
        return (2, e.name, sort_key(e.arg))
    if isinstance(e, Power):
        return (3, sort_key(e.base), e.exp)
    if isinstance(e, Product):
        return (4, len(e.factors)) + tuple(sort_key(f) for f in e.factors)
    if isinstance(e, Div):
        return (5, sort_key(e.num), sort_key(e.den))
    return (6, len(e.terms)) + tuple(sort_key(t) for t in e.terms)


# ---------------------------------------------------------------------------
# polynomial normal form
#
# A poly is a dict {monomial: Fraction}; a monomial is a sorted tuple of
# (atom, exponent) pairs with atom a canonical Var or Fun expression and
# exponent >= 1.  The empty monomial is the constant term.

_ONE_POLY = {(): Fraction(1)}


def _mono_key(mono):
    return (sum(e for _, e in mono), tuple((sort_key(a), e) for a, e in mono))


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    acc = dict(m1)
    for a, e in m2:
        acc[a] = acc.get(a, 0) + e
    return _norm_mono(acc)


def _norm_mono(acc: dict):
    """Sort a monomial and merge its exp factors into a single atom."""
    exps = [(a, e) for a, e in acc.items() if isinstance(a, Fun) and a.name == "exp"]
    if exps:
        total = ZERO
        for a, e in exps:
            del acc[a]
            total = total + Const(Fraction(e)) * a.arg
        total = simplify(total)
        if total != ZERO:
            a = Fun("exp", total)
            acc[a] = acc.get(a, 0) + 1
    items = [(a, e) for a, e in acc.items() if e != 0]
    items.sort(key=lambda p: (sort_key(p[0]), p[1]))
    return tuple(items)


def _poly_add(p1, p2):
    if len(p1) < len(p2):
        p1, p2 = p2, p1
    out = dict(p1)
    for m, c in p2.items():
        s = out.get(m, Fraction(0)) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def _poly_mul(p1, p2):
    out = {}
    for m1, c1 in p1.items():
        for m2, c2 in p2.items():
            m = _mono_mul(m1, m2)
            c = c1 * c2
            # squared sqrt of a rational collapses to the rational
            changed = True
            while changed:
                changed = False
                for a, e in m:
                    if e >= 2 and isinstance(a, Fun) and a.name == "sqrt" \
                            and isinstance(a.arg, Const):
                        c *= a.arg.value ** (e // 2)
                        rest = [(b, f) for b, f in m if b is not a]
                        if e % 2:
                            rest.append((a, 1))
                        rest.sort(key=lambda p: (sort_key(p[0]), p[1]))
                        m = tuple(rest)
                        changed = True
                        break
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def _poly_pow(p, k):
    out = _ONE_POLY
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def _poly_scale(p, c: Fraction):
    if not c:
        return {}
    return {m: v * c for m, v in p.items()}


def _fun_atom(name: str, arg: Expr):
    """Canonicalize a function application; returns an Expr."""
    arg = simplify(arg)
    if name == "exp" and arg == ZERO:
        return ONE
    if name == "log" and arg == ONE:
        return ZERO
    if name == "sin" and arg == ZERO:
        return ZERO
    if name == "cos" and arg == ZERO:
        return ONE
    if name == "sqrt" and isinstance(arg, Const):
        if arg.value == 0:
            return ZERO
        if arg.value > 0:
            root = _fraction_sqrt(arg.value)
            if root is not None:
                return Const(root)
    return Fun(name, arg)


def _fraction_sqrt(q: Fraction):
    if q < 0:
        return None
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def _ratio(e: Expr):
    """Rewrite e as a pair of polys (num, den)."""
    if isinstance(e, Const):
        return ({(): e.value} if e.value else {}), _ONE_POLY
    if isinstance(e, Var):
        return {((e, 1),): Fraction(1)}, _ONE_POLY
    if isinstance(e, Fun):
        atom = _fun_atom(e.name, e.arg)
        if isinstance(atom, Const):
            return ({(): atom.value} if atom.value else {}), _ONE_POLY
        return {((atom, 1),): Fraction(1)}, _ONE_POLY
    if isinstance(e, Sum):
        num, den = {}, _ONE_POLY
        for t in e.terms:
            tn, td = _ratio(t)
            if td == den:
                num = _poly_add(num, tn)
            else:
                num = _poly_add(_poly_mul(num, td), _poly_mul(tn, den))
                den = _poly_mul(den, td)
        return num, den
    if isinstance(e, Product):
        num, den = _ONE_POLY, _ONE_POLY
        for f in e.factors:
            fn, fd = _ratio(f)
            num = _poly_mul(num, fn)
            den = _poly_mul(den, fd)
        return num, den
    if isinstance(e, Power):
        bn, bd = _ratio(e.base)
        if e.exp >= 0:
            return _poly_pow(bn, e.exp), _poly_pow(bd, e.exp)
        return _poly_pow(bd, -e.exp), _poly_pow(bn, -e.exp)
    if isinstance(e, Div):
        nn, nd = _ratio(e.num)
        dn, dd = _ratio(e.den)
        return _poly_mul(nn, dd), _poly_mul(nd, dn)
    raise TypeError(f"not an Expr: {e!r}")


def _poly_content(p):
    """gcd of the coefficients, carrying the sign of the leading term."""
    it = iter(p.values())
    g = abs(next(it))
    for c in it:
        g = Fraction(math.gcd(g.numerator, c.numerator),
                     math.lcm(g.denominator, c.denominator))
    lead = p[max(p, key=_mono_key)]
    return -g if lead < 0 else g


def _cancel(num, den):
    if not den:
        raise DomainError("division by a zero expression")
    if not num:
        return {}, _ONE_POLY
    if den == _ONE_POLY:
        return num, den
    if num == den:
        return dict(_ONE_POLY), _ONE_POLY
    # common monomial factor across every term of both polys
    common = None
    for p in (num, den):
        for m, _ in p.items():
            d = dict(m)
            if common is None:
                common = d
            else:
                common = {a: min(e, d[a]) for a, e in common.items() if a in d}
            if not common:
                break
    if common:
        shift = lambda m: tuple(sorted(
            ((a, e - common.get(a, 0)) for a, e in m if e - common.get(a, 0) > 0),
            key=lambda p: (sort_key(p[0]), p[1])))
        num = {shift(m): c for m, c in num.items()}
        den = {shift(m): c for m, c in den.items()}
    # pull exp factors out of a single-term denominator
    if len(den) == 1:
        (mono, c), = den.items()
        exps = [(a, e) for a, e in mono if isinstance(a, Fun) and a.name == "exp"]
        if exps:
            inv = _ONE_POLY
            for a, e in exps:
                neg = _fun_atom("exp", Const(Fraction(-e)) * a.arg)
                if neg != ONE:
                    inv = _poly_mul(inv, {((neg, 1),): Fraction(1)})
            num = _poly_mul(num, inv)
            mono = tuple((a, e) for a, e in mono
                         if not (isinstance(a, Fun) and a.name == "exp"))
            den = {mono: c}
    if len(den) == 1 and () in den:
        num = _poly_scale(num, 1 / den[()])
        return num, _ONE_POLY
    content = _poly_content(den)
    if content != 1:
        num = _poly_scale(num, 1 / content)
        den = _poly_scale(den, 1 / content)
    if num == den:
        return dict(_ONE_POLY), _ONE_POLY
    return num, den


def _term_expr(mono, c: Fraction) -> Expr:
    factors = []
    if c != 1 or not mono:
        factors.append(Const(c))
    for a, e in mono:
        factors.append(a if e == 1 else Power(a, e))
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def poly_to_expr(p) -> Expr:
    if not p:
        return ZERO
    monos = sorted(p, key=_mono_key, reverse=True)
    terms = tuple(_term_expr(m, p[m]) for m in monos)
    return terms[0] if len(terms) == 1 else Sum(terms)


@lru_cache(maxsize=1 << 18)
def simplify(e: Expr) -> Expr:
    """Canonical form: distributed polynomial, or Div of two of them."""
    num, den = _cancel(*_ratio(e))
    if den == _ONE_POLY:
        return poly_to_expr(num)
    if not num:
        return ZERO
    return Div(poly_to_expr(num), poly_to_expr(den))


def is_zero(e: Expr) -> bool:
    return simplify(e) == ZERO


def expr_to_poly(e: Expr):
    """Poly dict of a simplified polynomial expression; None if it has
    a denominator."""
    num, den = _cancel(*_ratio(e))
    if den != _ONE_POLY:
        return None
    return num


# ---------------------------------------------------------------------------
# differentiation

def diff(e: Expr, vid: VarId) -> Expr:
    """Partial derivative against one variable.

    Opaque symbols differentiate to tagged derivative symbols when the
    variable is among their declared base coordinates, else to zero.
    """
    return simplify(_diff(e, vid))


def _diff(e: Expr, vid) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        if e.vid == vid:
            return ONE
        if isinstance(e.vid, FuncSym):
            if isinstance(vid, IndepVar) and ("x", vid.index) in e.vid.deps:
                return Var(e.vid.partial(("x", vid.index)))
            if isinstance(vid, DepVar) and ("u", vid.component) in e.vid.deps:
                return Var(e.vid.partial(("u", vid.component)))
        return ZERO
    if isinstance(e, Sum):
        return Sum(tuple(_diff(t, vid) for t in e.terms))
    if isinstance(e, Product):
        terms = []
        for i, f in enumerate(e.factors):
            rest = e.factors[:i] + e.factors[i + 1:]
            terms.append(Product((_diff(f, vid),) + rest))
        return Sum(tuple(terms)) if len(terms) > 1 else terms[0]
    if isinstance(e, Power):
        return Const(Fraction(e.exp)) * Power(e.base, e.exp - 1) * _diff(e.base, vid)
    if isinstance(e, Div):
        return Div(_diff(e.num, vid) * e.den - e.num * _diff(e.den, vid),
                   Power(e.den, 2))
    if isinstance(e, Fun):
        da = _diff(e.arg, vid)
        if e.name == "exp":
            return Fun("exp", e.arg) * da
        if e.name == "log":
            return Div(da, e.arg)
        if e.name == "sin":
            return Fun("cos", e.arg) * da
        if e.name == "cos":
            return -(Fun("sin", e.arg) * da)
        return Div(da, Const(Fraction(2)) * Fun("sqrt", e.arg))
    raise TypeError(f"not an Expr: {e!r}")


def total_derivative(e: Expr, axis: int, n: int) -> Expr:
    """Total derivative along x^axis, prolonging through jet coordinates."""
    return simplify(_total(e, axis, n))


def _total(e: Expr, axis: int, n: int) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        v = e.vid
        if isinstance(v, IndepVar):
            return ONE if v.index == axis else ZERO
        if isinstance(v, DepVar):
            return Var(JetVar(v.component, DerivIndex(1, axis, n)))
        if isinstance(v, JetVar):
            return Var(JetVar(v.component, compose_index(axis, v.index)))
        parts = []
        if ("x", axis) in v.deps:
            parts.append(Var(v.partial(("x", axis))))
        for kind, j in v.deps:
            if kind == "u":
                parts.append(Var(v.partial(("u", j)))
                             * Var(JetVar(j, DerivIndex(1, axis, n))))
        if not parts:
            return ZERO
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))
    if isinstance(e, Sum):
        return Sum(tuple(_total(t, axis, n) for t in e.terms))
    if isinstance(e, Product):
        terms = []
        for i, f in enumerate(e.factors):
            rest = e.factors[:i] + e.factors[i + 1:]
            terms.append(Product((_total(f, axis, n),) + rest))
        return Sum(tuple(terms)) if len(terms) > 1 else terms[0]
    if isinstance(e, Power):
        return Const(Fraction(e.exp)) * Power(e.base, e.exp - 1) * _total(e.base, axis, n)
    if isinstance(e, Div):
        return Div(_total(e.num, axis, n) * e.den - e.num * _total(e.den, axis, n),
                   Power(e.den, 2))
    if isinstance(e, Fun):
        da = _total(e.arg, axis, n)
        if e.name == "exp":
            return Fun("exp", e.arg) * da
        if e.name == "log":
            return Div(da, e.arg)
        if e.name == "sin":
            return Fun("cos", e.arg) * da
        if e.name == "cos":
            return -(Fun("sin", e.arg) * da)
        return Div(da, Const(Fraction(2)) * Fun("sqrt", e.arg))
    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# substitution, variables, evaluation

def substitute(e: Expr, mapping: dict) -> Expr:
    return simplify(_subs(e, mapping))


def _subs(e: Expr, mapping: dict) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.vid, e)
    if isinstance(e, Sum):
        return Sum(tuple(_subs(t, mapping) for t in e.terms))
    if isinstance(e, Product):
        return Product(tuple(_subs(f, mapping) for f in e.factors))
    if isinstance(e, Power):
        return Power(_subs(e.base, mapping), e.exp)
    if isinstance(e, Div):
        return Div(_subs(e.num, mapping), _subs(e.den, mapping))
    return Fun(e.name, _subs(e.arg, mapping))


def expr_variables(e: Expr) -> set:
    out = set()
    _collect_vars(e, out)
    return out


def _collect_vars(e, out):
    if isinstance(e, Var):
        out.add(e.vid)
    elif isinstance(e, Sum):
        for t in e.terms:
            _collect_vars(t, out)
    elif isinstance(e, Product):
        for f in e.factors:
            _collect_vars(f, out)
    elif isinstance(e, Power):
        _collect_vars(e.base, out)
    elif isinstance(e, Div):
        _collect_vars(e.num, out)
        _collect_vars(e.den, out)
    elif isinstance(e, Fun):
        _collect_vars(e.arg, out)


def is_constant(e: Expr) -> bool:
    return not expr_variables(e)


def evaluate(e: Expr, bindings: dict) -> float:
    """Evaluate to a float; every variable must be bound."""
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(bindings[e.vid])
        except KeyError:
            raise UnboundVariable(f"no binding for {render(e)}") from None
    if isinstance(e, Sum):
        return sum(evaluate(t, bindings) for t in e.terms)
    if isinstance(e, Product):
        out = 1.0
        for f in e.factors:
            out *= evaluate(f, bindings)
        return out
    if isinstance(e, Power):
        base = evaluate(e.base, bindings)
        if e.exp < 0 and base == 0.0:
            raise DomainError("zero raised to a negative power")
        return base ** e.exp
    if isinstance(e, Div):
        den = evaluate(e.den, bindings)
        if den == 0.0:
            raise DomainError("division by zero")
        return evaluate(e.num, bindings) / den
    if isinstance(e, Fun):
        a = evaluate(e.arg, bindings)
        if e.name == "exp":
            if a > 700:
                raise DomainError("exp overflow")
            return math.exp(a)
        if e.name == "log":
            if a <= 0:
                raise DomainError("log of a non-positive number")
            return math.log(a)
        if e.name == "sin":
            return math.sin(a)
        if e.name == "cos":
            return math.cos(a)
        if a < 0:
            raise DomainError("square root of a negative number")
        return math.sqrt(a)
    raise TypeError(f"not an Expr: {e!r}")


# ---------------------------------------------------------------------------
# polynomial square root

def poly_sqrt(e: Expr):
    """Exact square root of a polynomial expression, or None.

    Works by peeling: take the square root of the leading term under
    graded lexicographic order, then repeatedly divide the residual's
    leading term by twice the partial root.
    """
    p = expr_to_poly(simplify(e))
    if p is None:
        return None
    if not p:
        return ZERO
    atoms = sorted({a for m in p for a, _ in m}, key=sort_key)
    slot = {a: i for i, a in enumerate(atoms)}

    def vec(mono):
        v = [0] * len(atoms)
        for a, exp in mono:
            v[slot[a]] = exp
        return (sum(v), tuple(v))

    lead = max(p, key=vec)
    c0 = p[lead]
    if c0 < 0:
        return None
    root_c = _fraction_sqrt(c0)
    if root_c is None or any(exp % 2 for _, exp in lead):
        return None
    root_mono = tuple((a, exp // 2) for a, exp in lead)
    root = {root_mono: root_c}
    rem = _poly_add(p, _poly_scale(_poly_mul(root, root), Fraction(-1)))
    for _ in range(10000):
        if not rem:
            return poly_to_expr(root)
        lead_r = max(rem, key=vec)
        t_mono = dict(lead_r)
        for a, exp in root_mono:
            t_mono[a] = t_mono.get(a, 0) - exp
            if t_mono[a] < 0:
                return None
        t_mono = tuple(sorted(((a, exp) for a, exp in t_mono.items() if exp),
                              key=lambda q: (sort_key(q[0]), q[1])))
        if vec(t_mono) >= vec(root_mono):
            return None
        t = {t_mono: rem[lead_r] / (2 * root_c)}
        #   rem -= t * (2*root + t)
        twice = _poly_add(_poly_scale(root, Fraction(2)), t)
        rem = _poly_add(rem, _poly_scale(_poly_mul(t, twice), Fraction(-1)))
        root = _poly_add(root, t)
    return None


# ---------------------------------------------------------------------------
# rendering

def _coord_text(c: Coord) -> str:
    return f"{c[0]}{c[1]}"


def render_vid(v: VarId) -> str:
    if isinstance(v, IndepVar):
        return f"x{v.index}"
    if isinstance(v, DepVar):
        return f"u{v.component}"
    if isinstance(v, JetVar):
        axes = index_to_axes(v.index)
        return f"u{v.component}_" + "".join(f"x{a}" for a in axes)
    name = v.family
    if v.indices:
        name += "[" + ",".join(str(i) for i in v.indices) + "]"
    if v.derivs:
        name += "_{" + ",".join(_coord_text(c) for c in v.derivs) + "}"
    return name


def render(e: Expr) -> str:
    """Human-readable text; grammar expressions parse back unchanged."""
    return _render(e, 0)


def _render(e: Expr, prec: int) -> str:
    # levels: 0 sum, 1 product/quotient, 2 power operand, 3 atom
    if isinstance(e, Const):
        v = e.value
        body = str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        if v < 0 and prec > 0:
            return f"({body})"
        if v.denominator != 1 and prec > 1:
            return f"({body})"
        return body
    if isinstance(e, Var):
        return render_vid(e.vid)
    if isinstance(e, Fun):
        return f"{e.name}({_render(e.arg, 0)})"
    if isinstance(e, Sum):
        parts = []
        for t in e.terms:
            txt = _render(t, 0)
            if parts:
                parts.append(" - " + txt[1:] if txt.startswith("-") else " + " + txt)
            else:
                parts.append(txt)
        body = "".join(parts)
        return f"({body})" if prec > 0 else body
    if isinstance(e, Product):
        neg = False
        factors = list(e.factors)
        if isinstance(factors[0], Const) and factors[0].value < 0:
            neg = True
            first = Const(-factors[0].value)
            factors = factors[1:] if first.value == 1 else [first] + factors[1:]
        body = "*".join(_render(f, 2) for f in factors) if factors else "1"
        if neg:
            body = "-" + body
        return f"({body})" if (prec > 1 or (neg and prec > 0)) else body
    if isinstance(e, Power):
        exp = str(e.exp) if e.exp >= 0 else f"({e.exp})"
        body = f"{_render(e.base, 3)}^{exp}"
        return body
    if isinstance(e, Div):
        body = f"{_render(e.num, 1)}/{_render(e.den, 2)}"
        return f"({body})" if prec > 1 else body
    raise TypeError(f"not an Expr: {e!r}")
