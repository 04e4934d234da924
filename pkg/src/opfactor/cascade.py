"""Particular solutions built factor by factor from a factorization.

For P = Q1 Q2 the kernel chain gives two particular solutions of
P u = 0: u0 solving Q2 u0 = 0 and u1 solving Q2 u1 = v1, where v1
solves Q1 v1 = 0.  First order kernels come from an antiderivative
table when the integrand is tabulated, otherwise from a cumulative
Simpson quadrature; quasi-linear kernels use a separable closed form
when the coefficient shape permits, else a Runge-Kutta integration.

Integration constants are canonical: table antiderivatives carry no
constant term, numeric homogeneous solutions are normalized to value
one at the interval midpoint, and the inhomogeneous integral starts
at zero there.  Longer factor chains reduce to this routine by
cascading pairwise from the right.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (DomainError, QuadratureFailure, ShapeMismatch,
                     SingularLeadingCoefficient, StepCountTooSmall,
                     UnsupportedTemplate)
from .expr import (Const, DepVar, Div, Expr, Fun, IndepVar, Var, ZERO, ONE,
                   evaluate, expr_to_poly, is_constant, render, simplify)
from .operator import (DiffOperator, MatrixOperator, apply_to_expr,
                       expand_product, operator_from_jet)
from .conditions import FactorizationCandidate

MIN_STEPS = 16
_TINY = 1e-12


@dataclass(frozen=True)
class CascadeOptions:
    interval: tuple = (-1.0, 1.0)
    steps: int = 1024
    constant: Fraction = Fraction(1)
    residual_points: int = 32


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: values[i] is a float, or a tuple per component."""

    grid: tuple
    values: tuple


@dataclass(frozen=True)
class SolutionPiece:
    label: str
    form: "Expr | None"
    trajectory: "Trajectory | None"
    provenance: str  # closed-form | quadrature | rk4
    residual: float


@dataclass(frozen=True)
class CascadeSolution:
    """u0 and u1 solve P u = 0; v1 is the linking kernel element.

    Scalar cascades hold one piece per slot; system cascades hold a
    tuple of pieces, one per identity-column trajectory.  v1 and u1
    are None when only u0 was attempted (quasi-linear factors).
    """

    u0: object
    v1: object
    u1: object
    interval: tuple
    steps: int

    @property
    def pieces(self) -> tuple:
        out = []
        for slot in (self.u0, self.v1, self.u1):
            if slot is None:
                continue
            out.extend(slot if isinstance(slot, tuple) else (slot,))
        return tuple(out)


@dataclass(frozen=True)
class ResidualReport:
    max_relative: float
    symbolic_zero: bool
    per_point: tuple  # ((point, residual), ...)


# ---------------------------------------------------------------------------
# antiderivative table

def _linear_arg(e: Expr):
    """(a, b) with e = a x1 + b over the rationals, or None."""
    p = expr_to_poly(e)
    if p is None:
        return None
    a = b = Fraction(0)
    x = Var(IndepVar(1))
    for mono, c in p.items():
        if mono == ():
            b = c
        elif mono == ((x, 1),):
            a = c
        else:
            return None
    return a, b


def antiderivative(e: Expr):
    """Tabulated antiderivative along x1 with zero constant, or None.

    Table: polynomials, c/x1, exp(a x1 + b), sin and cos of a linear
    argument, and sums of those.
    """
    e = simplify(e)
    if e == ZERO:
        return ZERO
    x = Var(IndepVar(1))
    if isinstance(e, Div):
        den = expr_to_poly(e.den)
        num = expr_to_poly(e.num)
        if den is None or num is None or den.keys() != {((x, 1),)}:
            return None
        c = den[((x, 1),)]
        out = ZERO
        for mono, cn in num.items():
            if mono == ():
                out = out + Const(cn / c) * Fun("log", x)
            elif len(mono) == 1 and mono[0][0] == x:
                d = mono[0][1]
                out = out + Const(cn / (c * d)) * x ** d
            else:
                return None
        return simplify(out)
    p = expr_to_poly(e)
    if p is None:
        return None
    out = ZERO
    for mono, c in p.items():
        if mono == ():
            out = out + Const(c) * x
            continue
        if len(mono) != 1:
            return None
        atom, exp = mono[0]
        if atom == x:
            out = out + Const(c / (exp + 1)) * x ** (exp + 1)
            continue
        if not isinstance(atom, Fun) or exp != 1:
            return None
        arg = _linear_arg(atom.arg)
        if arg is None or arg[0] == 0:
            return None
        a = Const(1 / arg[0])
        if atom.name == "exp":
            out = out + Const(c) * a * atom
        elif atom.name == "sin":
            out = out - Const(c) * a * Fun("cos", atom.arg)
        elif atom.name == "cos":
            out = out + Const(c) * a * Fun("sin", atom.arg)
        else:
            return None
    return simplify(out)


# ---------------------------------------------------------------------------
# grids and quadrature

def _grid(interval, steps):
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError(f"empty interval ({a}, {b})")
    h = (b - a) / steps
    return tuple(a + i * h for i in range(steps + 1)), h


def _normalize_steps(steps: int) -> int:
    if steps < MIN_STEPS:
        raise StepCountTooSmall(f"{steps} steps; need at least {MIN_STEPS}")
    return steps + steps % 2


def _cumulative_simpson(vals, h):
    """Running integral from the left end on a uniform grid."""
    out = [0.0] * len(vals)
    if len(vals) == 2:
        out[1] = h * (vals[0] + vals[1]) / 2
        return out
    out[1] = h * (5 * vals[0] + 8 * vals[1] - vals[2]) / 12
    for i in range(2, len(vals)):
        out[i] = out[i - 2] + h * (vals[i - 2] + 4 * vals[i - 1] + vals[i]) / 3
    return out


def _eval_x(e: Expr, x: float, u: "float | None" = None) -> float:
    bind = {IndepVar(1): x}
    if u is not None:
        bind[DepVar(1)] = u
    return evaluate(e, bind)


def _sample(e: Expr, grid) -> list:
    try:
        return [_eval_x(e, x) for x in grid]
    except DomainError as err:
        raise QuadratureFailure(f"integrand not evaluable: {err}") from err


# ---------------------------------------------------------------------------
# scalar cascade

def _check_factor(Q: DiffOperator, grid, who: str):
    lead = Q.coeff(1, 1)
    if lead == ZERO:
        raise SingularLeadingCoefficient(f"{who} has no derivative slot")
    if not Q.linear:
        return
    for x in grid:
        if abs(_eval_x(lead, x)) <= _TINY:
            raise SingularLeadingCoefficient(
                f"leading coefficient of {who} vanishes near x1 = {x:.6g}")


def _kernel_piece(Q: DiffOperator, grid, h, label: str) -> SolutionPiece:
    """Solution of Q y = 0 for a linear first order factor."""
    ratio = simplify(Div(Q.coeff(0, 1), Q.coeff(1, 1)))
    prim = antiderivative(ratio)
    if prim is not None:
        form = simplify(Fun("exp", simplify(Const(Fraction(-1)) * prim)))
        return SolutionPiece(label, form, None, "closed-form", 0.0)
    vals = _sample(ratio, grid)
    acc = _cumulative_simpson(vals, h)
    mid = acc[len(acc) // 2]
    ys = tuple(math.exp(mid - a) for a in acc)
    return SolutionPiece(label, None, Trajectory(grid, ys), "quadrature", 0.0)


def _piece_values(piece: SolutionPiece, grid) -> list:
    if piece.trajectory is not None:
        return list(piece.trajectory.values)
    return _sample(piece.form, grid)


def cascade_ode(cand: FactorizationCandidate,
                opts: CascadeOptions = CascadeOptions()) -> CascadeSolution:
    """Particular solutions of P u = 0 for a scalar two-factor split."""
    Q1, Q2 = cand.factors
    if not isinstance(Q1, DiffOperator) or Q1.n != 1:
        raise ShapeMismatch("scalar cascade needs scalar factors over x1")
    if Q1.order != 1 or Q2.order != 1:
        raise ShapeMismatch("cascade factors must be first order")
    steps = _normalize_steps(opts.steps)
    grid, h = _grid(opts.interval, steps)
    P = operator_from_jet(expand_product([Q1, Q2]))
    if not (Q1.linear and Q2.linear):
        u0 = _quasilinear_u0(Q2, grid, h, opts)
        u0 = _with_residual(P, u0, opts)
        return CascadeSolution(u0, None, None, tuple(opts.interval), steps)
    _check_factor(Q2, grid, "Q2")
    _check_factor(Q1, grid, "Q1")
    u0 = _kernel_piece(Q2, grid, h, "u0")
    v1 = _kernel_piece(Q1, grid, h, "v1")
    u1 = _second_solution(Q2, u0, v1, grid, h)
    u0 = _with_residual(P, u0, opts)
    v1 = _with_residual(Q1, v1, opts)
    u1 = _with_residual(P, u1, opts)
    return CascadeSolution(u0, v1, u1, tuple(opts.interval), steps)


def _second_solution(Q2, u0, v1, grid, h) -> SolutionPiece:
    """u1 = u0 * W with W' = v1 / (b211 u0), so that Q2 u1 = v1."""
    b211 = Q2.coeff(1, 1)
    if u0.form is not None and v1.form is not None:
        integrand = simplify(Div(v1.form, b211 * u0.form))
        prim = antiderivative(integrand)
        if prim is not None:
            return SolutionPiece("u1", simplify(u0.form * prim),
                                 None, "closed-form", 0.0)
    u0v = _piece_values(u0, grid)
    v1v = _piece_values(v1, grid)
    b2v = _sample(b211, grid)
    vals = [v / (b * u) for v, b, u in zip(v1v, b2v, u0v)]
    acc = _cumulative_simpson(vals, h)
    mid = acc[len(acc) // 2]
    ys = tuple(u * (a - mid) for u, a in zip(u0v, acc))
    return SolutionPiece("u1", None, Trajectory(grid, ys), "quadrature", 0.0)


def _quasilinear_u0(Q2, grid, h, opts) -> SolutionPiece:
    """Kernel of a quasi-linear first order factor.

    Shape b201 = c u, b211 constant gives the separable closed form
    (b211/c) / (x1 + C); anything else integrates numerically.
    """
    b0, b1 = Q2.coeff(0, 1), Q2.coeff(1, 1)
    shape = _separable_shape(b0, b1)
    if shape is not None:
        c, alpha = shape
        form = simplify(Div(Const(alpha / c),
                            Var(IndepVar(1)) + Const(opts.constant)))
        return SolutionPiece("u0", form, None, "closed-form", 0.0)
    mid = len(grid) // 2

    def f(x, u):
        lead = _eval_x(b1, x, u)
        if abs(lead) <= _TINY:
            raise SingularLeadingCoefficient(
                f"leading coefficient vanishes at x1 = {x:.6g}")
        return -_eval_x(b0, x, u) * u / lead

    fwd = _rk4_scalar(f, grid[mid:], 1.0)
    bwd = _rk4_scalar(f, grid[mid::-1], 1.0)
    ys = tuple(list(reversed(bwd))[:-1] + fwd)
    return SolutionPiece("u0", None, Trajectory(grid, ys), "rk4", 0.0)


def _separable_shape(b0: Expr, b1: Expr):
    """(c, alpha) when b0 = c * u1 and b1 = alpha, both rational."""
    if not (isinstance(b1, Const) and b1.value != 0):
        return None
    p = expr_to_poly(b0)
    u = Var(DepVar(1))
    if p is None or set(p.keys()) != {((u, 1),)} or p[((u, 1),)] == 0:
        return None
    return p[((u, 1),)], b1.value


def _rk4_scalar(f, xs, y0: float) -> list:
    ys = [y0]
    for i in range(len(xs) - 1):
        x, y = xs[i], ys[-1]
        h = xs[i + 1] - x
        k1 = f(x, y)
        k2 = f(x + h / 2, y + h * k1 / 2)
        k3 = f(x + h / 2, y + h * k2 / 2)
        k4 = f(x + h, y + h * k3)
        ys.append(y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6)
    return ys


# ---------------------------------------------------------------------------
# residual verification

def _residual_grid(interval, count):
    a, b = float(interval[0]), float(interval[1])
    return [a + (b - a) * i / (count - 1) for i in range(count)]


def _with_residual(P: DiffOperator, piece: SolutionPiece,
                   opts: CascadeOptions) -> SolutionPiece:
    if piece.form is not None:
        rep = verify_solution(P, piece.form,
                              _residual_grid(opts.interval, opts.residual_points))
    else:
        rep = verify_solution(P, piece.trajectory)
    return SolutionPiece(piece.label, piece.form, piece.trajectory,
                         piece.provenance, rep.max_relative)


def verify_solution(P: DiffOperator, u, points=None) -> ResidualReport:
    """Residual report of P u against zero.

    Closed forms are differentiated symbolically; an identically zero
    residual is reported exactly.  Trajectories are differenced on
    their own grid.  `points` (tuples for n > 1) defaults to 32 values
    spanning [-1, 1] per axis for closed forms.
    """
    if isinstance(u, Trajectory):
        return _verify_trajectory(P, u)
    resid = apply_to_expr(P, u, {1: u})
    if resid == ZERO:
        return ResidualReport(0.0, True, ())
    if points is None:
        points = _residual_grid((-1.0, 1.0), 32)
    rows = []
    worst = 0.0
    for pt in points:
        coords = (pt,) if isinstance(pt, (int, float)) else tuple(pt)
        bind = {IndepVar(i + 1): float(c) for i, c in enumerate(coords)}
        scale = max(1.0, abs(evaluate(u, bind)))
        val = abs(evaluate(resid, bind)) / scale
        worst = max(worst, val)
        rows.append((coords, val))
    return ResidualReport(worst, False, tuple(rows))


def _verify_trajectory(P: DiffOperator, traj: Trajectory,
                       limit: int = 32) -> ResidualReport:
    if P.n != 1:
        raise UnsupportedTemplate("trajectory residuals are one dimensional")
    grid, vals = traj.grid, traj.values
    if len(grid) < 3:
        raise StepCountTooSmall("need at least three samples to difference")
    h = grid[1] - grid[0]
    sup = max(1.0, max(abs(v) for v in vals))
    inner = range(1, len(grid) - 1)
    idxs = sorted({inner[int(t * (len(inner) - 1) / max(1, limit - 1))]
                   for t in range(limit)})
    rows = []
    worst = 0.0
    for i in idxs:
        d = {0: vals[i],
             1: (vals[i + 1] - vals[i - 1]) / (2 * h),
             2: (vals[i + 1] - 2 * vals[i] + vals[i - 1]) / (h * h)}
        r = 0.0
        for dv, coeff in P.coeffs:
            r += _eval_x(coeff, grid[i], vals[i]) * d[dv.k]
        val = abs(r) / sup
        worst = max(worst, val)
        rows.append(((grid[i],), val))
    return ResidualReport(worst, False, tuple(rows))


# ---------------------------------------------------------------------------
# linear systems

def cascade_system_numeric(cand: FactorizationCandidate, interval=None,
                           opts: CascadeOptions = CascadeOptions()) -> CascadeSolution:
    """Columnwise particular solutions for a linear system split.

    Both kernels integrate from identity initial data at the left end
    by fixed-step fourth order Runge-Kutta; u1 rides along with its
    own v1 column so no interpolation is needed.  Residuals difference
    the expanded product on the grid and are expected O(h^2).
    """
    N1, N2 = cand.factors
    if not isinstance(N1, MatrixOperator):
        raise ShapeMismatch("system cascade needs matrix factors")
    if not (N1.linear and N2.linear):
        raise UnsupportedTemplate("system cascade supports linear factors only")
    if N1.n != 1:
        raise UnsupportedTemplate("system cascade integrates along one variable")
    if interval is None:
        interval = opts.interval
    steps = _normalize_steps(opts.steps)
    grid, h = _grid(interval, steps)
    m = N1.m
    a1 = _diag_leads(N1, grid, "N1")
    a2 = _diag_leads(N2, grid, "N2")
    b1 = _entry_table(N1)
    b2 = _entry_table(N2)

    def rhs_kernel(leads, b):
        def f(x, y):
            return tuple(
                -sum(_eval_x(b[p][q], x) * y[q] for q in range(m))
                / _eval_x(leads[p], x)
                for p in range(m))
        return f

    f1 = rhs_kernel(a1, b1)
    f2 = rhs_kernel(a2, b2)

    def f_pair(x, y):
        v, w = y[:m], y[m:]
        dv = f1(x, v)
        dw = tuple(
            (v[p] - sum(_eval_x(b2[p][q], x) * w[q] for q in range(m)))
            / _eval_x(a2[p], x)
            for p in range(m))
        return dv + dw

    M = _expanded_system(N1, N2)
    u0c, v1c, u1c = [], [], []
    for col in range(m):
        e = tuple(1.0 if p == col else 0.0 for p in range(m))
        zero = (0.0,) * m
        u0 = _rk4_vector(f2, grid, e)
        pair = _rk4_vector(f_pair, grid, e + zero)
        v1 = [y[:m] for y in pair]
        u1 = [y[m:] for y in pair]
        u0c.append(_system_piece(f"u0[{col + 1}]", grid, u0, M))
        v1c.append(_system_piece(f"v1[{col + 1}]", grid, v1, _factor_table(N1)))
        u1c.append(_system_piece(f"u1[{col + 1}]", grid, u1, M))
    return CascadeSolution(tuple(u0c), tuple(v1c), tuple(u1c),
                           (float(interval[0]), float(interval[1])), steps)


def _diag_leads(N: MatrixOperator, grid, who: str) -> list:
    leads = []
    for p in range(N.m):
        lead = N.entries[p][p].coeff(1, 1)
        if lead == ZERO:
            raise SingularLeadingCoefficient(
                f"diagonal entry ({p + 1},{p + 1}) of {who} has no derivative slot")
        for x in grid:
            if abs(_eval_x(lead, x)) <= _TINY:
                raise SingularLeadingCoefficient(
                    f"leading coefficient of {who}[{p + 1},{p + 1}] vanishes "
                    f"near x1 = {x:.6g}")
        leads.append(lead)
    return leads


def _entry_table(N: MatrixOperator) -> list:
    return [[N.entries[p][q].coeff(0, 1) for q in range(N.m)]
            for p in range(N.m)]


def _rk4_vector(f, xs, y0: tuple) -> list:
    ys = [tuple(y0)]
    add = lambda y, k, c: tuple(a + c * b for a, b in zip(y, k))
    for i in range(len(xs) - 1):
        x, y = xs[i], ys[-1]
        h = xs[i + 1] - x
        k1 = f(x, y)
        k2 = f(x + h / 2, add(y, k1, h / 2))
        k3 = f(x + h / 2, add(y, k2, h / 2))
        k4 = f(x + h, add(y, k3, h))
        ys.append(tuple(a + h * (p + 2 * q + 2 * r + s) / 6
                        for a, p, q, r, s in zip(y, k1, k2, k3, k4)))
    return ys


def _expanded_system(N1: MatrixOperator, N2: MatrixOperator) -> list:
    """Cellwise coefficient operators of the product, for residuals."""
    from .operator import matrix_expand_product
    cells = matrix_expand_product([N1, N2])
    return [[operator_from_jet(cells[p][q], component=q + 1)
             for q in range(N1.m)] for p in range(N1.m)]


def _factor_table(N: MatrixOperator) -> list:
    return [[N.entries[p][q] for q in range(N.m)] for p in range(N.m)]


def _system_piece(label, grid, vals, table) -> SolutionPiece:
    m = len(table)
    h = grid[1] - grid[0]
    sup = max(1.0, max(abs(c) for row in vals for c in row))
    worst = 0.0
    for i in range(1, len(grid) - 1):
        x = grid[i]
        for p in range(m):
            r = 0.0
            for q in range(m):
                d = {0: vals[i][q],
                     1: (vals[i + 1][q] - vals[i - 1][q]) / (2 * h),
                     2: (vals[i + 1][q] - 2 * vals[i][q] + vals[i - 1][q]) / (h * h)}
                for dv, coeff in table[p][q].coeffs:
                    r += _eval_x(coeff, x) * d[dv.k]
            worst = max(worst, abs(r) / sup)
    traj = Trajectory(tuple(grid), tuple(tuple(v) for v in vals))
    return SolutionPiece(label, None, traj, "rk4", worst)
