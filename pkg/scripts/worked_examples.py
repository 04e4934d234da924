"""End-to-end tour: factor, verify, and solve a battery of operators.

Usage:
    python3 scripts/worked_examples.py

Walks the classic cases: a constant coefficient split, a variable
coefficient Riccati recovery, the wave operator, a Laplace rejection,
a repeated-root obligation, a quasi-linear kernel, and a first order
system cascade.  Everything printed is recomputed on the spot.
"""

from fractions import Fraction

from opfactor.cascade import CascadeOptions, cascade_ode, cascade_system_numeric
from opfactor.conditions import (
    CheckOptions,
    FactorizationCandidate,
    check_candidate,
)
from opfactor.errors import NoRealFactorization
from opfactor.expr import ONE, const, render, simplify, u_, x_
from opfactor.factor import factor_ode, factor_pde_second_order
from opfactor.operator import (
    MatrixOperator,
    expand_product,
    make_operator,
    operator_from_jet,
    render_jet,
)
from opfactor.parse import parse_expr


def E(text):
    return simplify(parse_expr(text))


def show_factor(P, cand):
    parts = []
    for Q in cand.factors:
        terms = []
        for (d, e) in Q.coeffs:
            if d.k == 0:
                terms.append(render(e))
            else:
                dee = "D" if Q.n == 1 else f"D{d.h}"
                c = render(e)
                if c == "1":
                    terms.append(dee)
                elif c == "-1":
                    terms.append(f"-{dee}")
                else:
                    terms.append(f"{c}*{dee}")
        joined = " + ".join(terms).replace("+ -", "- ")
        parts.append(f"({joined})")
    return " ".join(parts)


def banner(title):
    print()
    print(title)
    print("-" * len(title))


def constant_split():
    banner("u'' - 3u' + 2u: constant coefficient split")
    P = make_operator(1, 1, {(2, 1): ONE, (1, 1): const(-3), (0, 1): const(2)})
    found = factor_ode(P)
    for cand in found:
        rep = check_candidate(P, cand)
        print(f"  {show_factor(P, cand)}   check: "
              f"{'PASS' if rep.passed else 'FAIL'}")
    sol = cascade_ode(found[0])
    for piece in sol.pieces:
        print(f"  {piece.label} = {render(piece.form)}   residual {piece.residual:g}")


def riccati_split():
    banner("u'' - (x^2 + 1) u: polynomial Riccati recovery")
    P = make_operator(1, 1, {(2, 1): ONE, (0, 1): E("-x1^2 - 1")})
    found = factor_ode(P)
    for cand in found:
        rep = check_candidate(P, cand)
        print(f"  {show_factor(P, cand)}   check: "
              f"{'PASS' if rep.passed else 'FAIL'}")
    sol = cascade_ode(found[0])
    for piece in sol.pieces:
        form = render(piece.form) if piece.form is not None else "(sampled)"
        print(f"  {piece.label} = {form}   residual {piece.residual:g}")


def wave_split():
    banner("u_x1x1 - u_x2x2: wave operator")
    P = make_operator(2, 1, {(2, 1): ONE, (2, 4): const(-1)})
    res = factor_pde_second_order(P)
    print(f"  discriminant = {render(res.delta)}")
    for branch in res.branches:
        verdict = "ok" if branch.ok else f"residual {render(branch.residual)}"
        print(f"  sign {branch.sign:+d}: {show_factor(P, branch.candidate)}   {verdict}")


def laplace_rejection():
    banner("u_x1x1 + u_x2x2: no real split")
    P = make_operator(2, 1, {(2, 1): ONE, (2, 4): ONE})
    try:
        factor_pde_second_order(P)
        print("  unexpectedly factored")
    except NoRealFactorization as err:
        print(f"  NoRealFactorization: {err}")


def parabolic_obligation():
    banner("(D1 + D2)^2: repeated principal root leaves an obligation")
    P = make_operator(2, 1, {(2, 1): ONE, (2, 2): ONE, (2, 3): ONE, (2, 4): ONE})
    res = factor_pde_second_order(P)
    print(f"  obligation: {render(res.obligation.equation)} = 0")
    chk = res.obligation.check(E("0"))
    print(f"  Z = 0 completes it: {'yes' if chk.ok else 'no'}")
    print(f"  factors: {show_factor(P, chk.candidate)}")


def quasilinear_kernel():
    banner("u'' + u u' = (D)(D + u/2): quasi-linear kernel")
    Q1 = make_operator(1, 1, {(1, 1): ONE}, linear=False)
    Q2 = make_operator(1, 1, {(1, 1): ONE, (0, 1): E("(1/2)*u1")}, linear=False)
    cand = FactorizationCandidate((Q1, Q2))
    P = operator_from_jet(expand_product([Q1, Q2]))
    print(f"  expanded: {render_jet(expand_product([Q1, Q2]))}")
    sol = cascade_ode(cand, CascadeOptions(interval=(0.0, 1.0)))
    print(f"  u0 = {render(sol.u0.form)}   residual {sol.u0.residual:g}")


def system_cascade():
    banner("first order system split: RK4 cascade columns")
    d = make_operator(1, 2, {(1, 1): ONE})
    one = make_operator(1, 2, {(0, 1): ONE})
    two = make_operator(1, 2, {(0, 1): const(2)})
    zero = make_operator(1, 2, {})
    N1 = MatrixOperator(1, 2, ((d, one), (zero, d)))
    N2 = MatrixOperator(1, 2, ((d, zero), (two, d)))
    sol = cascade_system_numeric(FactorizationCandidate((N1, N2)), (0.0, 1.0),
                                 CascadeOptions(steps=1024))
    for piece in sol.pieces:
        end = piece.trajectory.values[-1]
        head = ", ".join(f"{v:.6f}" for v in end)
        print(f"  {piece.label}: u(1) = ({head})   residual {piece.residual:.3e}")


def main() -> int:
    constant_split()
    riccati_split()
    wave_split()
    laplace_rejection()
    parabolic_obligation()
    quasilinear_kernel()
    system_cascade()
    print()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
