"""Problem file parsing, validation, and canonical printing."""

import pathlib
from fractions import Fraction

import pytest

from opfactor.errors import ParseError, ValidationError
from opfactor.expr import ONE, const, simplify
from opfactor.parse import parse_expr
from opfactor.problemfile import parse_problem, print_problem

PROBLEMS = pathlib.Path(__file__).parent / "problems"


def E(text):
    return simplify(parse_expr(text))


SCALAR = """
[problem]
kind = linear-ode

[operator]
g[2,1] = "1"
g[1,1] = "-3"
g[0,1] = "2"

[Q1]
b[1,1] = "1"
b[0,1] = "-1"

[Q2]
b[1,1] = "1"
b[0,1] = "-2"

[solve]
interval = 0,1
steps = 256
constant = 2
"""


def test_parse_scalar_roundtrip():
    p = parse_problem(SCALAR)
    assert p.kind == "linear-ode"
    assert (p.n, p.m) == (1, 1)
    assert not p.is_system
    assert p.operator.coeff(1, 1) == const(-3)
    assert p.candidate is not None
    assert p.candidate.factors[0].coeff(0, 1) == const(-1)
    assert p.solve.interval == (0.0, 1.0)
    assert p.solve.steps == 256
    assert p.solve.constant == Fraction(2)
    again = parse_problem(print_problem(p))
    assert print_problem(again) == print_problem(p)


def test_parse_operator_only():
    text = '[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\ng[0,1] = "-x1"\n'
    p = parse_problem(text)
    assert p.candidate is None
    assert p.solve is None
    assert p.operator.coeff(0, 1) == E("-x1")


def test_comments_and_blank_lines_ignored():
    text = ('# leading comment\n[problem]\n# inside\nkind = linear-ode\n\n'
            '[operator]\ng[2,1] = "1"\n')
    assert parse_problem(text).kind == "linear-ode"


def test_all_fixture_files_parse_and_roundtrip():
    files = sorted(PROBLEMS.glob("*.ini"))
    assert len(files) >= 12
    for path in files:
        p = parse_problem(path.read_text())
        canon = print_problem(p)
        assert print_problem(parse_problem(canon)) == canon


def test_system_fixture_shape():
    p = parse_problem((PROBLEMS / "system-coupled.ini").read_text())
    assert p.is_system
    assert (p.n, p.m) == (1, 2)
    assert p.operator.entries[0][1].coeff(1, 1) == ONE
    assert p.candidate.is_matrix


def test_pde_fixture_shape():
    p = parse_problem((PROBLEMS / "pde2-wave.ini").read_text())
    assert p.n == 2
    assert p.operator.coeff(2, 4) == const(-1)


# ---------------------------------------------------------------------------
# validation errors


def bad(text):
    with pytest.raises(ValidationError) as info:
        parse_problem(text)
    return str(info.value)


def test_missing_problem_section():
    bad('[operator]\ng[2,1] = "1"\n')


def test_missing_operator_section():
    bad("[problem]\nkind = linear-ode\n")


def test_unknown_kind():
    msg = bad('[problem]\nkind = cubic\n\n[operator]\ng[2,1] = "1"\n')
    assert "cubic" in msg


def test_unknown_section():
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\n\n[Q3]\nb[1,1] = "1"\n')


def test_duplicate_key():
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\ng[2,1] = "2"\n')


def test_wrong_key_family_for_scalar():
    bad('[problem]\nkind = linear-ode\n\n[operator]\nf[1,1,2,1] = "1"\n')


def test_slot_out_of_range():
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[2,2] = "1"\n')
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[3,1] = "1"\n')


def test_missing_second_order_coefficient():
    msg = bad('[problem]\nkind = linear-ode\n\n[operator]\ng[1,1] = "1"\n')
    assert "second order" in msg


def test_linear_kind_rejects_dependent_coefficient():
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\ng[1,1] = "u1"\n')


def test_nonlinear_kind_accepts_dependent_coefficient():
    text = '[problem]\nkind = nonlinear-ode\n\n[operator]\ng[2,1] = "1"\ng[1,1] = "u1"\n'
    p = parse_problem(text)
    assert not p.operator.linear


def test_candidate_needs_both_factors():
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\n\n[Q1]\nb[1,1] = "1"\n')


def test_candidate_factors_must_be_first_order():
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\n\n'
        '[Q1]\nb[1,1] = "1"\n\n[Q2]\nb[2,1] = "1"\n')


def test_system_kind_needs_m():
    bad('[problem]\nkind = linear-ode-system\n\n[operator]\nf[1,1,2,1] = "1"\n')


def test_scalar_kind_rejects_system_sections():
    bad('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\n\n'
        '[N1]\na[1,1,1,1] = "1"\n\n[N2]\na[1,1,1,1] = "1"\n')


def test_solve_validation():
    base = '[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1"\n\n[solve]\n'
    bad(base + "interval = 1,0\n")
    bad(base + "interval = 1\n")
    bad(base + "steps = -4\n")
    bad(base + "steps = many\n")
    bad(base + "flavor = blue\n")


def test_unquoted_value_tolerated():
    # quotes are canonical but plain values parse too
    p = parse_problem('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = 1\n')
    assert p.operator.coeff(2, 1) == const(1)
    with pytest.raises(ParseError):
        parse_problem('[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1\n')


# ---------------------------------------------------------------------------
# parse errors carry positions


def test_bad_expression_position():
    text = '[problem]\nkind = linear-ode\n\n[operator]\ng[2,1] = "1 +"\n'
    with pytest.raises(ParseError) as info:
        parse_problem(text)
    assert "line 5" in str(info.value)


def test_structural_parse_error():
    with pytest.raises(ParseError):
        parse_problem("[problem\nkind = linear-ode\n")
    with pytest.raises(ParseError):
        parse_problem("[problem]\njust some words\n")
