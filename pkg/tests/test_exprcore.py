import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dinikkt.errors import DomainError, ExpressionSyntaxError, UnknownIdentifier
from dinikkt.exprcore import (BinOp, Call, Neg, Num, Var, evaluate, evaluate_many, grad_fd,
                              is_smooth, max_var_index, parse, to_text)


class TestParse:
    def test_abs_minus_variable(self):
        assert parse("abs(x1) - x2") == BinOp("-", Call("abs", (Var(1),)), Var(2))

    def test_binary_max_with_power(self):
        assert parse("max(x1, x2^2)") == Call("max", (Var(1), BinOp("^", Var(2), Num(2.0))))

    def test_syntax_error_offset(self):
        with pytest.raises(ExpressionSyntaxError) as info:
            parse("x1 + * 2")
        assert info.value.offset == 5

    def test_non_ascii_token(self):
        with pytest.raises(ExpressionSyntaxError) as info:
            parse("(x1 é")
        assert info.value.offset == 4

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifier) as info:
            parse("x1 + y")
        assert info.value.name == "y"
        assert info.value.offset == 5

    @pytest.mark.parametrize("text", ["x0", "max(x1)", "abs(x1, x2)", "(x1", "x1 x2", ""])
    def test_rejects(self, text):
        with pytest.raises((ExpressionSyntaxError, UnknownIdentifier)):
            parse(text)

    def test_power_binds_tighter_than_unary_minus(self):
        assert evaluate(parse("-2^2"), [0.0]) == -4.0
        assert evaluate(parse("-x1^2"), [3.0]) == -9.0

    def test_power_is_right_associative(self):
        assert evaluate(parse("2^3^2"), [0.0]) == 512.0
        assert evaluate(parse("2^-1"), [0.0]) == 0.5

    def test_constants(self):
        assert evaluate(parse("pi + e"), [0.0]) == math.pi + math.e

    def test_helpers(self):
        e = parse("abs(x3) + x1")
        assert max_var_index(e) == 3
        assert not is_smooth(e)
        assert is_smooth(parse("sin(x1)*exp(x2)"))


class TestEvaluate:
    def test_examples(self):
        assert evaluate(parse("abs(x1) - x2"), (-3, 1)) == 2.0
        assert evaluate(parse("max(x1, x2^2)"), (0.5, 2)) == 4.0

    @pytest.mark.parametrize("text,point", [
        ("log(x1)", (0.0,)),
        ("sqrt(x1)", (-1.0,)),
        ("1/x1", (0.0,)),
        ("x1^(-1)", (0.0,)),
        ("x1^0.5", (-4.0,)),
        ("exp(x1)", (1000.0,)),
    ])
    def test_domain_errors(self, text, point):
        with pytest.raises(DomainError):
            evaluate(parse(text), point)

    def test_lenient_batch_marks_nan(self):
        vals = evaluate_many(parse("log(x1)"), np.array([[1.0], [0.0], [-1.0]]), strict=False)
        assert vals[0] == 0.0
        assert np.isnan(vals[1:]).all()

    def test_dimension_check(self):
        with pytest.raises(ValueError):
            evaluate(parse("x2"), [1.0])

    def test_pure(self):
        e = parse("sin(x1)*exp(x2) - abs(x1 - x2)")
        a = evaluate(e, (0.3, -0.7))
        assert all(evaluate(e, (0.3, -0.7)) == a for _ in range(5))


class TestGradient:
    def test_quadratic(self):
        assert abs(grad_fd(parse("x1^2"), [3.0])[0] - 6.0) <= 1e-8

    def test_bilinear(self):
        np.testing.assert_allclose(grad_fd(parse("x1*x2"), [2.0, 5.0]), [5.0, 2.0], atol=1e-8)

    def test_exp(self):
        assert abs(grad_fd(parse("exp(x1)"), [0.0])[0] - 1.0) <= 1e-9

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=6, max_size=6),
           st.lists(st.floats(-10, 10), min_size=2, max_size=2))
    def test_quadratic_polynomials(self, c, p):
        text = (f"{c[0]!r}*x1^2 + {c[1]!r}*x1*x2 + {c[2]!r}*x2^2 + {c[3]!r}*x1 "
                f"+ {c[4]!r}*x2 + {c[5]!r}")
        g = grad_fd(parse(text), p)
        exact = np.array([2 * c[0] * p[0] + c[1] * p[1] + c[3],
                          c[1] * p[0] + 2 * c[2] * p[1] + c[4]])
        scale = 1.0 + np.abs(exact) + 10.0 * sum(abs(v) for v in c)
        assert np.all(np.abs(g - exact) <= 1e-7 * scale)


leaf = st.one_of(
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.integers(1, 3).map(Var),
)


def _trees(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["abs", "exp", "log", "sqrt", "sin", "cos"]), children)
          .map(lambda t: Call(t[0], (t[1],))),
        st.tuples(st.sampled_from(["min", "max"]), children, children)
          .map(lambda t: Call(t[0], (t[1], t[2]))),
    )


exprs = st.recursive(leaf, _trees, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_canonical_text_round_trips(e):
    assert parse(to_text(e)) == e
    assert parse(to_text(parse(to_text(e)))) == parse(to_text(e))
