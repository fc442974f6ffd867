import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dinikkt import certify, convexity
from dinikkt.convexity import CONSISTENT, COUNTEREXAMPLE, INVEX, PSEUDOCONVEX, VectorFunction
from dinikkt.corpus import NONCONVEX_CASES, convex_samples, convex_suite
from dinikkt.exprcore import parse
from dinikkt.problem import problem_from_dict


def vf(*texts):
    return VectorFunction([parse(t) for t in texts], 1)


def along_difference(x_hat):
    return lambda x: (np.asarray(x) - np.asarray(x_hat))[None, :]


class TestSampledChecks:
    def test_square_is_consistent(self):
        rep = convexity.pseudoconvex_check(vf("x1^2"), [0.0], [[-1.0], [0.5], [2.0]],
                                           eta_candidates=along_difference([0.0]))
        assert rep.verdict == CONSISTENT
        np.testing.assert_array_equal(rep.eta_witnesses[(2.0,)], [2.0])

    def test_convex_pair_is_invex(self):
        F = vf("x1^2", "(x1 - 1)^2")
        rep = convexity.invex_check(F, [0.0], [[-1.0], [0.3], [1.5]],
                                    eta_candidates=along_difference([0.0]))
        assert rep.verdict == CONSISTENT

    @pytest.mark.parametrize("components,x_hat,samples", NONCONVEX_CASES)
    @pytest.mark.parametrize("check", [convexity.pseudoconvex_check, convexity.invex_check])
    def test_counterexamples_reverify(self, components, x_hat, samples, check):
        F = vf(*components)
        rep = check(F, x_hat, samples)
        assert rep.verdict == COUNTEREXAMPLE
        assert convexity.reverify_counterexample(rep, F, x_hat)
        d = rep.to_dict()
        assert d["counterexample"]["violations"]

    def test_cube_witness_values(self):
        rep = convexity.pseudoconvex_check(vf("x1^3"), [0.0], [[-1.0]])
        row = rep.counterexample["violations"][0]
        assert row["w_dot_D"] == pytest.approx(0.0, abs=1e-4)
        assert row["w_dot_dF"] == -1.0

    def test_reverify_rejects_consistent_report(self):
        rep = convexity.pseudoconvex_check(vf("x1^2"), [0.0], [[1.0]])
        assert not convexity.reverify_counterexample(rep, vf("x1^2"), [0.0])

    def test_slack_rules(self):
        assert convexity.violation_slack(INVEX, 1.0, 0.5, 0.0) == 0.5
        assert convexity.violation_slack(PSEUDOCONVEX, -1.0, -5.0, 1e-6) == -np.inf
        assert convexity.violation_slack(PSEUDOCONVEX, 0.0, -1.0, 0.0) == 1.0

    def test_w_samples(self):
        assert convexity.default_w_samples(2).shape == (3, 2)
        W = convexity.default_w_samples(7)
        assert W.shape == (64, 7) and np.all(W >= 0)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["x1^2", "abs(x1)", "exp(x1)", "x1^3", "-abs(x1)", "max(x1, 0)"]),
       st.floats(-1, 1), st.lists(st.floats(-2, 2), min_size=1, max_size=4))
def test_invex_implies_pseudoconvex(text, x_hat, xs):
    F = vf(text)
    samples = [[x] for x in xs]
    inv = convexity.invex_check(F, [x_hat], samples)
    pse = convexity.pseudoconvex_check(F, [x_hat], samples)
    if inv.verdict == CONSISTENT:
        assert pse.verdict == CONSISTENT


class TestConvexSuite:
    @pytest.mark.parametrize("case", convex_suite(), ids=lambda c: c["problem"].name)
    def test_consistent_with_difference_witness(self, case):
        p, xh = case["problem"], case["x_hat"]
        F = VectorFunction(p.functions, p.n)
        samples = convex_samples(p)
        for check in (convexity.invex_check, convexity.pseudoconvex_check):
            assert check(F, xh, samples, eta_candidates=along_difference(xh)).verdict == CONSISTENT

    @pytest.mark.parametrize("case", convex_suite(), ids=lambda c: c["problem"].name)
    def test_grid_bound_with_certificate(self, case):
        p, xh = case["problem"], case["x_hat"]
        out = certify.analyze(p, xh)
        np.testing.assert_allclose(out.best.lambdas, case["lambdas"], atol=1e-4)
        assert convexity.pourciau_verify(p, xh, out.best).passed

    def test_tampered_lambda_fails(self):
        case = convex_suite()[1]
        rep = convexity.pourciau_verify(case["problem"], case["x_hat"], [1.0, 3.0])
        assert not rep.passed
        assert rep.grid_min < rep.f_hat

    def test_scalar_example(self):
        p = problem_from_dict(dict(name="t", n=1, sense="min", objective="x1^2",
                                   inequalities=["x1 - 1"], domain={"lo": [-2], "hi": [2]}))
        rep = convexity.pourciau_verify(p, [0.0], [1.0, 0.0])
        assert rep.passed and rep.argmin[0] == 0.0

    def test_requires_min(self):
        p = problem_from_dict(dict(name="t", n=1, sense="max", objective="x1"))
        with pytest.raises(ValueError):
            convexity.pourciau_verify(p, [0.0], [1.0])
