import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dinikkt import certify, dini
from dinikkt.certify import LAMBDA0_ONE, SUM_ONE, MultiplierCertificate, NoCertificate
from dinikkt.corpus import kkt_problems, non_optimal_points
from dinikkt.errors import InfeasibleCandidate
from dinikkt.problem import problem_from_dict

S = dini.StepSchedule()
AXES = np.array([[1.0], [-1.0]])


def problem(objective, inequalities=(), sense="max", n=1):
    return problem_from_dict(dict(name="t", n=n, sense=sense, objective=objective,
                                  inequalities=list(inequalities)))


def table(p, x, U=AXES):
    return certify.derivative_table(p, x, U, S, dini.perturbation_set(p.n, 0))


class TestActiveSet:
    def test_active(self):
        assert certify.active_set(problem("x1", ["x1"]), [0.0]).active == (1,)

    def test_inactive(self):
        act = certify.active_set(problem("x1", ["1 - x1^2"]), [0.0])
        assert act.active == () and act.inactive == (1,)

    def test_infeasible(self):
        with pytest.raises(InfeasibleCandidate) as info:
            certify.active_set(problem("x1", ["x1"]), [-1.0])
        assert info.value.violated == {"f1": -1.0}

    def test_min_convention(self):
        act = certify.active_set(problem("x1^2", ["x1 - 1"], sense="min"), [0.0])
        assert act.inactive == (1,)
        with pytest.raises(InfeasibleCandidate):
            certify.active_set(problem("x1^2", ["x1 - 1"], sense="min"), [2.0])


class TestTable:
    def test_linear_pair(self):
        t = table(problem("x1", ["-x1"]), [0.0])
        np.testing.assert_allclose(t.entries, [[1, -1], [-1, 1]], atol=1e-9)

    def test_concave_kink(self):
        t = table(problem("-abs(x1)"), [0.0])
        np.testing.assert_array_equal(t.entries[0], [-1.0, -1.0])

    def test_stationary_smooth(self):
        t = table(problem("x1^2"), [0.0])
        np.testing.assert_allclose(t.entries[0], [0.0, 0.0], atol=1e-6)
        assert t.smooth == (True,)

    def test_min_table_is_negated_upper(self):
        p = problem("abs(x1)", sense="min")
        t = table(p, [0.0])
        np.testing.assert_array_equal(t.entries[0], [1.0, 1.0])
        np.testing.assert_array_equal(t.signed[0], [-1.0, -1.0])


class TestAIndex:
    def test_linear_pair(self):
        p = problem("x1", ["-x1"])
        rep = certify.a_index(table(p, [0.0]), certify.active_set(p, [0.0]))
        assert rep.k == 1 and not rep.against_optimality
        np.testing.assert_array_equal(rep.witnesses[1], [-1.0])

    def test_tangent_constraint(self):
        p = problem("-x1^2", ["x1"])
        rep = certify.a_index(table(p, [0.0]), certify.active_set(p, [0.0]))
        assert rep.k == 1 and not rep.A_l_empty

    def test_empty_last_set(self):
        p = problem("x1", ["-abs(x1)"])
        rep = certify.a_index(table(p, [0.0]), certify.active_set(p, [0.0]))
        assert rep.A_l_empty and rep.k is None


class TestSlater:
    def test_single(self):
        p = problem("x1", ["x1"])
        w = certify.slater_witness(table(p, [0.0]), certify.active_set(p, [0.0]))
        np.testing.assert_array_equal(w, [1.0])

    def test_opposing_pair(self):
        p = problem("x1", ["x1", "-x1"])
        assert certify.slater_witness(table(p, [0.0]), certify.active_set(p, [0.0])) is None

    def test_vacuous(self):
        p = problem("-x1^2", ["1 - x1^2"])
        w = certify.slater_witness(table(p, [0.0]), certify.active_set(p, [0.0]))
        np.testing.assert_array_equal(w, [1.0])


class TestMultipliers:
    def _run(self, p, x, fn):
        t, act = table(p, x), certify.active_set(p, x)
        return fn(p, x, t, act), t, act

    def test_fritz_john_linear_pair(self):
        c, _, _ = self._run(problem("x1", ["-x1"]), [0.0], certify.fritz_john)
        assert isinstance(c, MultiplierCertificate) and c.normalization == SUM_ONE
        np.testing.assert_allclose(c.lambdas, [0.5, 0.5], atol=1e-9)
        assert c.stationarity_residual <= 1e-9

    def test_kkt_linear_pair(self):
        c, _, _ = self._run(problem("x1", ["-x1"]), [0.0], certify.kkt)
        assert c.normalization == LAMBDA0_ONE and c.lambdas[0] == 1.0
        np.testing.assert_allclose(c.lambdas, [1.0, 1.0], atol=1e-9)

    def test_tangent_constraint(self):
        c, _, _ = self._run(problem("-x1^2", ["x1"]), [0.0], certify.kkt)
        np.testing.assert_allclose(c.lambdas, [1.0, 0.0], atol=1e-6)

    def test_inactive_multiplier_is_exactly_zero(self):
        c, _, _ = self._run(problem("-x1^2", ["1 - x1^2"]), [0.0], certify.fritz_john)
        assert c.lambdas[1] == 0.0 and c.complementary_slackness_exact

    def test_unconstrained_min(self):
        p = problem("x1^2 + x2^2", ["x1 - 1"], sense="min", n=2)
        U = certify.default_directions(2, 0)
        c = certify.kkt(p, [0, 0], table(p, [0.0, 0.0], U), certify.active_set(p, [0.0, 0.0]))
        np.testing.assert_array_equal(c.lambdas, [1.0, 0.0])

    def test_non_optimal_point(self):
        c, _, _ = self._run(problem("x1", ["-x1"]), [-0.3], certify.fritz_john)
        assert isinstance(c, NoCertificate)
        np.testing.assert_array_equal(c.most_violating, [1.0])
        assert "NoCertificate" in c.to_dict()["result"]


class TestVerify:
    def test_round_trip(self):
        p = problem("x1", ["-x1"])
        t, act = table(p, [0.0]), certify.active_set(p, [0.0])
        rep = certify.verify_certificate(certify.fritz_john(p, [0.0], t, act), t, act)
        assert rep.all_passed and "linearity" in rep.checks

    def test_tampered_negative(self):
        p = problem("x1", ["-x1"])
        t, act = table(p, [0.0]), certify.active_set(p, [0.0])
        c = certify.fritz_john(p, [0.0], t, act)
        bad = MultiplierCertificate(np.array([1.5, -0.5]), SUM_ONE, c.stationarity_residual, True)
        assert "nonnegative" in certify.verify_certificate(bad, t, act).failed()

    def test_tampered_inactive(self):
        p = problem("-x1^2", ["1 - x1^2"])
        t, act = table(p, [0.0]), certify.active_set(p, [0.0])
        bad = MultiplierCertificate(np.array([0.5, 0.5]), SUM_ONE, 0.0, False)
        assert "complementary_slackness" in certify.verify_certificate(bad, t, act).failed()


class TestDirections:
    def test_count_and_axes(self):
        U = certify.default_directions(3, 5)
        assert U.shape == (max(6, 16) + 16, 3)
        np.testing.assert_array_equal(U[:6], dini.direction_set(3, 6, 0))
        np.testing.assert_allclose(np.linalg.norm(U, axis=1), 1.0, atol=1e-12)

    def test_one_dimension(self):
        np.testing.assert_array_equal(certify.default_directions(1, 5), AXES)


class TestAnalyze:
    @pytest.mark.parametrize("case", kkt_problems(), ids=lambda c: c["problem"].name)
    def test_corpus_optimum(self, case):
        out = certify.analyze(case["problem"], case["x_hat"])
        assert out.certified
        c = out.best
        assert c.stationarity_residual <= 1e-6
        assert c.complementary_slackness_exact
        assert out.verification.all_passed
        assert (out.slater is not None) == case["slater"]
        if case["lambdas"] is None:
            assert c.normalization == SUM_ONE
        else:
            assert c.normalization == LAMBDA0_ONE and c.lambdas[0] == 1.0
            np.testing.assert_allclose(c.lambdas, case["lambdas"], atol=1e-4)

    @pytest.mark.parametrize("p,x", non_optimal_points(), ids=lambda v: getattr(v, "name", ""))
    def test_non_optimal(self, p, x):
        assert not certify.analyze(p, x).certified

    def test_seed_determinism(self):
        case = kkt_problems()[6]
        a = certify.analyze(case["problem"], case["x_hat"], seed=3).best.lambdas
        b = certify.analyze(case["problem"], case["x_hat"], seed=3).best.lambdas
        np.testing.assert_array_equal(a, b)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_scaling_constraint_rescales_multiplier(a, c):
    # objective a*x1 with constraint -c*x1 >= 0 at 0: lambda_1 = a / c
    p = problem(f"{a!r}*x1", [f"-{c!r}*x1"])
    out = certify.analyze(p, [0.0])
    assert out.best.lambdas[1] == pytest.approx(a / c, rel=1e-6)
