import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dinikkt.lp import LinearSystem, LPUnbounded, lp_feasible, lp_solve
from dinikkt.oracle import lp_vertex_enumerate


def _random_system(rng, d_max=4):
    d = int(rng.integers(1, d_max + 1))
    m = int(rng.integers(1, 7))
    k = int(rng.integers(0, 2))
    return LinearSystem(d, A_ub=rng.normal(size=(m, d)), b_ub=rng.normal(size=m),
                        A_eq=rng.normal(size=(k, d)), b_eq=rng.normal(size=k),
                        nonneg=rng.random(d) < 0.5)


class TestFeasibility:
    def test_simplex_pair(self):
        sys = LinearSystem(2, A_ub=[[1, -1]], b_ub=[0], A_eq=[[1, 1]], b_eq=[1])
        res = lp_feasible(sys)
        assert res.feasible
        assert sys.max_violation(res.x) <= 1e-9
        assert res.x[0] <= res.x[1] + 1e-12

    def test_infeasible_pair(self):
        sys = LinearSystem(2, A_ub=[[1, 0]], b_ub=[-1], A_eq=[[1, 1]], b_eq=[1])
        res = lp_feasible(sys)
        assert not res.feasible
        assert res.x is None
        assert res.phase1_objective > 1e-9

    def test_equality_only(self):
        res = lp_feasible(LinearSystem(1, A_eq=[[1]], b_eq=[1]))
        assert res.feasible and res.x[0] == pytest.approx(1.0)

    def test_no_constraints(self):
        res = lp_feasible(LinearSystem(1))
        assert res.feasible
        np.testing.assert_array_equal(res.x, [0.0])

    def test_redundant_equalities(self):
        sys = LinearSystem(2, A_eq=[[1, 1], [2, 2]], b_eq=[1, 2])
        res = lp_feasible(sys)
        assert res.feasible and sys.max_violation(res.x) <= 1e-9

    def test_free_variable(self):
        sys = LinearSystem(1, A_ub=[[1]], b_ub=[-3], nonneg=[False])
        res = lp_feasible(sys)
        assert res.feasible and res.x[0] <= -3 + 1e-9

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            LinearSystem(2, A_ub=[[1, 0]], b_ub=[1, 2])
        with pytest.raises(ValueError):
            LinearSystem(2, nonneg=[True])


class TestOptimize:
    def test_minimax(self):
        # minimize r subject to |v - 0.3| <= r
        sys = LinearSystem(2, A_ub=[[1, -1], [-1, -1]], b_ub=[0.3, -0.3], nonneg=[False, True])
        res = lp_solve(sys, [0.0, 1.0])
        assert res.objective == pytest.approx(0.0, abs=1e-12)
        assert res.x[0] == pytest.approx(0.3)

    def test_vertex_optimum(self):
        sys = LinearSystem(2, A_ub=[[1, 1], [1, -1]], b_ub=[4, 2])
        res = lp_solve(sys, [-1.0, -2.0])
        np.testing.assert_allclose(res.x, [0.0, 4.0], atol=1e-12)
        assert res.objective == pytest.approx(-8.0)

    def test_unbounded(self):
        with pytest.raises(LPUnbounded):
            lp_solve(LinearSystem(1, A_ub=[[-1]], b_ub=[1]), [-1.0])
        with pytest.raises(LPUnbounded):
            lp_solve(LinearSystem(1), [-1.0])


class TestVertexOracle:
    def test_same_verdicts_on_examples(self):
        feasible = LinearSystem(2, A_ub=[[1, -1]], b_ub=[0], A_eq=[[1, 1]], b_eq=[1])
        infeasible = LinearSystem(2, A_ub=[[1, 0]], b_ub=[-1], A_eq=[[1, 1]], b_eq=[1])
        assert lp_vertex_enumerate(feasible).feasible
        assert not lp_vertex_enumerate(infeasible).feasible

    def test_size_limit(self):
        with pytest.raises(ValueError):
            lp_vertex_enumerate(LinearSystem(5))

    def test_cross_check_200(self):
        rng = np.random.default_rng(20240601)
        for _ in range(200):
            sys = _random_system(rng)
            a, b = lp_feasible(sys), lp_vertex_enumerate(sys)
            assert a.feasible == b.feasible
            if a.feasible:
                assert sys.max_violation(a.x) <= 1e-7


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_feasible_points_satisfy_system(seed):
    sys = _random_system(np.random.default_rng(seed), d_max=6)
    res = lp_feasible(sys)
    if res.feasible:
        assert sys.max_violation(res.x) <= 1e-7
    else:
        assert res.phase1_objective > 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_constructed_feasible_systems_are_found(seed):
    rng = np.random.default_rng(seed)
    d, m = int(rng.integers(1, 6)), int(rng.integers(1, 8))
    v = np.abs(rng.normal(size=d))
    A = rng.normal(size=(m, d))
    sys = LinearSystem(d, A_ub=A, b_ub=A @ v + rng.random(m))
    assert lp_feasible(sys).feasible
