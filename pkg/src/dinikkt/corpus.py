"""Reference problems and functions with analytically known answers.

Every entry here was solved by hand; the test suite and ``selftest`` use
them as ground truth.
"""

from __future__ import annotations

import math

import numpy as np

from .oracle import Piecewise1D
from .problem import problem_from_dict

# combinations of abs/min/max with smooth parts, all in two variables
NONSMOOTH_EXPRESSIONS = (
    "abs(x1)",
    "abs(x1) + abs(x2)",
    "abs(x1 - x2)",
    "max(x1, x2)",
    "min(x1, x2)",
    "max(x1, -x2)",
    "-abs(x1) + x2",
    "abs(x1*x2)",
    "max(x1^2, x2)",
    "min(x1^2 + x2, 1 - x1)",
    "abs(sin(x1)) + x2^2",
    "max(abs(x1), abs(x2))",
    "min(abs(x1), abs(x2))",
    "abs(x1) - abs(x2)",
    "max(x1 + x2, 0)",
    "max(min(x1, x2), 0.5*x1)",
    "abs(x1 - x2^2)",
    "exp(abs(x1))",
    "x1*abs(x2)",
    "max(x1, x2) - min(x1, x2)",
    "abs(abs(x1) - 1)",
    "max(cos(x1), x2)",
    "min(exp(x1), 1 + x2)",
    "abs(x1 + 2*x2) - x1^2",
    "max(x1, max(x2, -x1 - x2))",
    "-max(x1^2, x2^2)",
    "-abs(x1 - 1) - abs(x2)",
)

NONSMOOTH_POINTS = (
    (0.0, 0.0),
    (0.5, 0.5),
    (1.0, 0.0),
    (0.0, -1.0),
    (0.3, -0.2),
    (1.0, 1.0),
)

# (expression, point) pairs with moderate curvature
SMOOTH_FUNCTIONS = (
    ("x1^2 + 3*x2", (1.0, 2.0)),
    ("sin(x1)*cos(x2)", (0.3, -0.4)),
    ("exp(x1 - x2)", (0.1, 0.2)),
    ("log(1 + x1^2 + x2^2)", (0.5, 0.5)),
    ("sqrt(1 + x1^2 + 2*x2^2)", (0.4, -0.3)),
    ("x1*x2 - x2^3/3", (1.0, 0.5)),
    ("(x1 - 1)^2*(x2 + 2)", (0.2, 0.1)),
    ("x1/(1 + x2^2)", (0.7, 0.3)),
    ("cos(x1 + 2*x2)", (0.25, -0.5)),
    ("2*x1 - 5*x2 + 1", (3.0, -1.0)),
)

# one-dimensional kinks: (expression, breakpoint, left slope, right slope)
KINKS_1D = (
    ("abs(x1)", 0.0, -1.0, 1.0),
    ("-abs(x1)", 0.0, 1.0, -1.0),
    ("max(x1, 2*x1)", 0.0, 1.0, 2.0),
    ("min(x1, -3*x1)", 0.0, 1.0, -3.0),
    ("abs(x1 - 1) + 0.5*x1", 1.0, -0.5, 1.5),
    ("max(0, x1)", 0.0, 0.0, 1.0),
    ("abs(2*x1 + 1)", -0.5, -2.0, 2.0),
    ("2*x1", 0.3, 2.0, 2.0),
)

KINK_DIRECTIONS = (1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 0.0)


def kink_cases():
    """``(expression, breakpoint, Piecewise1D)`` triples."""
    return [(e, x0, Piecewise1D(x0, a, b)) for e, x0, a, b in KINKS_1D]


# families for the pointwise max/min exchange identity
EXCHANGE_FAMILIES = (
    (("x1", "-x1"), (0.0, 0.0)),
    (("abs(x1)", "2*x1"), (0.0, 0.0)),
    (("x1^2",), (0.0, 0.0)),
    (("x1^2", "x2"), (0.0, 0.0)),
    (("abs(x1 - x2)", "x1 + x2"), (0.5, 0.5)),
    (("max(x1, x2)", "min(x1, x2)"), (0.0, 0.0)),
    (("sin(x1)", "cos(x2)"), (0.2, 0.1)),
    (("-abs(x2)", "x1*x2", "x1 - x2"), (0.0, 0.0)),
)


def _p(**kw):
    return problem_from_dict(kw)


def kkt_problems():
    """Inequality problems at their analytic optimum.

    Each entry: ``problem``, ``x_hat``, ``lambdas`` (expected KKT
    multipliers, or None when only a Fritz-John certificate exists),
    ``slater`` (whether a Slater witness should be found).
    """
    return [
        dict(problem=_p(name="linear pair", n=1, sense="max", objective="x1",
                        inequalities=["-x1"], domain={"lo": [-1], "hi": [1]}),
             x_hat=[0.0], lambdas=[1.0, 1.0], slater=True),
        dict(problem=_p(name="concave with tangent constraint", n=1, sense="max",
                        objective="-x1^2", inequalities=["x1"], domain={"lo": [-1], "hi": [1]}),
             x_hat=[0.0], lambdas=[1.0, 0.0], slater=True),
        dict(problem=_p(name="inactive constraint", n=1, sense="max", objective="-x1^2",
                        inequalities=["1 - x1^2"], domain={"lo": [-1], "hi": [1]}),
             x_hat=[0.0], lambdas=[1.0, 0.0], slater=True),
        dict(problem=_p(name="degenerate pair", n=1, sense="max", objective="x1",
                        inequalities=["x1", "-x1"], domain={"lo": [-1], "hi": [1]}),
             x_hat=[0.0], lambdas=None, slater=False),
        dict(problem=_p(name="disk", n=2, sense="max", objective="x1 + x2",
                        inequalities=["2 - x1^2 - x2^2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[1.0, 1.0], lambdas=[1.0, 0.5], slater=True),
        dict(problem=_p(name="concave kink", n=2, sense="max", objective="-abs(x1) - abs(x2)",
                        inequalities=["1 - x1"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.0, 0.0], lambdas=[1.0, 0.0], slater=True),
        dict(problem=_p(name="min of coordinates", n=2, sense="max", objective="min(x1, x2)",
                        inequalities=["1 - x1 - x2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.5, 0.5], lambdas=[1.0, 0.5], slater=True),
        dict(problem=_p(name="shifted paraboloid", n=2, sense="max",
                        objective="-(x1 - 1)^2 - (x2 - 2)^2", inequalities=["0.5 - x1"],
                        domain={"lo": [-3, -3], "hi": [3, 3]}),
             x_hat=[0.5, 2.0], lambdas=[1.0, 1.0], slater=True),
        dict(problem=_p(name="smooth minimization", n=2, sense="min", objective="x1^2 + x2^2",
                        inequalities=["1 - x1 - x2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.5, 0.5], lambdas=[1.0, 1.0], slater=True),
        dict(problem=_p(name="l1 minimization", n=2, sense="min", objective="abs(x1) + abs(x2 - 1)",
                        inequalities=["x2 - 0.5"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.0, 0.5], lambdas=[1.0, 1.0], slater=True),
        dict(problem=_p(name="ball in three dimensions", n=3, sense="max",
                        objective="-(x1^2 + x2^2 + x3^2)", inequalities=["x1 + x2 + x3 - 3"],
                        domain={"lo": [-2, -2, -2], "hi": [2, 2, 2]}),
             x_hat=[1.0, 1.0, 1.0], lambdas=[1.0, 2.0], slater=True),
        dict(problem=_p(name="tent constraint", n=2, sense="max", objective="x2",
                        inequalities=["1 - abs(x1) - x2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.0, 1.0], lambdas=[1.0, 1.0], slater=True),
        dict(problem=_p(name="box corner", n=2, sense="max", objective="x1 + x2",
                        inequalities=["1 - x1", "1 - x2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[1.0, 1.0], lambdas=[1.0, 1.0, 1.0], slater=True),
    ]


def non_optimal_points():
    """Feasible points that are not optimal, each with its problem."""
    probs = {d["problem"].name: d["problem"] for d in kkt_problems()}
    return [
        (probs["linear pair"], [-0.3]),
        (probs["disk"], [-1.0, 1.0]),
        (probs["min of coordinates"], [0.0, 0.0]),
    ]


def equality_problems():
    """Smooth equality problems with classical multipliers ``(lambdas, w0)``."""
    return [
        dict(problem=_p(name="circle", n=2, sense="max", objective="x1 + x2",
                        equalities=["x1^2 + x2^2 - 2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[1.0, 1.0], lambdas=[1.0], w0=[-0.5]),
        dict(problem=_p(name="diagonal line", n=2, sense="max", objective="-x1^2 - x2^2",
                        equalities=["x1 - x2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.0, 0.0], lambdas=[1.0], w0=[0.0]),
        dict(problem=_p(name="plane", n=3, sense="min", objective="x1^2 + x2^2 + x3^2",
                        equalities=["x1 + x2 + x3 - 3"],
                        domain={"lo": [-2, -2, -2], "hi": [2, 2, 2]}),
             x_hat=[1.0, 1.0, 1.0], lambdas=[1.0], w0=[-2.0]),
        dict(problem=_p(name="product on a line", n=2, sense="max", objective="x1*x2",
                        equalities=["x1 + x2 - 2"], domain={"lo": [-3, -3], "hi": [3, 3]}),
             x_hat=[1.0, 1.0], lambdas=[1.0], w0=[-1.0]),
        dict(problem=_p(name="two planes", n=3, sense="min", objective="x1^2 + x2^2 + x3^2",
                        equalities=["x1 + x2 - 1", "x2 + x3 - 1"],
                        domain={"lo": [-2, -2, -2], "hi": [2, 2, 2]}),
             x_hat=[1 / 3, 2 / 3, 1 / 3], lambdas=[1.0], w0=[-2 / 3, -2 / 3]),
        dict(problem=_p(name="plane with active inequality", n=3, sense="max",
                        objective="-x1^2 - x2^2 - x3^2", inequalities=["x1 + x2 + x3 - 3"],
                        equalities=["x1 - x2"], domain={"lo": [-2, -2, -2], "hi": [2, 2, 2]}),
             x_hat=[1.0, 1.0, 1.0], lambdas=[1.0, 2.0], w0=[0.0]),
    ]


def rank_deficient_problem():
    return _p(name="duplicated equality", n=2, sense="max", objective="x1",
              equalities=["x1", "x1"], domain={"lo": [-1, -1], "hi": [1, 1]}), [0.0, 0.0]


def convex_suite():
    """MIN problems with convex data: ``problem``, ``x_hat``, KKT ``lambdas``."""
    return [
        dict(problem=_p(name="parabola", n=1, sense="min", objective="x1^2",
                        inequalities=["x1 - 1"], domain={"lo": [-2], "hi": [2]}),
             x_hat=[0.0], lambdas=[1.0, 0.0]),
        dict(problem=_p(name="half-plane", n=2, sense="min", objective="x1^2 + x2^2",
                        inequalities=["1 - x1 - x2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.5, 0.5], lambdas=[1.0, 1.0]),
        dict(problem=_p(name="l1 distance", n=2, sense="min", objective="abs(x1) + abs(x2 - 1)",
                        inequalities=["x2 - 0.5"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.0, 0.5], lambdas=[1.0, 1.0]),
        dict(problem=_p(name="exponential", n=2, sense="min", objective="exp(x1) + x2^2",
                        inequalities=["-x1 - 1"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[-1.0, 0.0], lambdas=[1.0, math.exp(-1.0)]),
        dict(problem=_p(name="max of coordinates", n=2, sense="min", objective="max(x1, x2)",
                        inequalities=["1 - x1 - x2"], domain={"lo": [-2, -2], "hi": [2, 2]}),
             x_hat=[0.5, 0.5], lambdas=[1.0, 0.5]),
        dict(problem=_p(name="ball", n=3, sense="min", objective="x1^2 + x2^2 + x3^2",
                        inequalities=["3 - x1 - x2 - x3"],
                        domain={"lo": [-2, -2, -2], "hi": [2, 2, 2]}),
             x_hat=[1.0, 1.0, 1.0], lambdas=[1.0, 2.0]),
    ]


def convex_samples(p, count: int = 12, seed: int = 7) -> np.ndarray:
    """Seeded uniform points in the box of ``p``."""
    rng = np.random.default_rng(seed)
    return p.lo + (p.hi - p.lo) * rng.random((count, p.n))


# generalized convexity counterexamples: (components, x_hat, sample points)
NONCONVEX_CASES = (
    (("x1^3",), (0.0,), ((-1.0,),)),
    (("-abs(x1)",), (0.0,), ((1.0,),)),
)
