"""Brute-force ground truth kept independent of the estimator pipeline.

* exhaustive grid optimization of small problems,
* closed-form one-dimensional Dini derivatives at a kink, with their own
  exhaustive w-grid bootstrap,
* the max/min exchange identity for finite families of quotients,
* LP feasibility by enumerating basic solutions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dini import StepSchedule, _batch, _quotients, lower_dini, upper_dini
from .errors import NoFeasiblePoint
from .exprcore import as_point, evaluate_many
from .lp import LP_TOL, LinearSystem, LPResult
from .problem import MAX, ProblemSpec

KINDS = ("lower", "upper", "modified_lower", "modified_upper")


@dataclass(frozen=True)
class GridResult:
    x: np.ndarray
    value: float
    feasible_count: int
    skipped: int
    spacing: np.ndarray


def grid_axes(p: ProblemSpec, resolution: int) -> list[np.ndarray]:
    # lo + (hi - lo) * (i / (res - 1)) keeps dyadic nodes such as 0.5 exact
    frac = np.arange(resolution) / (resolution - 1)
    return [p.lo[j] + (p.hi[j] - p.lo[j]) * frac for j in range(p.n)]


def _grid_gradient_l1(e, X: np.ndarray, spacing: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Half-cell bound ``sum_j |d_j h| * spacing_j / 2`` at every grid point."""
    total = np.zeros(X.shape[0])
    for j in range(X.shape[1]):
        Xp, Xm = X.copy(), X.copy()
        Xp[:, j] += step
        Xm[:, j] -= step
        d = (evaluate_many(e, Xp, strict=False) - evaluate_many(e, Xm, strict=False)) / (2 * step)
        total += np.abs(d) * spacing[j] / 2.0
    return total


def grid_optimize(p: ProblemSpec, resolution: int = 201, tol_ineq: float = 0.0) -> GridResult:
    """Best feasible grid point; ties go to the lexicographically smallest.

    Inequalities are checked with tolerance ``tol_ineq`` (0 by default).
    Equalities pass when ``|h| <= sum_j |d_j h| * spacing_j / 2``, the
    largest change of ``h`` over half a grid cell to first order.
    """
    if p.n > 3:
        raise ValueError("grid optimization is limited to n <= 3")
    if not 2 <= resolution <= 401:
        raise ValueError("resolution must lie in [2, 401]")
    axes = grid_axes(p, resolution)
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.n)
    spacing = (p.hi - p.lo) / (resolution - 1)
    obj = evaluate_many(p.objective, X, strict=False)
    ok = np.isfinite(obj)
    for f in p.inequalities:
        v = evaluate_many(f, X, strict=False)
        ok &= np.isfinite(v)
        ok &= (v >= -tol_ineq) if p.sense == MAX else (v <= tol_ineq)
    for h in p.equalities:
        v = evaluate_many(h, X, strict=False)
        ok &= np.isfinite(v) & (np.abs(v) <= _grid_gradient_l1(h, X, spacing))
    skipped = int(np.sum(~np.isfinite(obj)))
    if not np.any(ok):
        raise NoFeasiblePoint(f"no feasible grid point for {p.name!r} at resolution {resolution}")
    score = np.where(ok, obj if p.sense == MAX else -obj, -np.inf)
    i = int(np.argmax(score))  # first maximizer = lexicographic minimum in 'ij' order
    return GridResult(X[i].copy(), float(obj[i]), int(ok.sum()), skipped, spacing)


@dataclass(frozen=True)
class Piecewise1D:
    breakpoint: float
    left_slope: float
    right_slope: float

    def __post_init__(self):
        if not (np.isfinite(self.left_slope) and np.isfinite(self.right_slope)):
            raise ValueError("slopes must be finite")


def dini_1d_exact(pw: Piecewise1D, u: float, kind: str) -> float:
    """Closed-form Dini derivatives of a 1-D kink in direction ``u``.

    One-sided derivatives exist at the kink, so the lower and upper Dini
    derivatives coincide; the modified ones take the smaller (larger) of
    the two slope pairings.
    """
    a, b = pw.right_slope, pw.left_slope
    if kind in ("lower", "upper"):
        if u > 0:
            return u * a
        if u < 0:
            return u * b
        return 0.0
    if kind == "modified_lower":
        return min(u * a, u * b)
    if kind == "modified_upper":
        return max(u * a, u * b)
    raise ValueError(f"kind must be one of {KINDS}")


def w_grid() -> np.ndarray:
    """Bootstrap perturbations: [-100, 100] at 0.01 plus far rays."""
    core = np.round(np.arange(-10000, 10001) * 0.01, 10)
    return np.concatenate([core, [-1e6, -1e3, 1e3, 1e6]])


def dini_1d_bootstrap(pw: Piecewise1D, u: float, kind: str, ws: np.ndarray | None = None) -> float:
    """Exhaustive extremum of ``D(u + w) - D(w)`` over the w-grid.

    Only the plain one-sided formula for ``D`` is used here, so this checks
    the modified closed forms independently.
    """
    ws = w_grid() if ws is None else ws
    a, b = pw.right_slope, pw.left_slope
    plain = lambda v: np.where(v > 0, v * a, np.where(v < 0, v * b, 0.0))  # noqa: E731
    diff = plain(u + ws) - plain(ws)
    if kind == "modified_lower":
        return float(diff.min())
    if kind == "modified_upper":
        return float(diff.max())
    raise ValueError("bootstrap applies to the modified kinds only")


@dataclass(frozen=True)
class ExchangeCheck:
    lhs: float
    rhs: float
    gap: float


def lemma_dmp_check(g_list, x_hat, u, schedule: StepSchedule = StepSchedule(),
                    form: str = "max") -> ExchangeCheck:
    """Exchange of the pointwise max (min) with limsup (liminf).

    ``form="max"``: lhs is the tail maximum of ``max_k`` quotient, rhs the
    maximum of the individual upper Dini estimates. ``form="min"`` mirrors
    it with minima and lower estimates.
    """
    x = as_point(x_hat)
    u = as_point(u, x.size)
    if form not in ("max", "min"):
        raise ValueError("form must be 'max' or 'min'")
    if not np.any(u):
        return ExchangeCheck(0.0, 0.0, 0.0)
    rows = np.vstack([_quotients(_batch(g), x, u[None, :], schedule) for g in g_list])
    tail = rows[:, -schedule.tail:]
    if form == "max":
        lhs = float(tail.max(axis=0).max())
        rhs = max(upper_dini(g, x, u, schedule).value for g in g_list)
    else:
        lhs = float(tail.min(axis=0).min())
        rhs = min(lower_dini(g, x, u, schedule).value for g in g_list)
    return ExchangeCheck(lhs, rhs, abs(lhs - rhs))


def _all_rows(sys: LinearSystem):
    """Every constraint as ``a @ v <= b`` or ``a @ v == b``."""
    A, b, is_eq = [], [], []
    for a, bi in zip(sys.A_ub, sys.b_ub):
        A.append(a); b.append(bi); is_eq.append(False)  # noqa: E702
    for a, bi in zip(sys.A_eq, sys.b_eq):
        A.append(a); b.append(bi); is_eq.append(True)  # noqa: E702
    for j in np.flatnonzero(sys.nonneg):
        e = np.zeros(sys.d)
        e[j] = -1.0
        A.append(e); b.append(0.0); is_eq.append(False)  # noqa: E702
    return np.array(A).reshape(-1, sys.d), np.array(b), np.array(is_eq, bool)


def lp_vertex_enumerate(sys: LinearSystem, tol: float = LP_TOL) -> LPResult:
    """Feasibility by enumerating basic solutions.

    Works on the row space of the constraint matrix, so polyhedra with a
    lineality space (free variables) are handled: their minimum-norm slice
    is pointed and has a vertex whenever the system is feasible.
    """
    if sys.d > 4 or sys.rows > 24:
        raise ValueError("vertex enumeration is limited to 4 variables and 24 rows")
    A, b, _ = _all_rows(sys)
    x0 = np.zeros(sys.d)
    if A.shape[0] == 0:
        return LPResult(True, x0, 0.0)
    r = np.linalg.matrix_rank(A)
    if r == 0:
        ok = sys.max_violation(x0) <= tol
        return LPResult(ok, x0 if ok else None, max(0.0, sys.max_violation(x0)))
    combos = np.array(list(itertools.combinations(range(A.shape[0]), r)))
    AS = A[combos]                      # (K, r, d)
    G = AS @ AS.transpose(0, 2, 1)      # Gram matrices (K, r, r)
    sv = np.linalg.svd(AS, compute_uv=False)
    regular = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1.0)
    best = np.inf
    if np.any(regular):
        y = np.linalg.solve(G[regular], b[combos[regular]][..., None])
        X = (AS[regular].transpose(0, 2, 1) @ y)[..., 0]   # minimum-norm solutions
        for v in X:
            viol = sys.max_violation(v)
            if viol <= tol:
                return LPResult(True, v, 0.0)
            best = min(best, viol)
    return LPResult(False, None, float(best))
