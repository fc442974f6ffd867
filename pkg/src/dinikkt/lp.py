"""Dense two-phase simplex with Bland's anti-cycling rule.

This is the finite-dimensional stand-in for the generalized Farkas
alternative: multiplier existence is decided by LP feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CycleGuardExceeded

LP_TOL = 1e-9


class LPUnbounded(ValueError):
    pass


@dataclass
class LinearSystem:
    """``A_ub v <= b_ub``, ``A_eq v = b_eq`` and ``v_j >= 0`` where ``nonneg[j]``."""

    d: int
    A_ub: np.ndarray = None
    b_ub: np.ndarray = None
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    nonneg: np.ndarray = None

    def __post_init__(self):
        d = self.d
        self.A_ub = np.zeros((0, d)) if self.A_ub is None else np.atleast_2d(np.asarray(self.A_ub, float)).reshape(-1, d)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, float).ravel()
        self.A_eq = np.zeros((0, d)) if self.A_eq is None else np.atleast_2d(np.asarray(self.A_eq, float)).reshape(-1, d)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, float).ravel()
        self.nonneg = np.ones(d, bool) if self.nonneg is None else np.asarray(self.nonneg, bool).ravel()
        if self.A_ub.shape[0] != self.b_ub.size or self.A_eq.shape[0] != self.b_eq.size:
            raise ValueError("row counts of A and b disagree")
        if self.nonneg.size != d:
            raise ValueError("nonneg flags must have one entry per variable")

    @property
    def rows(self) -> int:
        return self.A_ub.shape[0] + self.A_eq.shape[0]

    def max_violation(self, v) -> float:
        v = np.asarray(v, float)
        viol = [0.0]
        if self.b_ub.size:
            viol.append(float(np.max(self.A_ub @ v - self.b_ub)))
        if self.b_eq.size:
            viol.append(float(np.max(np.abs(self.A_eq @ v - self.b_eq))))
        if np.any(self.nonneg):
            viol.append(float(np.max(-v[self.nonneg])))
        return max(viol)


@dataclass
class LPResult:
    feasible: bool
    x: np.ndarray | None
    phase1_objective: float
    objective: float | None = None
    iterations: int = 0
    info: dict = field(default_factory=dict)


class _Simplex:
    """Revised simplex on ``A x = b, x >= 0`` with ``b >= 0``.

    Basic values and reduced costs are re-solved from the original matrix
    at every pivot, so round-off does not accumulate across iterations.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list, tol: float, cap: int):
        self.A = A
        self.b = b
        self.basis = list(basis)
        self.tol = tol
        self.cap = cap
        self.iterations = 0

    def values(self) -> np.ndarray:
        xB = np.linalg.solve(self.A[:, self.basis], self.b)
        xB[(xB < 0.0) & (xB > -self.tol)] = 0.0
        return xB

    def run(self, c: np.ndarray, allowed: np.ndarray):
        """Minimize ``c @ x`` with Bland's rule over ``allowed`` columns."""
        A, tol = self.A, self.tol
        while True:
            B = A[:, self.basis]
            xB = self.values()
            y = np.linalg.solve(B.T, c[self.basis])
            d = c - A.T @ y
            d[self.basis] = 0.0
            cand = np.flatnonzero((d < -tol) & allowed)
            if cand.size == 0:
                return
            j = int(cand[0])
            col = np.linalg.solve(B, A[:, j])
            pos = np.flatnonzero(col > tol)
            if pos.size == 0:
                raise LPUnbounded("objective unbounded below")
            ratios = xB[pos] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.iterations += 1
            if self.iterations > self.cap:
                raise CycleGuardExceeded(f"simplex exceeded {self.cap} pivots")
            self.basis[r] = j


def _standard_form(sys: LinearSystem):
    """Columns: one per nonneg variable, a +/- pair per free one, then slacks."""
    cols = []
    for j in range(sys.d):
        cols.append((j, 1.0))
        if not sys.nonneg[j]:
            cols.append((j, -1.0))
    expand = np.zeros((sys.d, len(cols)))
    for k, (j, sgn) in enumerate(cols):
        expand[j, k] = sgn
    n_ub = sys.A_ub.shape[0]
    A = np.vstack([
        np.hstack([sys.A_ub @ expand, np.eye(n_ub)]),
        np.hstack([sys.A_eq @ expand, np.zeros((sys.A_eq.shape[0], n_ub))]),
    ]) if sys.rows else np.zeros((0, len(cols)))
    b = np.concatenate([sys.b_ub, sys.b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.where(neg, -b, b)
    return A, b, expand


def lp_solve(sys: LinearSystem, c=None, tol: float = LP_TOL) -> LPResult:
    """Minimize ``c @ v`` over the system (pure feasibility when ``c`` is None).

    Returns ``LPResult(feasible=False, ...)`` with the final phase-1
    objective (summed artificial residual) when the system is infeasible.
    Raises :class:`LPUnbounded` if a phase-2 objective is unbounded.
    """
    A, b, expand = _standard_form(sys)
    m, N = A.shape
    cap = 10 * (m + N) + 10
    if m == 0:
        x = np.zeros(N)
        v = expand @ x[: expand.shape[1]]
        obj = None if c is None else float(np.asarray(c, float) @ v)
        if c is not None and np.any(np.asarray(c, float) @ expand < -tol):
            raise LPUnbounded("objective unbounded below")
        return LPResult(True, v, 0.0, obj, 0)

    A1 = np.hstack([A, np.eye(m)])
    spx = _Simplex(A1, b, list(range(N, N + m)), tol, cap)
    c1 = np.r_[np.zeros(N), np.ones(m)]
    spx.run(c1, np.ones(N + m, bool))
    xB = spx.values()
    phase1 = float(sum(v for v, j in zip(xB, spx.basis) if j >= N))
    if phase1 > tol * (1.0 + float(np.abs(b).max())):
        return LPResult(False, None, phase1, None, spx.iterations)

    # drive zero-level artificials out of the basis; drop redundant rows
    r = 0
    while r < len(spx.basis):
        if spx.basis[r] < N:
            r += 1
            continue
        Binv_row = np.linalg.solve(spx.A[:, spx.basis].T, np.eye(len(spx.basis))[r])
        row = Binv_row @ spx.A[:, :N]
        row[[j for j in spx.basis if j < N]] = 0.0
        nz = np.flatnonzero(np.abs(row) > tol)
        if nz.size:
            spx.basis[r] = int(nz[0])
            r += 1
        else:
            art = spx.basis[r]
            keep = [i for i in range(spx.A.shape[0]) if i != art - N]
            cols = [j for j in range(spx.A.shape[1]) if j != art]
            spx.A = spx.A[np.ix_(keep, cols)]
            spx.b = spx.b[keep]
            # artificial columns sit after N; re-index the ones after the removed column
            spx.basis = [j if j < art else j - 1 for k, j in enumerate(spx.basis) if k != r]

    allowed = np.zeros(spx.A.shape[1], bool)
    allowed[:N] = True
    obj = None
    if c is not None:
        cost = np.zeros(spx.A.shape[1])
        cost[: expand.shape[1]] = np.asarray(c, float) @ expand
        spx.run(cost, allowed)

    x = np.zeros(spx.A.shape[1])
    x[spx.basis] = spx.values()
    v = expand @ x[: expand.shape[1]]
    if c is not None:
        obj = float(np.asarray(c, float) @ v)
    return LPResult(True, v, phase1, obj, spx.iterations)


def lp_feasible(sys: LinearSystem, tol: float = LP_TOL) -> LPResult:
    """Phase-1 simplex: a feasible point or an infeasibility verdict."""
    return lp_solve(sys, None, tol)
