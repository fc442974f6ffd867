"""Multipliers for problems with smooth equality constraints ``h(x) = 0``.

The Jacobian ``J`` of ``h`` splits the space into ``Ker J`` and its
orthogonal complement ``E1``. When ``J`` is onto, inequality multipliers
come from the kernel-restricted search and the equality multiplier ``w0``
from a linear functional on ``E1`` pulled back through ``J|E1``. When
``J`` is not onto, any unit vector annihilating the image works with all
inequality multipliers zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dini
from .certify import (TOL_ACT, TOL_POS, TOL_STAT, ActiveSetInfo, DerivativeTable,
                      NoCertificate, active_set, default_directions,
                      derivative_table, fritz_john, kkt)
from .dini import PerturbationSet, StepSchedule
from .exprcore import as_point, grad_fd
from .lp import LinearSystem, lp_solve
from .problem import ProblemSpec

NOT_SURJECTIVE = "NOT_SURJECTIVE"
SURJECTIVE = "SURJECTIVE"

TOL_RANK = 1e-8
KERNEL_MIN_NORM = 1e-6
EXTRA_NU = 8


@dataclass(frozen=True)
class JacobianDecomposition:
    J: np.ndarray
    rank: int
    kernel_basis: np.ndarray       # (n, n - rank)
    complement_basis: np.ndarray   # (n, rank), spans the row space
    surjective: bool
    left_nullspace_basis: np.ndarray  # (k, k - rank)


@dataclass(frozen=True)
class EqualityCertificate:
    lambdas: np.ndarray
    w0: np.ndarray
    branch: str
    residual: float
    normalization: str | None
    tolerance: float = TOL_STAT
    widened_tolerance: float = TOL_STAT

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "w0": self.w0.tolist(),
            "branch": self.branch,
            "residual": self.residual,
            "normalization": self.normalization,
            "tol_stat": self.tolerance,
            "widened_tolerance": self.widened_tolerance,
            "statement": "consistent with the multiplier rule on the sampled directions",
        }


def jacobian(h, x_hat, step: float = 1e-5) -> np.ndarray:
    """Rows are central-difference gradients of the components of ``h``."""
    x = as_point(x_hat)
    if not h:
        return np.zeros((0, x.size))
    return np.vstack([grad_fd(hj, x, step) for hj in h])


def decompose(J, tol_rank: float = TOL_RANK) -> JacobianDecomposition:
    """Rank-revealing SVD split of ``J`` (rank cut at ``tol_rank * sigma_max``)."""
    J = np.atleast_2d(np.asarray(J, float))
    k, n = J.shape
    Um, s, Vt = np.linalg.svd(J, full_matrices=True)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol_rank * smax)) if smax > 0 else 0
    return JacobianDecomposition(
        J=J,
        rank=rank,
        kernel_basis=Vt[rank:].T.copy(),
        complement_basis=Vt[:rank].T.copy(),
        surjective=rank == k,
        left_nullspace_basis=Um[:, rank:].copy(),
    )


def _first_positive(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    return -v if nz.size and v[nz[0]] < 0 else v


def kernel_directions(U: np.ndarray, dec: JacobianDecomposition) -> np.ndarray:
    """Kernel projections of ``U``: short ones dropped, rest normalized and deduplicated."""
    K = dec.kernel_basis
    n = U.shape[1]
    if K.shape[1] == 0:
        return np.zeros((0, n))
    proj = (U @ K) @ K.T
    norms = np.linalg.norm(proj, axis=1)
    proj = proj[norms >= KERNEL_MIN_NORM] / norms[norms >= KERNEL_MIN_NORM, None]
    out = []
    for v in proj:
        if not any(np.max(np.abs(v - w)) <= 1e-12 for w in out):
            out.append(v)
    return np.array(out).reshape(-1, n)


def kernel_slater(p: ProblemSpec, x_hat, dec: JacobianDecomposition, t_ker: DerivativeTable,
                  act: ActiveSetInfo, tol_pos: float = TOL_POS):
    """A kernel direction increasing every active inequality, else None.

    With no active inequality the condition is vacuous and the first kernel
    direction is returned (the zero vector when the kernel is trivial).
    """
    if not dec.surjective:
        raise ValueError("kernel_slater applies to the surjective branch")
    if not act.active:
        return t_ker.U[0].copy() if t_ker.U.shape[0] else np.zeros(p.n)
    if t_ker.U.shape[0] == 0:
        return None
    ok = np.all(t_ker.signed[list(act.active)] > tol_pos, axis=0)
    return t_ker.U[int(np.argmax(ok))].copy() if np.any(ok) else None


def _nu_directions(dec: JacobianDecomposition, seed: int) -> np.ndarray:
    E1 = dec.complement_basis
    r = E1.shape[1]
    coords = [np.eye(r)[j] * s for j in range(r) for s in (1.0, -1.0)]
    rng = np.random.default_rng(seed)
    for _ in range(EXTRA_NU):
        c = rng.standard_normal(r)
        coords.append(c / np.linalg.norm(c))
    C = np.array(coords)
    return C, C @ E1.T


def equality_residuals(lambdas, w_max, t: DerivativeTable, J: np.ndarray) -> np.ndarray:
    """Per-direction MAX-form residual ``sum lam_i e_i(u) + <w, J u>``."""
    return np.asarray(lambdas) @ t.signed + (t.U @ J.T) @ np.asarray(w_max)


def equality_certificate(p: ProblemSpec, x_hat, U=None, schedule: StepSchedule = StepSchedule(),
                         P: PerturbationSet | None = None, seed: int = 20240601,
                         tol_act: float = TOL_ACT, tol_stat: float = TOL_STAT,
                         tol_pos: float = TOL_POS, tol_rank: float = TOL_RANK):
    """Equality-constrained multiplier certificate or :class:`NoCertificate`.

    ``w0`` is reported in the sense's own convention: for MIN problems the
    stationarity inequality reads ``>= 0`` and ``w0`` flips sign
    accordingly. The residual is always the MAX-form value over all of ``U``.
    """
    x = as_point(x_hat, p.n)
    act = active_set(p, x, tol_act)
    U = default_directions(p.n, seed) if U is None else np.atleast_2d(np.asarray(U, float))
    P = dini.perturbation_set(p.n, seed) if P is None else P
    J = jacobian(p.equalities, x)
    dec = decompose(J, tol_rank)

    if not dec.surjective:
        w0 = _first_positive(dec.left_nullspace_basis[:, 0].copy())
        resid = float(np.max(U @ J.T @ w0)) if U.shape[0] else 0.0
        return EqualityCertificate(np.zeros(p.m + 1), w0, NOT_SURJECTIVE, resid, None,
                                   tol_stat, tol_stat), dec

    t = derivative_table(p, x, U, schedule, P)
    U_ker = kernel_directions(U, dec)
    t_ker = derivative_table(p, x, U_ker, schedule, P)
    witness = kernel_slater(p, x, dec, t_ker, act, tol_pos)
    if witness is not None:
        base = kkt(p, x, t_ker, act, tol_stat, witness)
    else:
        base = fritz_john(p, x, t_ker, act, tol_stat)
    if isinstance(base, NoCertificate):
        return base, dec
    lam = base.lambdas

    C, nus = _nu_directions(dec, seed)
    t_nu = derivative_table(p, x, nus, schedule, P)
    rhs = -(lam @ t_nu.signed)
    kdim = dec.rank
    # minimize s subject to <e, c> - s <= rhs with e and s free; the +-E1
    # pairs bound s below, and a free s centres e inside its slack interval
    sys = LinearSystem(kdim + 1, A_ub=np.hstack([C, -np.ones((C.shape[0], 1))]), b_ub=rhs,
                       nonneg=np.zeros(kdim + 1, bool))
    e = lp_solve(sys, c=np.r_[np.zeros(kdim), 1.0]).x[:kdim]
    JE1 = J @ dec.complement_basis
    w_max = np.linalg.solve(JE1.T, e)

    sums = equality_residuals(lam, w_max, t, J)
    slack = t.slack(lam)
    residual = float(sums.max()) if sums.size else 0.0
    if sums.size and np.any(sums > tol_stat + slack):
        j = int(np.argmax(sums - slack))
        return NoCertificate(base.normalization, lam, residual, U[j].copy(), tol_stat), dec
    return EqualityCertificate(
        lambdas=lam,
        w0=p.sign * w_max,
        branch=SURJECTIVE,
        residual=residual,
        normalization=base.normalization,
        tolerance=tol_stat,
        widened_tolerance=float(tol_stat + (slack.max() if slack.size else 0.0)),
    ), dec


def lagrange_least_squares(p: ProblemSpec, x_hat, active=None, step: float = 1e-6):
    """Classical multipliers from ``grad f0 + sum lam_i grad f_i + J^T w = 0``.

    Returns ``(lambdas, w)`` with ``lambdas[0] = 1`` and zeros for indices
    outside ``active`` (all inequalities when ``active`` is None).
    """
    x = as_point(x_hat, p.n)
    active = list(range(1, p.m + 1)) if active is None else list(active)
    g0 = grad_fd(p.objective, x, step)
    cols = [grad_fd(p.inequalities[i - 1], x, step) for i in active]
    cols += [grad_fd(h, x, step) for h in p.equalities]
    A = np.array(cols).T.reshape(p.n, len(cols))
    sol = np.linalg.lstsq(A, -g0, rcond=None)[0]
    lam = np.zeros(p.m + 1)
    lam[0] = 1.0
    lam[active] = sol[:len(active)]
    return lam, sol[len(active):]
