"""Fritz-John and KKT multiplier certificates for inequality-constrained problems.

All searches run on "MAX-form" table entries: the modified lower Dini
derivatives for a maximization problem, and the negated modified upper
Dini derivatives for a minimization problem (``-D+_M f = D-_M(-f)``), so
both senses share one LP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dini
from .dini import PerturbationSet, StepSchedule
from .errors import InfeasibleCandidate
from .exprcore import as_point, evaluate, is_smooth
from .lp import LinearSystem, lp_solve
from .problem import MAX, ProblemSpec

SUM_ONE = "SUM_ONE"
LAMBDA0_ONE = "LAMBDA0_ONE"

TOL_ACT = 1e-8
TOL_STAT = 1e-6
TOL_POS = 1e-7
TOL_LINEARITY = 1e-5


@dataclass(frozen=True)
class ActiveSetInfo:
    active: tuple           # 1-based constraint indices
    inactive: tuple
    values: np.ndarray      # f_i(x_hat), i = 1..m
    tolerances: np.ndarray  # per-constraint activity tolerance

    def to_dict(self) -> dict:
        return {"active": list(self.active), "inactive": list(self.inactive),
                "values": self.values.tolist()}


@dataclass(frozen=True)
class DerivativeTable:
    """``entries[i, j]`` is the modified derivative of ``f_i`` along ``U[j]``.

    D-_M for MAX problems and D+_M for MIN problems; ``signed`` holds the
    MAX-form values used by every search.
    """

    U: np.ndarray
    entries: np.ndarray
    widths: np.ndarray
    converged: np.ndarray
    sense: str
    smooth: tuple

    @property
    def signed(self) -> np.ndarray:
        return self.entries if self.sense == MAX else -self.entries

    def slack(self, lambdas: np.ndarray) -> np.ndarray:
        """Per-direction tolerance widening from non-converged entries."""
        w = np.where(self.converged, 0.0, self.widths)
        return np.asarray(lambdas) @ w

    def summary(self) -> dict:
        return {
            "sense": self.sense,
            "directions": self.U.tolist(),
            "entries": self.entries.tolist(),
            "converged": self.converged.tolist(),
            "widths": self.widths.tolist(),
        }


@dataclass(frozen=True)
class MultiplierCertificate:
    lambdas: np.ndarray
    normalization: str
    stationarity_residual: float
    complementary_slackness_exact: bool
    slater_witness: np.ndarray | None = None
    tolerance: float = TOL_STAT
    widened_tolerance: float = TOL_STAT

    def to_dict(self) -> dict:
        return {
            "lambdas": self.lambdas.tolist(),
            "normalization": self.normalization,
            "stationarity_residual": self.stationarity_residual,
            "complementary_slackness_exact": self.complementary_slackness_exact,
            "slater_witness": None if self.slater_witness is None else self.slater_witness.tolist(),
            "tol_stat": self.tolerance,
            "widened_tolerance": self.widened_tolerance,
            "statement": "consistent with the multiplier rule on the sampled directions",
        }


@dataclass(frozen=True)
class NoCertificate:
    """The sampled directions refute the multiplier rule at this tolerance.

    This refutes optimality of the candidate, the regularity assumptions,
    or the adequacy of the direction sample; it does not refute the
    multiplier rule itself.
    """

    normalization: str
    best_lambdas: np.ndarray
    residual: float
    most_violating: np.ndarray
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "result": "NoCertificate",
            "normalization": self.normalization,
            "best_lambdas": self.best_lambdas.tolist(),
            "residual": self.residual,
            "most_violating_direction": self.most_violating.tolist(),
            "tol_stat": self.tolerance,
            "statement": ("the sampled directions refute the multiplier rule: either the "
                          "candidate is not optimal, the regularity assumptions fail, or "
                          "the direction sample is inadequate"),
        }


def default_directions(n: int, seed: int) -> np.ndarray:
    """``max(2n, 16) + 16`` directions.

    Axes first, then the pair diagonals ``(±e_i ± e_j)/sqrt(2)`` (these
    cover kinks of ``max``/``min`` of two coordinates), then seeded extras.
    """
    count = max(2 * n, 16) + 16
    out = list(dini.direction_set(n, 2 * n, seed))
    for i in range(n):
        for j in range(i + 1, n):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    if len(out) < count:
                        v = np.zeros(n)
                        v[i], v[j] = si, sj
                        out.append(v / np.sqrt(2.0))
    for v in dini.direction_set(n, count + 2 * n, seed)[2 * n:]:
        if len(out) >= count:
            break
        if not any(np.max(np.abs(v - w)) <= 1e-12 for w in out):
            out.append(v)
    return np.array(out)


def active_set(p: ProblemSpec, x_hat, tol_act: float = TOL_ACT) -> ActiveSetInfo:
    """Partition the inequality indices at ``x_hat``.

    Raises :class:`InfeasibleCandidate` when an inequality or equality is
    violated beyond its tolerance.
    """
    x = as_point(x_hat, p.n)
    values = np.array([evaluate(f, x) for f in p.inequalities])
    tols = tol_act * (1.0 + np.abs(values))
    violated = {}
    signed = p.sign * values  # >= 0 means satisfied
    for i, (v, tol) in enumerate(zip(signed, tols), start=1):
        if v < -tol:
            violated[f"f{i}"] = float(values[i - 1])
    for j, h in enumerate(p.equalities, start=1):
        hv = evaluate(h, x)
        if abs(hv) > tol_act * (1.0 + abs(hv)):
            violated[f"h{j}"] = hv
    if violated:
        raise InfeasibleCandidate(violated)
    active = tuple(i for i in range(1, p.m + 1) if abs(values[i - 1]) <= tols[i - 1])
    inactive = tuple(i for i in range(1, p.m + 1) if i not in active)
    return ActiveSetInfo(active, inactive, values, tols)


def derivative_table(p: ProblemSpec, x_hat, U, schedule: StepSchedule,
                     P: PerturbationSet, conv_tol: float = dini.DEFAULT_CONV_TOL) -> DerivativeTable:
    x = as_point(x_hat, p.n)
    U = np.atleast_2d(np.asarray(U, float))
    upper = p.sense != MAX
    rows = []
    for i, f in enumerate(p.functions):
        try:
            rows.append(dini.modified_many(f, x, U, schedule, P, upper=upper, conv_tol=conv_tol))
        except Exception as exc:
            exc.args = (f"f{i}: {exc}",)
            exc.function_index = i
            raise
    return DerivativeTable(
        U=U,
        entries=np.array([r["value"] for r in rows]).reshape(len(rows), U.shape[0]),
        widths=np.array([r["width"] for r in rows]).reshape(len(rows), U.shape[0]),
        converged=np.array([r["converged"] for r in rows], bool).reshape(len(rows), U.shape[0]),
        sense=p.sense,
        smooth=tuple(is_smooth(f) for f in p.functions),
    )


@dataclass(frozen=True)
class AIndexReport:
    k: int | None
    A_l_empty: bool
    witnesses: dict        # p -> direction
    against_optimality: bool  # a sampled witness for A_0 exists

    def to_dict(self) -> dict:
        return {"k": self.k, "A_l_empty": self.A_l_empty,
                "witnesses": {str(p): u.tolist() for p, u in self.witnesses.items()},
                "A0_witness_found": self.against_optimality}


def a_index(t: DerivativeTable, act: ActiveSetInfo, tol_pos: float = TOL_POS) -> AIndexReport:
    """Sampled sets ``A_p`` over relabelled indices ``0 (objective), 1..l (active)``.

    ``A_p`` holds the directions on which every function ``p..l`` has a
    derivative above ``tol_pos``; ``k`` is the least ``p`` with a witness.
    """
    if not act.active:
        raise ValueError("a_index needs at least one active constraint")
    rows = t.signed[[0] + list(act.active)] > tol_pos   # (l+1, |U|)
    l = len(act.active)
    witnesses = {}
    for p in range(l, -1, -1):
        hit = np.all(rows[p:], axis=0)
        if not np.any(hit):
            break
        witnesses[p] = t.U[int(np.argmax(hit))].copy()
    k = min(witnesses) if witnesses else None
    return AIndexReport(k, l not in witnesses, witnesses, 0 in witnesses)


def slater_witness(t: DerivativeTable, act: ActiveSetInfo, tol_pos: float = TOL_POS):
    """First sampled direction increasing every active constraint, else None."""
    if not act.active:
        return t.U[0].copy() if t.U.shape[0] else None
    ok = np.all(t.signed[list(act.active)] > tol_pos, axis=0)
    return t.U[int(np.argmax(ok))].copy() if np.any(ok) else None


def _solve_multipliers(S: np.ndarray, fixed_first: bool):
    """Minimize ``r >= 0`` subject to ``S.T @ lam <= r`` for every direction.

    ``S`` has one row per participating function (objective first). With
    ``fixed_first`` the objective multiplier is pinned to one; otherwise
    the multipliers sum to one.
    """
    L, N = S.shape
    if fixed_first:
        # variables: lam_1..lam_{L-1}, r
        A_ub = np.hstack([S[1:].T, -np.ones((N, 1))])
        sys = LinearSystem(L, A_ub=A_ub, b_ub=-S[0])
        res = lp_solve(sys, c=np.r_[np.zeros(L - 1), 1.0])
        lam = np.r_[1.0, np.maximum(res.x[:L - 1], 0.0)]
    else:
        A_ub = np.hstack([S.T, -np.ones((N, 1))])
        sys = LinearSystem(L + 1, A_ub=A_ub, b_ub=np.zeros(N),
                           A_eq=np.r_[np.ones(L), 0.0][None, :], b_eq=[1.0])
        res = lp_solve(sys, c=np.r_[np.zeros(L), 1.0])
        lam = np.maximum(res.x[:L], 0.0)
    return lam


def _certificate(p, t, act, tol_stat, fixed_first, witness):
    idx = [0] + list(act.active)
    S = t.signed[idx]
    lam_part = _solve_multipliers(S, fixed_first) if S.shape[1] else (
        np.r_[1.0, np.zeros(len(idx) - 1)])
    lambdas = np.zeros(p.m + 1)
    lambdas[idx] = lam_part
    sums = lambdas @ t.signed if t.U.shape[0] else np.zeros(0)
    slack = t.slack(lambdas) if t.U.shape[0] else np.zeros(0)
    residual = float(sums.max()) if sums.size else 0.0
    normalization = LAMBDA0_ONE if fixed_first else SUM_ONE
    if sums.size and np.any(sums > tol_stat + slack):
        j = int(np.argmax(sums - slack))
        return NoCertificate(normalization, lambdas, residual, t.U[j].copy(), tol_stat)
    return MultiplierCertificate(
        lambdas=lambdas,
        normalization=normalization,
        stationarity_residual=residual,
        complementary_slackness_exact=bool(np.all(lambdas[list(act.inactive)] == 0.0)),
        slater_witness=witness,
        tolerance=tol_stat,
        widened_tolerance=float(tol_stat + (slack.max() if slack.size else 0.0)),
    )


def fritz_john(p: ProblemSpec, x_hat, t: DerivativeTable, act: ActiveSetInfo,
               tol_stat: float = TOL_STAT):
    """Multipliers with ``sum = 1`` over the objective and active constraints.

    Inactive multipliers are fixed to exactly zero. Among feasible
    multipliers the LP picks one minimizing the worst sampled residual.
    Returns :class:`MultiplierCertificate` or :class:`NoCertificate`.
    """
    return _certificate(p, t, act, tol_stat, False, None)


def kkt(p: ProblemSpec, x_hat, t: DerivativeTable, act: ActiveSetInfo,
        tol_stat: float = TOL_STAT, witness=None):
    """As :func:`fritz_john` with the objective multiplier pinned to 1."""
    return _certificate(p, t, act, tol_stat, True, witness)


@dataclass
class VerificationReport:
    checks: dict  # name -> {"passed": bool, "slack": float}

    @property
    def all_passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def failed(self) -> list:
        return [k for k, c in self.checks.items() if not c["passed"]]


def verify_certificate(c: MultiplierCertificate, t: DerivativeTable, act: ActiveSetInfo,
                       tol_lin: float = TOL_LINEARITY) -> VerificationReport:
    """Recompute every certificate invariant from the raw table."""
    lam = np.asarray(c.lambdas, float)
    checks = {}

    def add(name, slack):
        checks[name] = {"passed": bool(slack >= 0), "slack": float(slack)}

    add("nonnegative", lam.min())
    add("nonzero", np.abs(lam).sum() - 1e-300)
    if c.normalization == SUM_ONE:
        add("normalization", 1e-12 - abs(lam.sum() - 1.0))
    else:
        add("normalization", 0.0 if lam[0] == 1.0 else -abs(lam[0] - 1.0))
    inactive = list(act.inactive)
    add("complementary_slackness", -np.abs(lam[inactive]).max() if inactive else 0.0)
    sums = lam @ t.signed
    slack = t.slack(lam)
    add("stationarity", float(np.min(c.tolerance + slack - sums)) if sums.size else 0.0)
    stored = float(sums.max()) if sums.size else 0.0
    add("residual_matches", 1e-12 - abs(stored - c.stationarity_residual))
    if all(t.smooth):
        worst = np.inf
        for j, u in enumerate(t.U):
            match = np.flatnonzero(np.all(t.U == -u, axis=1))
            if match.size:
                k = int(match[0])
                gap = abs(sums[j] + sums[k])
                worst = min(worst, tol_lin + slack[j] + slack[k] - gap)
        if np.isfinite(worst):
            add("linearity", worst)
    return VerificationReport(checks)


@dataclass
class CertifyOutcome:
    problem: ProblemSpec
    x_hat: np.ndarray
    active: ActiveSetInfo
    table: DerivativeTable
    a_index: AIndexReport | None
    slater: np.ndarray | None
    fritz_john: object
    kkt: object | None
    verification: VerificationReport | None = None
    settings: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        best = self.kkt if self.kkt is not None else self.fritz_john
        return isinstance(best, MultiplierCertificate)

    @property
    def best(self):
        if isinstance(self.kkt, MultiplierCertificate):
            return self.kkt
        return self.fritz_john


def analyze(p: ProblemSpec, x_hat, seed: int = 20240601, schedule: StepSchedule = StepSchedule(),
            U=None, P: PerturbationSet | None = None, tol_act: float = TOL_ACT,
            tol_stat: float = TOL_STAT, tol_pos: float = TOL_POS) -> CertifyOutcome:
    """Run the full inequality pipeline at one candidate point."""
    x = as_point(x_hat, p.n)
    act = active_set(p, x, tol_act)
    U = default_directions(p.n, seed) if U is None else np.atleast_2d(np.asarray(U, float))
    P = dini.perturbation_set(p.n, seed) if P is None else P
    table = derivative_table(p, x, U, schedule, P)
    diag = a_index(table, act, tol_pos) if act.active else None
    witness = slater_witness(table, act, tol_pos)
    fj = fritz_john(p, x, table, act, tol_stat)
    kk = kkt(p, x, table, act, tol_stat, witness) if witness is not None else None
    best = kk if isinstance(kk, MultiplierCertificate) else fj
    ver = verify_certificate(best, table, act) if isinstance(best, MultiplierCertificate) else None
    settings = {"seed": seed, "schedule": schedule.as_dict(), "tol_act": tol_act,
                "tol_stat": tol_stat, "tol_pos": tol_pos, "directions": int(U.shape[0]),
                "perturbations": len(P)}
    return CertifyOutcome(p, x, act, table, diag, witness, fj, kk, ver, settings)
