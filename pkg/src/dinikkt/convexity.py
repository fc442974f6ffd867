"""Sampled invexity and pseudoconvexity tests built on modified upper Dini derivatives.

A CONSISTENT verdict only means every sampled point found a witness
direction among the candidates. A COUNTEREXAMPLE means no candidate
worked; an exotic invex function may still have a witness outside the
candidate set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import dini
from .dini import PerturbationSet, StepSchedule
from .exprcore import as_point, evaluate, evaluate_many
from .oracle import grid_axes
from .problem import MIN, ProblemSpec

INVEX = "INVEX"
PSEUDOCONVEX = "PSEUDOCONVEX"
CONSISTENT = "CONSISTENT"
COUNTEREXAMPLE = "COUNTEREXAMPLE"


@dataclass(frozen=True)
class VectorFunction:
    components: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    def __call__(self, x) -> np.ndarray:
        return np.array([evaluate(f, x) for f in self.components])


@dataclass
class GenConvexReport:
    property: str
    verdict: str
    counterexample: dict | None = None
    eta_witnesses: dict = field(default_factory=dict)
    tol: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        ce = None
        if self.counterexample is not None:
            ce = {"x": self.counterexample["x"].tolist(),
                  "statement": "no witness among the candidate directions",
                  "violations": [{k: (v.tolist() if isinstance(v, np.ndarray) else v)
                                  for k, v in row.items()}
                                 for row in self.counterexample["violations"]]}
        return {"property": self.property, "verdict": self.verdict, "counterexample": ce,
                "eta_witnesses": {str(list(k)): v.tolist() for k, v in self.eta_witnesses.items()}}


def default_w_samples(count: int, seed: int = 20240601) -> np.ndarray:
    """Nonzero 0/1 vectors for up to five components, else 64 seeded unit rays."""
    if count <= 5:
        return np.array([w for w in itertools.product((0.0, 1.0), repeat=count) if any(w)])
    W = np.abs(np.random.default_rng(seed).standard_normal((64, count)))
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def default_eta_candidates(x, x_hat, seed: int = 20240601) -> np.ndarray:
    """``x - x_hat`` followed by seeded directions at scales ``|x - x_hat|`` and 1."""
    d = np.asarray(x, float) - np.asarray(x_hat, float)
    r = float(np.linalg.norm(d))
    D = dini.direction_set(d.size, max(2 * d.size, 8), seed)
    parts = [d[None, :], D] + ([r * D] if r > 0 else [])
    return np.vstack(parts)


def violation_slack(prop: str, wD: float, wF: float, tol: float) -> float:
    """Positive when the sampled pair ``(w, eta)`` violates ``prop``."""
    if prop == INVEX:
        return wD - wF - tol
    # premise <w, D> >= -tol must hold and conclusion <w, dF> >= -2 tol fail
    if wD < -tol:
        return -np.inf
    return -2.0 * tol - wF


def _check(prop, F: VectorFunction, x_hat, sample_points, eta_candidates, w_samples, tol,
           schedule, P, seed) -> GenConvexReport:
    xh = as_point(x_hat, F.n)
    X = np.atleast_2d(np.asarray(sample_points, float))
    P = dini.perturbation_set(F.n, seed) if P is None else P
    W = default_w_samples(len(F.components), seed) if w_samples is None else np.atleast_2d(w_samples)
    Fh = F(xh)
    witnesses, tols = {}, {}
    for x in X:
        etas = (default_eta_candidates(x, xh, seed) if eta_candidates is None
                else np.atleast_2d(np.asarray(eta_candidates(x) if callable(eta_candidates)
                                              else eta_candidates, float)))
        D = np.array([dini.modified_many(f, xh, etas, schedule, P, upper=True)["value"]
                      for f in F.components])          # (m+1, |eta|)
        dF = F(x) - Fh
        t = float(1e-6 * (1.0 + np.abs(F(x)).max() + np.abs(Fh).max()) if tol is None else tol)
        tols[tuple(x)] = t
        wD = W @ D                                      # (|w|, |eta|)
        wF = W @ dF                                     # (|w|,)
        violations = []
        found = None
        for j, eta in enumerate(etas):
            s = np.array([violation_slack(prop, wD[i, j], wF[i], t) for i in range(W.shape[0])])
            if np.all(s <= 0):
                found = eta
                break
            i = int(np.argmax(s))
            violations.append({"eta": eta.copy(), "w": W[i].copy(), "w_dot_D": float(wD[i, j]),
                               "w_dot_dF": float(wF[i]), "slack": float(s[i])})
        if found is None:
            return GenConvexReport(prop, COUNTEREXAMPLE,
                                   {"x": x.copy(), "violations": violations, "tol": t},
                                   witnesses, tols)
        witnesses[tuple(x)] = found.copy()
    return GenConvexReport(prop, CONSISTENT, None, witnesses, tols)


def pseudoconvex_check(F: VectorFunction, x_hat, sample_points, eta_candidates=None,
                       w_samples=None, tol: float | None = None,
                       schedule: StepSchedule = StepSchedule(), P: PerturbationSet | None = None,
                       seed: int = 20240601) -> GenConvexReport:
    """Search, for every sample ``x``, an ``eta`` with
    ``<w, D+_M F(x_hat)(eta)> >= 0  =>  <w, F(x) - F(x_hat)> >= 0`` for all sampled ``w``.

    ``eta_candidates`` may be an array shared by all samples or a callable
    ``x -> array``; by default :func:`default_eta_candidates` is used.
    ``tol`` defaults to ``1e-6 * (1 + max|F(x)| + max|F(x_hat)|)`` per sample.
    """
    return _check(PSEUDOCONVEX, F, x_hat, sample_points, eta_candidates, w_samples, tol,
                  schedule, P, seed)


def invex_check(F: VectorFunction, x_hat, sample_points, eta_candidates=None,
                w_samples=None, tol: float | None = None,
                schedule: StepSchedule = StepSchedule(), P: PerturbationSet | None = None,
                seed: int = 20240601) -> GenConvexReport:
    """As :func:`pseudoconvex_check` for ``<w, D+_M F(x_hat)(eta)> <= <w, F(x) - F(x_hat)>``."""
    return _check(INVEX, F, x_hat, sample_points, eta_candidates, w_samples, tol,
                  schedule, P, seed)


def reverify_counterexample(report: GenConvexReport, F: VectorFunction, x_hat,
                            schedule: StepSchedule = StepSchedule(),
                            P: PerturbationSet | None = None, seed: int = 20240601) -> bool:
    """Recompute every recorded violation from scratch."""
    if report.counterexample is None:
        return False
    xh = as_point(x_hat, F.n)
    P = dini.perturbation_set(F.n, seed) if P is None else P
    ce = report.counterexample
    dF = F(ce["x"]) - F(xh)
    for row in ce["violations"]:
        D = np.array([dini.modified_upper_dini(f, xh, row["eta"], schedule, P).value
                      for f in F.components])
        if violation_slack(report.property, float(row["w"] @ D), float(row["w"] @ dF),
                           ce["tol"]) <= 0:
            return False
    return bool(ce["violations"])


@dataclass(frozen=True)
class PourciauReport:
    passed: bool
    f_hat: float
    grid_min: float
    argmin: np.ndarray
    slackness_gap: float
    skipped: int
    resolution: int
    tol: float

    def to_dict(self) -> dict:
        return {"passed": self.passed, "f_hat": self.f_hat, "grid_min": self.grid_min,
                "argmin": self.argmin.tolist(), "slackness_gap": self.slackness_gap,
                "skipped": self.skipped, "resolution": self.resolution, "tol": self.tol}


def pourciau_verify(p: ProblemSpec, x_hat, cert, grid_resolution: int = 101,
                    tol: float = 1e-6) -> PourciauReport:
    """Grid check that ``x_hat`` minimizes ``f = sum lam_i f_i`` over the box.

    ``cert`` is a certificate with ``lambdas`` or the multiplier vector
    itself. Grid points outside an expression's domain are skipped.
    """
    if p.sense != MIN:
        raise ValueError("pourciau_verify expects a MIN problem")
    lam = np.asarray(getattr(cert, "lambdas", cert), float)
    x = as_point(x_hat, p.n)
    axes = grid_axes(p, grid_resolution)
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.n)
    total = np.zeros(X.shape[0])
    f_hat = 0.0
    for li, f in zip(lam, p.functions):
        if li != 0.0:
            total += li * evaluate_many(f, X, strict=False)
            f_hat += li * evaluate(f, x)
    ok = np.isfinite(total)
    i = int(np.argmin(np.where(ok, total, np.inf)))
    scale = tol * (1.0 + abs(f_hat))
    gap = abs(lam[0] * evaluate(p.objective, x) - f_hat)
    passed = bool(f_hat <= total[i] + scale and gap <= scale)
    return PourciauReport(passed, float(f_hat), float(total[i]), X[i].copy(), float(gap),
                          int((~ok).sum()), grid_resolution, float(scale))
