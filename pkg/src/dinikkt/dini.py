"""Sampled directional derivatives of black-box scalar functions.

Every estimator evaluates difference quotients on a geometric step
schedule ``t_j = t0 * ratio**j`` and reads liminf/limsup off the last
``tail`` quotients. Estimates of the modified lower derivative are upper
bounds of the true infimum (finite perturbation sample); estimates of the
modified upper derivative are lower bounds of the true supremum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DomainError
from .exprcore import Expr, Neg, as_point, evaluate_many

BatchFunction = Callable[[np.ndarray], np.ndarray]
Function = Union[Expr, BatchFunction]

DEFAULT_CONV_TOL = 1e-6
PERTURBATION_SCALES = (0.25, 1.0, 4.0, 16.0)
CLARKE_RADII = (1e-6, 1e-7, 1e-8)


@dataclass(frozen=True)
class StepSchedule:
    t0: float = 1e-2
    ratio: float = 0.5
    count: int = 20
    tail: int = 6

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if self.count < 8:
            raise ValueError("count must be at least 8")
        if not 4 <= self.tail <= self.count:
            raise ValueError("tail must satisfy 4 <= tail <= count")
        if not self.t0 * self.ratio ** (self.count - 1) > 0:
            raise ValueError("smallest step underflows")

    @property
    def steps(self) -> np.ndarray:
        return self.t0 * self.ratio ** np.arange(self.count)

    def rescaled(self, alpha: float) -> "StepSchedule":
        """Schedule probing the same points along ``alpha * u``."""
        return StepSchedule(self.t0 / alpha, self.ratio, self.count, self.tail)

    @classmethod
    def parse(cls, text: str) -> "StepSchedule":
        t0, r, count, tail = text.split(",")
        return cls(float(t0), float(r), int(count), int(tail))

    def as_dict(self) -> dict:
        return {"t0": self.t0, "ratio": self.ratio, "count": self.count, "tail": self.tail}


@dataclass(frozen=True)
class PerturbationSet:
    vectors: np.ndarray  # (K, n), row 0 is the zero vector
    seed: int | None = None

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if not np.all(np.isfinite(v)):
            raise ValueError("perturbation vectors must be finite")
        if not np.any(np.all(v == 0.0, axis=1)):
            raise ValueError("a perturbation set must contain the zero vector")
        object.__setattr__(self, "vectors", v)

    @property
    def always_contains_zero(self) -> bool:
        return True

    def __len__(self):
        return self.vectors.shape[0]


@dataclass(frozen=True)
class DirectionalEstimate:
    value: float
    tail_min: float
    tail_max: float
    converged: bool
    quotients: tuple = field(default=(), repr=False)

    @property
    def spread(self) -> float:
        return self.tail_max - self.tail_min


@dataclass(frozen=True)
class ModifiedEstimate:
    value: float
    argext_w: np.ndarray
    inner_estimates: dict = field(default_factory=dict, repr=False)
    converged: bool = True
    width: float = 0.0


def _batch(f: Function) -> BatchFunction:
    if callable(f):
        return f
    return lambda X: evaluate_many(f, X)


def negated(f: Function) -> Function:
    """``-f``; exact sample-wise negation for both expressions and callables."""
    if hasattr(f, "__dataclass_fields__"):
        return Neg(f)
    return lambda X: -f(X)


def _eval_rows(F: BatchFunction, pts: np.ndarray, dirs: np.ndarray, count: int):
    try:
        return np.asarray(F(pts), dtype=float)
    except DomainError:
        # locate the first offending direction for the error report
        for i in range(dirs.shape[0]):
            try:
                F(pts[i * count:(i + 1) * count])
            except DomainError as exc:
                err = DomainError(f"{exc} (direction {dirs[i].tolist()})")
                err.direction = dirs[i].copy()
                raise err from exc
        raise


def _quotients(F: BatchFunction, base: np.ndarray, dirs: np.ndarray,
               sched: StepSchedule, shift: np.ndarray | None = None) -> np.ndarray:
    """Quotient matrix ``Q[i, j]`` for direction ``dirs[i]`` and step ``t_j``.

    Without ``shift``: ``(F(base + t d) - F(base)) / t``. With ``shift``
    (one row per direction): ``(F(base + t d) - F(base + t s)) / t``.
    Zero directions give identically zero rows.
    """
    t = sched.steps
    k = dirs.shape[0]
    pts = base[None, None, :] + t[None, :, None] * dirs[:, None, :]
    vals = _eval_rows(F, pts.reshape(k * t.size, -1), dirs, t.size).reshape(k, t.size)
    if shift is None:
        f0 = float(np.asarray(F(base[None, :]), dtype=float)[0])
        Q = (vals - f0) / t[None, :]
    else:
        spts = base[None, None, :] + t[None, :, None] * shift[:, None, :]
        svals = _eval_rows(F, spts.reshape(k * t.size, -1), shift, t.size).reshape(k, t.size)
        Q = (vals - svals) / t[None, :]
    zero = np.all(dirs == 0.0, axis=1)
    if shift is not None:
        zero &= np.all(shift == 0.0, axis=1)
    Q[zero] = 0.0
    return Q


def _estimate(row: np.ndarray, sched: StepSchedule, upper: bool,
              conv_tol: float) -> DirectionalEstimate:
    tail = row[-sched.tail:]
    lo, hi = float(tail.min()), float(tail.max())
    value = hi if upper else lo
    return DirectionalEstimate(
        value=value,
        tail_min=lo,
        tail_max=hi,
        converged=bool(hi - lo <= conv_tol * (1.0 + abs(value))),
        quotients=tuple(zip(sched.steps.tolist(), row.tolist())),
    )


def _zero_estimate(sched: StepSchedule) -> DirectionalEstimate:
    return DirectionalEstimate(0.0, 0.0, 0.0, True,
                               tuple((t, 0.0) for t in sched.steps.tolist()))


def _prep(x, u):
    x = as_point(x)
    u = as_point(u, x.size)
    return x, u


def lower_dini(f: Function, x, u, s: StepSchedule = StepSchedule(),
               conv_tol: float = DEFAULT_CONV_TOL) -> DirectionalEstimate:
    """Lower Dini derivative: minimum of the tail quotients."""
    x, u = _prep(x, u)
    if not np.any(u):
        return _zero_estimate(s)
    row = _quotients(_batch(f), x, u[None, :], s)[0]
    return _estimate(row, s, upper=False, conv_tol=conv_tol)


def upper_dini(f: Function, x, u, s: StepSchedule = StepSchedule(),
               conv_tol: float = DEFAULT_CONV_TOL) -> DirectionalEstimate:
    """Upper Dini derivative: maximum of the tail quotients."""
    x, u = _prep(x, u)
    if not np.any(u):
        return _zero_estimate(s)
    row = _quotients(_batch(f), x, u[None, :], s)[0]
    return _estimate(row, s, upper=True, conv_tol=conv_tol)


def _tail_ext(Q: np.ndarray, sched: StepSchedule, upper: bool):
    tail = Q[:, -sched.tail:]
    lo, hi = tail.min(axis=1), tail.max(axis=1)
    return (hi if upper else lo), hi - lo


def modified_many(f: Function, x, U, s: StepSchedule, P: PerturbationSet,
                  upper: bool = False, conv_tol: float = DEFAULT_CONV_TOL) -> dict:
    """Modified Dini derivatives for a whole direction list at once.

    Returns a dict of arrays indexed by direction: ``value``, ``arg``
    (index into ``P`` of the extremizing perturbation), ``width`` (summed
    tail spreads of the two inner estimates at the extremizer) and
    ``converged``.
    """
    x = as_point(x)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    W = P.vectors
    F = _batch(f)
    ext_w, spread_w = _tail_ext(_quotients(F, x, W, s), s, upper)
    shifted = (U[:, None, :] + W[None, :, :]).reshape(-1, x.size)
    ext_uw, spread_uw = _tail_ext(_quotients(F, x, shifted, s), s, upper)
    ext_uw = ext_uw.reshape(U.shape[0], len(P))
    spread_uw = spread_uw.reshape(U.shape[0], len(P))
    diff = ext_uw - ext_w[None, :]
    arg = diff.argmax(axis=1) if upper else diff.argmin(axis=1)
    rows = np.arange(U.shape[0])
    value = diff[rows, arg]
    zero_u = ~np.any(U != 0.0, axis=1)
    value[zero_u] = 0.0
    width = spread_uw[rows, arg] + spread_w[arg]
    width[zero_u] = 0.0
    converged = width <= conv_tol * (1.0 + np.abs(value))
    return {"value": value, "arg": arg, "width": width, "converged": converged}


def _modified(f, x, u, s, P, upper, conv_tol) -> ModifiedEstimate:
    x, u = _prep(x, u)
    if not np.any(u):
        return ModifiedEstimate(0.0, np.zeros_like(u), {}, True, 0.0)
    F = _batch(f)
    W = P.vectors
    Qw = _quotients(F, x, W, s)
    Quw = _quotients(F, x, u[None, :] + W, s)
    inner = {
        i: (_estimate(Quw[i], s, upper, conv_tol), _estimate(Qw[i], s, upper, conv_tol))
        for i in range(len(P))
    }
    diff = np.array([a.value - b.value for a, b in inner.values()])
    i = int(diff.argmax() if upper else diff.argmin())
    a, b = inner[i]
    width = a.spread + b.spread
    return ModifiedEstimate(
        value=float(diff[i]),
        argext_w=W[i].copy(),
        inner_estimates=inner,
        converged=bool(width <= conv_tol * (1.0 + abs(diff[i]))),
        width=float(width),
    )


def modified_lower_dini(f: Function, x, u, s: StepSchedule, P: PerturbationSet,
                        conv_tol: float = DEFAULT_CONV_TOL) -> ModifiedEstimate:
    """min over w in P of ``lower(u + w) - lower(w)``."""
    return _modified(f, x, u, s, P, False, conv_tol)


def modified_upper_dini(f: Function, x, u, s: StepSchedule, P: PerturbationSet,
                        conv_tol: float = DEFAULT_CONV_TOL) -> ModifiedEstimate:
    """max over w in P of ``upper(u + w) - upper(w)``."""
    return _modified(f, x, u, s, P, True, conv_tol)


def clarke_derivative(f: Function, x, u, s: StepSchedule = StepSchedule(),
                      base_points=None, seed: int = 0,
                      conv_tol: float = DEFAULT_CONV_TOL,
                      shifts: PerturbationSet | None = None) -> DirectionalEstimate:
    """Max over base points ``y`` of the upper tail of ``(f(y+tu)-f(y))/t``.

    ``base_points`` defaults to :func:`clarke_base_points`. With ``shifts``
    the moving base points ``y = x + t w`` (``w`` in ``shifts``) are sampled
    as well; they tend to ``x`` with ``t``, so every Michel-Penot quotient
    over the same set is also a Clarke quotient.
    """
    x, u = _prep(x, u)
    if not np.any(u):
        return _zero_estimate(s)
    Y = clarke_base_points(x, seed) if base_points is None else np.atleast_2d(
        np.asarray(base_points, dtype=float))
    F = _batch(f)
    t = s.steps
    k = Y.shape[0]
    pts = Y[:, None, :] + t[None, :, None] * u[None, None, :]
    dirs = np.repeat(u[None, :], k, axis=0)
    vals = _eval_rows(F, pts.reshape(k * t.size, -1), dirs, t.size).reshape(k, t.size)
    base = np.asarray(F(Y), dtype=float)
    Q = (vals - base[:, None]) / t[None, :]
    if shifts is not None:
        W = shifts.vectors
        Q = np.vstack([Q, _quotients(F, x, u[None, :] + W, s, shift=W)])
    ups = Q[:, -s.tail:].max(axis=1)
    i = int(ups.argmax())
    return _estimate(Q[i], s, upper=True, conv_tol=conv_tol)


def michel_penot(f: Function, x, u, s: StepSchedule, P: PerturbationSet,
                 conv_tol: float = DEFAULT_CONV_TOL) -> DirectionalEstimate:
    """Max over y in P of the upper tail of ``(f(x+t(u+y)) - f(x+ty))/t``."""
    x, u = _prep(x, u)
    if not np.any(u):
        return _zero_estimate(s)
    W = P.vectors
    Q = _quotients(_batch(f), x, u[None, :] + W, s, shift=W)
    ups = Q[:, -s.tail:].max(axis=1)
    i = int(ups.argmax())
    return _estimate(Q[i], s, upper=True, conv_tol=conv_tol)


def direction_set(n: int, count: int, seed: int) -> np.ndarray:
    """``±e_1..±e_n`` followed by seeded random unit vectors, no duplicates.

    In one dimension only the two axis directions exist, so the result is
    shorter than ``count`` whenever ``count > 2``.
    """
    if count < 2 * n:
        raise ValueError("count must be at least 2n")
    out = []
    for i in range(n):
        for sign in (1.0, -1.0):
            e = np.zeros(n)
            e[i] = sign
            out.append(e)
    rng = np.random.default_rng(seed)
    attempts = 0
    while len(out) < count and attempts < 50 * count:
        attempts += 1
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
        if norm < 1e-8:
            continue
        v = v / norm
        if any(np.max(np.abs(v - w)) <= 1e-12 for w in out):
            continue
        out.append(v)
    return np.array(out)


def perturbation_set(n: int, seed: int, scales=PERTURBATION_SCALES) -> PerturbationSet:
    """``{0} ∪ {±s v : v in direction_set(n, 2n+8, seed), s in scales}``."""
    vecs = [np.zeros(n)]
    seen = {tuple(vecs[0])}
    for v in direction_set(n, 2 * n + 8, seed):
        for sc in scales:
            for w in (sc * v, -sc * v):
                key = tuple(w.tolist())
                if key not in seen:
                    seen.add(key)
                    vecs.append(w)
    return PerturbationSet(np.array(vecs), seed)


def clarke_base_points(x, seed: int, radii=CLARKE_RADII) -> np.ndarray:
    """``{x} ∪ {x + rho v : v in direction_set(n, 2n+4, seed), rho in radii}``."""
    x = as_point(x)
    pts = [x]
    for rho in radii:
        for v in direction_set(x.size, 2 * x.size + 4, seed):
            pts.append(x + rho * v)
    return np.array(pts)


def lipschitz_estimate(f: Function, x, radius: float = 1e-3, samples: int = 64,
                       seed: int = 0) -> float:
    """Largest sampled slope between random pairs in a ball around ``x``.

    Diagnostic only: black-box samples cannot certify a Lipschitz bound.
    """
    x = as_point(x)
    rng = np.random.default_rng(seed)
    A = x + radius * rng.uniform(-1, 1, size=(samples, x.size))
    B = x + radius * rng.uniform(-1, 1, size=(samples, x.size))
    F = _batch(f)
    fa, fb = np.asarray(F(A)), np.asarray(F(B))
    dist = np.linalg.norm(A - B, axis=1)
    ok = dist > 0
    return float(np.max(np.abs(fa - fb)[ok] / dist[ok])) if np.any(ok) else 0.0
