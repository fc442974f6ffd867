"""Constrained problem definitions and their JSON document form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DiniKKTError, FormatError
from .exprcore import Expr, Neg, max_var_index, parse, to_text

MAX, MIN = "max", "min"


@dataclass(frozen=True)
class ProblemSpec:
    """``max f0 s.t. f_i >= 0`` (MAX) or ``min f0 s.t. f_i <= 0`` (MIN), plus ``h_j = 0``."""

    name: str
    n: int
    sense: str
    objective: Expr
    inequalities: tuple = ()
    equalities: tuple = ()
    lo: np.ndarray = field(default=None, compare=False)
    hi: np.ndarray = field(default=None, compare=False)
    candidate: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.sense not in (MAX, MIN):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")
        if self.n < 1:
            raise ValueError("dimension must be positive")
        lo = np.full(self.n, -10.0) if self.lo is None else np.asarray(self.lo, float)
        hi = np.full(self.n, 10.0) if self.hi is None else np.asarray(self.hi, float)
        if lo.shape != (self.n,) or hi.shape != (self.n,) or np.any(lo > hi):
            raise ValueError("domain box must be nonempty with one bound per coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        for e in self.functions + self.equalities:
            if max_var_index(e) > self.n:
                raise ValueError(f"expression {to_text(e)} references a variable beyond x{self.n}")

    @property
    def m(self) -> int:
        return len(self.inequalities)

    @property
    def k(self) -> int:
        return len(self.equalities)

    @property
    def functions(self) -> tuple:
        """``(f0, f1, ..., fm)``."""
        return (self.objective,) + self.inequalities

    @property
    def sign(self) -> float:
        """+1 for MAX, -1 for MIN: multiplies table entries into MAX form."""
        return 1.0 if self.sense == MAX else -1.0

    def negated(self) -> "ProblemSpec":
        """Mirror problem: MAX (f0, f_i >= 0) <-> MIN (-f0, -f_i <= 0)."""
        return ProblemSpec(
            name=f"{self.name} (negated)",
            n=self.n,
            sense=MIN if self.sense == MAX else MAX,
            objective=Neg(self.objective),
            inequalities=tuple(Neg(f) for f in self.inequalities),
            equalities=self.equalities,
            lo=self.lo, hi=self.hi, candidate=self.candidate,
        )

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "n": self.n,
            "sense": self.sense,
            "objective": to_text(self.objective),
            "inequalities": [to_text(f) for f in self.inequalities],
            "equalities": [to_text(h) for h in self.equalities],
            "domain": {"lo": self.lo.tolist(), "hi": self.hi.tolist()},
        }
        if self.candidate is not None:
            d["candidate"] = np.asarray(self.candidate).tolist()
        return d


def _expr_field(text, pointer: str, n: int) -> Expr:
    if not isinstance(text, str):
        raise FormatError(pointer, "expected an expression string")
    try:
        e = parse(text)
    except DiniKKTError as exc:
        exc.pointer = pointer
        exc.args = (f"{pointer}: {exc}",)
        raise
    if max_var_index(e) > n:
        raise FormatError(pointer, f"references x{max_var_index(e)} but n = {n}")
    return e


def _number_list(value, pointer: str, n: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise FormatError(pointer, f"expected a list of {n} numbers")
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise FormatError(f"{pointer}/{i}", "expected a number")
    return np.asarray(value, float)


def problem_from_dict(doc) -> ProblemSpec:
    """Validate a problem document; errors carry a JSON-pointer path."""
    if not isinstance(doc, dict):
        raise FormatError("", "problem document must be a JSON object")
    for key in ("n", "sense", "objective"):
        if key not in doc:
            raise FormatError(f"/{key}", "missing required field")
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise FormatError("/n", "expected a positive integer")
    sense = doc["sense"]
    if not isinstance(sense, str) or sense.lower() not in (MAX, MIN):
        raise FormatError("/sense", "expected 'max' or 'min'")
    objective = _expr_field(doc["objective"], "/objective", n)
    ineqs, eqs = [], []
    for key, out in (("inequalities", ineqs), ("equalities", eqs)):
        items = doc.get(key, [])
        if not isinstance(items, list):
            raise FormatError(f"/{key}", "expected a list of expression strings")
        for i, text in enumerate(items):
            out.append(_expr_field(text, f"/{key}/{i}", n))
    lo = hi = None
    if "domain" in doc:
        dom = doc["domain"]
        if not isinstance(dom, dict):
            raise FormatError("/domain", "expected an object with lo and hi")
        for key in ("lo", "hi"):
            if key not in dom:
                raise FormatError(f"/domain/{key}", "missing required field")
        lo = _number_list(dom["lo"], "/domain/lo", n)
        hi = _number_list(dom["hi"], "/domain/hi", n)
        if np.any(lo > hi):
            raise FormatError("/domain", "lo must not exceed hi")
    candidate = None
    if doc.get("candidate") is not None:
        candidate = _number_list(doc["candidate"], "/candidate", n)
    name = doc.get("name", "unnamed")
    if not isinstance(name, str):
        raise FormatError("/name", "expected a string")
    try:
        return ProblemSpec(name, n, sense.lower(), objective, tuple(ineqs), tuple(eqs),
                           lo, hi, candidate)
    except ValueError as exc:
        raise FormatError("", str(exc)) from exc
