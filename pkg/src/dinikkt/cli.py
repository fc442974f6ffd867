"""Command line front end: ``dinikkt <command> ...``.

Exit codes: 0 success, 2 refutation (no certificate), 3 infeasible
candidate, 4 input error, 5 internal defect.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import certify, convexity, corpus, dini, equality, oracle
from .errors import (DomainError, ExpressionSyntaxError,
                     FormatError, InfeasibleCandidate, NoFeasiblePoint, UnknownIdentifier)
from .exprcore import as_point, evaluate, grad_fd, parse
from .lp import LinearSystem, lp_feasible
from .problem import MAX, ProblemSpec, problem_from_dict

EXIT_OK, EXIT_REFUTED, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_DEFECT = 0, 2, 3, 4, 5
DEFAULT_SEED = 20240601


class InputError(Exception):
    """Bad command line input; maps to exit code 4."""


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        return "0.1.0"


def load_problem(path) -> ProblemSpec:
    """Read and validate a problem document from ``path``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError("", f"invalid JSON: {exc}") from exc
    return problem_from_dict(doc)


def _vector(text: str, n: int | None, what: str) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError as exc:
        raise InputError(f"{what} must be comma-separated numbers") from exc
    if n is not None and v.size != n:
        raise InputError(f"{what} needs {n} coordinates, got {v.size}")
    return v


def _candidate(p: ProblemSpec, args) -> np.ndarray:
    if args.at is not None:
        return _vector(args.at, p.n, "--at")
    if p.candidate is None:
        raise InputError("no candidate: pass --at or add 'candidate' to the problem file")
    return as_point(p.candidate, p.n)


def _settings(args, n: int):
    schedule = dini.StepSchedule.parse(args.schedule) if args.schedule else dini.StepSchedule()
    if args.directions is not None:
        if args.directions < 2 * n:
            raise InputError(f"--directions must be at least {2 * n}")
        U = dini.direction_set(n, args.directions, args.seed)
    else:
        U = certify.default_directions(n, args.seed)
    return schedule, U, dini.perturbation_set(n, args.seed)


def _oracle_check(p: ProblemSpec, x: np.ndarray) -> dict:
    if p.n > 3:
        return {"skipped": "grid oracle covers n <= 3 only"}
    res = {1: 401, 2: 201, 3: 61}[p.n]
    try:
        g = oracle.grid_optimize(p, res)
    except NoFeasiblePoint as exc:
        return {"resolution": res, "error": str(exc)}
    fx = evaluate(p.objective, x)
    better = (g.value - fx) if p.sense == MAX else (fx - g.value)
    # first-order allowance for the grid spacing
    slack = float(np.abs(grad_fd(p.objective, x)).sum() * g.spacing.max() + 1e-9)
    return {"resolution": res, "grid_x": g.x.tolist(), "grid_value": g.value,
            "candidate_value": fx, "grid_improves_by": float(better),
            "candidate_not_beaten": bool(better <= slack)}


def cmd_eval(args) -> tuple[int, dict]:
    e = parse(args.expression)
    x = _vector(args.at, None, "--at")
    return EXIT_OK, {"expression": args.expression, "at": x.tolist(), "value": evaluate(e, x)}


def cmd_derivative(args) -> tuple[int, dict]:
    e = parse(args.expression)
    x = _vector(args.at, None, "--at")
    u = _vector(args.dir, x.size, "--dir")
    schedule = dini.StepSchedule.parse(args.schedule) if args.schedule else dini.StepSchedule()
    P = dini.perturbation_set(x.size, args.seed)
    est = {
        "lower": dini.lower_dini(e, x, u, schedule),
        "upper": dini.upper_dini(e, x, u, schedule),
        "modified_lower": dini.modified_lower_dini(e, x, u, schedule, P),
        "modified_upper": dini.modified_upper_dini(e, x, u, schedule, P),
        "michel_penot": dini.michel_penot(e, x, u, schedule, P),
        "clarke": dini.clarke_derivative(e, x, u, schedule, seed=args.seed, shifts=P),
    }
    out = {k: {"value": v.value, "converged": v.converged} for k, v in est.items()}
    return EXIT_OK, {"expression": args.expression, "at": x.tolist(), "direction": u.tolist(),
                     "schedule": schedule.as_dict(), "estimates": out}


def _tolerances(args) -> dict:
    return {"tol_stat": args.tol_stat, "tol_act": args.tol_act, "tol_pos": certify.TOL_POS}


def cmd_certify(args) -> tuple[int, dict]:
    p = load_problem(args.problem)
    if p.equalities:
        raise InputError("problem has equalities: use certify-eq")
    x = _candidate(p, args)
    schedule, U, P = _settings(args, p.n)
    o = certify.analyze(p, x, seed=args.seed, schedule=schedule, U=U, P=P,
                        tol_act=args.tol_act, tol_stat=args.tol_stat)
    report = {
        "problem": p.to_dict(),
        "candidate": x.tolist(),
        "active_set": o.active.to_dict(),
        "derivative_table": o.table.summary(),
        "a_index": None if o.a_index is None else o.a_index.to_dict(),
        "slater_witness": None if o.slater is None else o.slater.tolist(),
        "certificates": {"fritz_john": o.fritz_john.to_dict(),
                         "kkt": None if o.kkt is None else o.kkt.to_dict()},
        "verification": None if o.verification is None else o.verification.checks,
        "oracle": _oracle_check(p, x),
        "settings": {**o.settings, **_tolerances(args)},
    }
    if o.certified:
        kind = "KKT" if isinstance(o.kkt, certify.MultiplierCertificate) else "Fritz-John"
        report["verdict"] = (f"{kind} certificate found: consistent with the multiplier rule "
                             "on the sampled directions")
        return EXIT_OK, report
    report["verdict"] = ("NoCertificate: the sampled directions refute the multiplier rule "
                         "(candidate not optimal, assumptions violated, or sample inadequate)")
    return EXIT_REFUTED, report


def cmd_certify_eq(args) -> tuple[int, dict]:
    p = load_problem(args.problem)
    x = _candidate(p, args)
    schedule, U, P = _settings(args, p.n)
    cert, dec = equality.equality_certificate(p, x, U, schedule, P, seed=args.seed,
                                              tol_act=args.tol_act, tol_stat=args.tol_stat)
    report = {
        "problem": p.to_dict(),
        "candidate": x.tolist(),
        "jacobian": dec.J.tolist(),
        "rank": dec.rank,
        "surjective": dec.surjective,
        "certificates": {"equality": cert.to_dict()},
        "oracle": _oracle_check(p, x),
        "settings": {"seed": args.seed, "schedule": schedule.as_dict(),
                     "directions": int(U.shape[0]), **_tolerances(args)},
    }
    if isinstance(cert, equality.EqualityCertificate):
        report["verdict"] = ("equality certificate found (" + cert.branch + "): consistent with "
                             "the multiplier rule on the sampled directions")
        return EXIT_OK, report
    report["verdict"] = "NoCertificate: the sampled directions refute the multiplier rule"
    return EXIT_REFUTED, report


def cmd_pseudoconvex(args) -> tuple[int, dict]:
    p = load_problem(args.problem)
    x = _candidate(p, args)
    # the property concerns minimization data; MAX problems are negated first
    q = p if p.sense != MAX else p.negated()
    F = convexity.VectorFunction(q.functions, p.n)
    rng = np.random.default_rng(args.seed)
    samples = p.lo + (p.hi - p.lo) * rng.random((args.samples, p.n))
    schedule = dini.StepSchedule.parse(args.schedule) if args.schedule else dini.StepSchedule()
    inv = convexity.invex_check(F, x, samples, schedule=schedule, seed=args.seed)
    pse = convexity.pseudoconvex_check(F, x, samples, schedule=schedule, seed=args.seed)
    report = {"problem": p.to_dict(), "candidate": x.tolist(),
              "invex": inv.to_dict(), "pseudoconvex": pse.to_dict(),
              "settings": {"seed": args.seed, "samples": args.samples,
                           "schedule": schedule.as_dict()}}
    ok = pse.verdict == convexity.CONSISTENT
    report["verdict"] = ("pseudoconvexity consistent on the samples" if ok else
                         "no witness among the candidate directions for some sample")
    return (EXIT_OK if ok else EXIT_REFUTED), report


def cmd_oracle_solve(args) -> tuple[int, dict]:
    p = load_problem(args.problem)
    g = oracle.grid_optimize(p, args.resolution)
    return EXIT_OK, {"problem": p.to_dict(), "x_hat": g.x.tolist(), "value": g.value,
                     "feasible_points": g.feasible_count, "skipped": g.skipped,
                     "resolution": args.resolution}


def run_selftest(seed: int) -> dict:
    """Deterministic corpus checks; the report holds no timings."""
    checks = {}
    schedule = dini.StepSchedule()

    def record(name, ok, detail=None):
        checks[name] = {"passed": bool(ok), "detail": detail}

    # derivative chain
    worst = 0
    for text in corpus.NONSMOOTH_EXPRESSIONS:
        e = parse(text)
        P = dini.perturbation_set(2, seed)
        U = dini.direction_set(2, 8, seed)
        for x in corpus.NONSMOOTH_POINTS:
            for u in U:
                lo = dini.lower_dini(e, x, u, schedule).value
                up = dini.upper_dini(e, x, u, schedule).value
                ml = dini.modified_lower_dini(e, x, u, schedule, P).value
                mu = dini.modified_upper_dini(e, x, u, schedule, P).value
                mp = dini.michel_penot(e, x, u, schedule, P).value
                cl = dini.clarke_derivative(e, x, u, schedule, seed=seed, shifts=P).value
                if not (ml <= lo <= up <= mu and mu <= mp + 1e-6 and mp <= cl + 1e-6):
                    worst += 1
    record("derivative_chain", worst == 0, {"violations": worst})

    bad = 0
    for text, x0, pw in corpus.kink_cases():
        e = parse(text)
        P = dini.perturbation_set(1, seed)
        for u in corpus.KINK_DIRECTIONS:
            got = {"lower": dini.lower_dini(e, [x0], [u], schedule).value,
                   "upper": dini.upper_dini(e, [x0], [u], schedule).value,
                   "modified_lower": dini.modified_lower_dini(e, [x0], [u], schedule, P).value,
                   "modified_upper": dini.modified_upper_dini(e, [x0], [u], schedule, P).value}
            bad += sum(abs(v - oracle.dini_1d_exact(pw, u, k)) > 1e-6 for k, v in got.items())
    record("one_dimensional_oracle", bad == 0, {"mismatches": bad})

    results = []
    for d in corpus.kkt_problems():
        o = certify.analyze(d["problem"], d["x_hat"], seed=seed)
        lam = o.best.lambdas if o.certified else None
        ok = o.certified and (d["slater"] == (o.slater is not None))
        if ok and d["lambdas"] is not None and d["problem"].name in ("linear pair",
                                                                    "concave with tangent constraint"):
            ok = bool(np.allclose(lam, d["lambdas"], atol=1e-9))
        results.append({"name": d["problem"].name, "passed": bool(ok),
                        "lambdas": None if lam is None else np.round(lam, 9).tolist()})
    record("kkt_corpus", all(r["passed"] for r in results), results)

    refuted = [not certify.analyze(p, x, seed=seed).certified
               for p, x in corpus.non_optimal_points()]
    record("non_optimal_refuted", all(refuted), refuted)

    eq = []
    for d in corpus.equality_problems():
        cert, _ = equality.equality_certificate(d["problem"], d["x_hat"], seed=seed)
        ok = isinstance(cert, equality.EqualityCertificate) and np.allclose(
            cert.w0, d["w0"], atol=1e-4)
        eq.append({"name": d["problem"].name, "passed": bool(ok)})
    record("equality_corpus", all(r["passed"] for r in eq), eq)

    rng = np.random.default_rng(seed)
    disagree = 0
    for _ in range(200):
        sysm = _random_lp(rng)
        disagree += lp_feasible(sysm).feasible != oracle.lp_vertex_enumerate(sysm).feasible
    record("lp_cross_check", disagree == 0, {"disagreements": int(disagree)})

    return {"checks": checks, "all_passed": all(c["passed"] for c in checks.values())}


def _random_lp(rng) -> LinearSystem:
    d = int(rng.integers(1, 5))
    m = int(rng.integers(1, 7))
    k = int(rng.integers(0, 2))
    return LinearSystem(d, A_ub=rng.normal(size=(m, d)), b_ub=rng.normal(size=m),
                        A_eq=rng.normal(size=(k, d)), b_eq=rng.normal(size=k),
                        nonneg=rng.random(d) < 0.5)


def cmd_selftest(args) -> tuple[int, dict]:
    out = run_selftest(args.seed)
    return (EXIT_OK if out["all_passed"] else EXIT_DEFECT), out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dinikkt", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--schedule", help="t0,ratio,count,tail")
    common.add_argument("--out", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", parents=[common], help="evaluate an expression")
    p.add_argument("expression")
    p.add_argument("--at", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("derivative", parents=[common], help="all directional estimates")
    p.add_argument("expression")
    p.add_argument("--at", required=True)
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_derivative)

    for name, func, hint in (("certify", cmd_certify, "multiplier certificate"),
                             ("certify-eq", cmd_certify_eq, "equality multiplier certificate")):
        p = sub.add_parser(name, parents=[common], help=hint)
        p.add_argument("problem")
        p.add_argument("--at")
        p.add_argument("--tol-stat", type=float, default=certify.TOL_STAT)
        p.add_argument("--tol-act", type=float, default=certify.TOL_ACT)
        p.add_argument("--directions", type=int)
        p.set_defaults(func=func)

    p = sub.add_parser("pseudoconvex", parents=[common], help="sampled generalized convexity")
    p.add_argument("problem")
    p.add_argument("--at")
    p.add_argument("--samples", type=int, default=16)
    p.set_defaults(func=cmd_pseudoconvex)

    p = sub.add_parser("oracle-solve", parents=[common], help="brute-force grid optimum")
    p.add_argument("problem")
    p.add_argument("--resolution", type=int, default=201)
    p.set_defaults(func=cmd_oracle_solve)

    p = sub.add_parser("selftest", parents=[common], help="run the corpus checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def _emit(report: dict, out: str | None):
    text = json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _execute(argv):
    base = {"tool": "dinikkt", "version": _tool_version(),
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        return EXIT_INPUT, {**base, "error": {"type": "InputError", "message": str(exc)},
                            "exit_code": EXIT_INPUT}, None
    base.update(command=args.command, seed=args.seed)
    try:
        code, body = args.func(args)
    except InfeasibleCandidate as exc:
        code, body = EXIT_INFEASIBLE, {"error": {"type": "InfeasibleCandidate",
                                                 "violated": exc.violated,
                                                 "message": str(exc)}}
    except (FormatError, ExpressionSyntaxError, UnknownIdentifier, DomainError, InputError,
            NoFeasiblePoint, OSError, ValueError) as exc:
        err = {"type": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "pointer", None) is not None:
            err["pointer"] = exc.pointer
        code, body = EXIT_INPUT, {"error": err}
    except Exception as exc:  # noqa: BLE001 - anything else is a defect
        code, body = EXIT_DEFECT, {"error": {"type": type(exc).__name__, "message": str(exc),
                                             "defect": True}}
    return code, {**base, **body, "exit_code": code}, args.out


def run(argv=None) -> tuple[int, dict]:
    """Parse ``argv``, dispatch, and return ``(exit_code, report)``."""
    code, report, _ = _execute(argv)
    return code, report


def main(argv=None) -> int:
    code, report, out = _execute(argv)
    _emit(report, out)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
