"""Execute a scenario's checks in dependency order and assemble the report."""

from __future__ import annotations

import json
import time
from importlib import resources

import jsonschema
import numpy as np
from gmpy2 import mpq

from . import __version__
from .abelian import kahler_form, lefschetz_rank, validate
from .analysis import (
    anisotropy_check,
    modified_approach_probe,
    sampson_iota,
    split_omega,
    theorem1,
)
from .errors import BudgetExceeded, DegenerateCase, DegenerateSplit, HodgeProbeError, InvariantViolation
from .exact_linalg import Scalar, as_matrix, format_matrix, format_scalar, matrices_equal, parse_scalar
from .exterior import KForm, power, wedge
from .scenario import CHECKS, Scenario
from .weil import (
    build_weil_jacobian,
    contraction_matrix,
    custom_surjection,
    psi,
    pullback,
    sampson_projection,
)

DEPENDS = {
    "validate": (),
    "weil": ("validate",),
    "projection": ("weil",),
    "lefschetz": ("validate",),
    "split": ("projection",),
    "theorem1": ("projection",),
    "iota": ("projection",),
    "modified": ("projection",),
}

REFUSALS = (BudgetExceeded, DegenerateCase, DegenerateSplit)


def plan(requested) -> list:
    """Requested checks plus their prerequisites, in canonical order."""
    needed = set()

    def visit(name):
        if name not in needed:
            needed.add(name)
            for dep in DEPENDS[name]:
                visit(dep)

    for name in requested:
        visit(name)
    return [c for c in CHECKS if c in needed]


def jsonable(obj):
    if isinstance(obj, (mpq, Scalar)):
        return format_scalar(obj)
    if isinstance(obj, np.ndarray):
        return format_matrix(obj)
    if isinstance(obj, KForm):
        return {"dim": obj.dim, "degree": obj.degree, "terms": obj.serialize()}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class _Context:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.A = sc.variety_object()
        self.W = None
        self.pi = None
        self._omega = None

    @property
    def omega_hat(self) -> KForm:
        if self._omega is None:
            if self.sc.omega_hat == "gram":
                self._omega = self.W.polarization_form()
            else:
                self._omega = KForm.parse(self.W.dim, 2, self.sc.omega_hat)
        return self._omega


KAHLER_CONVENTION = (
    "omega(e_i, e_j) = E_ij, i.e. omega = sum over i < j of E_ij dx^i ^ dx^j; "
    "summing E_ij dx^i ^ dx^j over all ordered pairs would double every coefficient"
)


def _check_validate(ctx):
    rep = validate(ctx.A)
    data = rep.to_dict()
    if rep.passed:
        data["kahler_form"] = kahler_form(ctx.A)
        data["convention"] = KAHLER_CONVENTION
    return ("pass" if rep.passed else "fail"), data


def _check_weil(ctx):
    try:
        ctx.W = build_weil_jacobian(ctx.A, ctx.sc.p)
    except InvariantViolation as exc:
        return "fail", {"axiom": exc.axiom, "message": str(exc)}
    return "pass", ctx.W.to_dict()


def _check_projection(ctx):
    W, A, p = ctx.W, ctx.A, ctx.sc.p
    try:
        if ctx.sc.surjection == "sampson":
            ctx.pi = sampson_projection(W)
        else:
            M = as_matrix([[parse_scalar(x) for x in row] for row in ctx.sc.surjection])
            ctx.pi = custom_surjection(W.as_variety(), A, M)
    except HodgeProbeError as exc:
        return "fail", {"error": type(exc).__name__, "message": str(exc)}
    data = ctx.pi.to_dict()
    checks = {"complex_linear": True, "surjective": True, "integral": True}
    if ctx.sc.surjection == "sampson":
        Lp = power(kahler_form(A), (p - 1) // 2)
        checks["psi_pullback"] = all(
            psi(pullback(ctx.pi, KForm.basis(A.dim, (j,))), A.dim, p) == wedge(KForm.basis(A.dim, (j,)), Lp)
            for j in range(1, A.dim + 1)
        )
        checks["contraction_agrees"] = matrices_equal(contraction_matrix(A, p), ctx.pi.matrix * ((p + 1) // 2))
    data["checks"] = checks
    return ("pass" if all(checks.values()) else "fail"), data


def _check_lefschetz(ctx):
    r = lefschetz_rank(ctx.A, ctx.sc.p)
    return ("pass" if r == ctx.A.dim else "fail"), {"rank": r, "expected": ctx.A.dim}


def _check_split(ctx):
    om = ctx.omega_hat
    if not anisotropy_check(om, ctx.pi.source_J):
        return "skipped", {"reason": "omega_hat is not anisotropic"}
    try:
        sp = split_omega(ctx.pi, om)
    except DegenerateSplit as exc:
        return "fail", {"error": "DegenerateSplit", "message": str(exc)}
    checks = sp.checks(ctx.pi)
    return ("pass" if all(checks.values()) else "fail"), {
        "checks": checks,
        "fiber_dim": sp.fiber_dim,
        "alpha": sp.alpha,
    }


def _check_theorem1(ctx):
    results, status = [], "pass"
    for q in ctx.sc.q_list:
        try:
            rep = theorem1(ctx.pi, ctx.omega_hat, q, budget=ctx.sc.budget_terms)
        except REFUSALS as exc:
            results.append({"q": q, "refused": type(exc).__name__, "message": str(exc)})
            continue
        entry = rep.to_dict()
        entry["invariant_failures"] = rep.invariant_failures
        if rep.invariant_failures:
            status = "fail"
        results.append(entry)
    if all("refused" in r for r in results):
        status = "refused"
    return status, {"per_q": results}


def _check_iota(ctx):
    try:
        rep = sampson_iota(ctx.W, ctx.pi, [ctx.omega_hat], budget=ctx.sc.budget_terms)
    except REFUSALS as exc:
        return "refused", {"error": type(exc).__name__, "message": str(exc)}
    data = rep.to_dict()
    data["note"] = "target degree follows the (n-p, n-p) bookkeeping"
    ok = rep.bound_holds and rep.lands_in_hodge and rep.g_lands_in_11
    return ("pass" if ok else "fail"), data


def _check_modified(ctx):
    results = []
    for q in ctx.sc.q_list:
        try:
            results.append(modified_approach_probe(ctx.pi, q, ctx.sc.budget_monomials).to_dict())
        except REFUSALS as exc:
            results.append({"q": q, "refused": type(exc).__name__, "message": str(exc)})
    return "complete", {"per_q": results}


HANDLERS = {
    "validate": _check_validate,
    "weil": _check_weil,
    "projection": _check_projection,
    "lefschetz": _check_lefschetz,
    "split": _check_split,
    "theorem1": _check_theorem1,
    "iota": _check_iota,
    "modified": _check_modified,
}


def run(sc: Scenario, timings: bool = False) -> dict:
    ctx = _Context(sc)
    order = plan(sc.checks)
    status: dict = {}
    entries, clock = [], {}
    for name in order:
        blocked = [d for d in DEPENDS[name] if status.get(d) not in ("pass", "complete")]
        if blocked:
            st, data = "skipped", {"reason": f"prerequisite {blocked[0]} did not pass"}
        else:
            t0 = time.perf_counter()
            st, data = HANDLERS[name](ctx)
            clock[name] = round(time.perf_counter() - t0, 3)
        status[name] = st
        entries.append({"name": name, "requested": name in sc.checks, "status": st, "data": jsonable(data)})
    failed = any(e["status"] == "fail" for e in entries)
    report = {
        "tool": "hodgeprobe",
        "version": __version__,
        "scenario": jsonable(sc.to_dict()),
        "checks": entries,
        "exit_code": 1 if failed else 0,
    }
    if timings:
        report["timings"] = clock
    return report


def schema() -> dict:
    text = resources.files("hodgeprobe").joinpath("report.schema.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    jsonschema.validate(report, schema())


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def summary(report: dict) -> str:
    lines = [f"{'check':<12}{'status':<10}detail", "-" * 48]
    for e in report["checks"]:
        lines.append(f"{e['name']:<12}{e['status']:<10}{_detail(e)}")
    return "\n".join(lines)


def _detail(entry) -> str:
    d = entry["data"]
    name = entry["name"]
    if "reason" in d:
        return d["reason"]
    if "message" in d:
        return d["message"]
    if name == "lefschetz":
        return f"rank {d['rank']} of {d['expected']}"
    if name == "weil":
        return f"N = {d['N']}"
    if name == "projection":
        return f"lattice index {d['lattice_index']}"
    if name in ("theorem1", "modified"):
        parts = []
        for r in d["per_q"]:
            if "refused" in r:
                parts.append(f"q={r['q']}: {r['refused']}")
            elif name == "theorem1":
                parts.append(f"q={r['q']}: dim {r['image_dim']} <= {r['h11_target']} [{r['strategy']}]")
            else:
                parts.append(f"q={r['q']}: {r['verdict']} ({r['span_dim']}/{r['target_dim']})")
        return "; ".join(parts)
    if name == "iota":
        return f"rank {d['rank']}, {d['strategy']}"
    return ""
