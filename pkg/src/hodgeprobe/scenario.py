"""Scenario files: a TOML description of one verification run.

Example::

    variety = "A3"
    p = 3
    surjection = "sampson"
    q = [1, 2]
    omega_hat = "gram"
    checks = ["theorem1"]

    [budgets]
    terms = 100000000
    monomials = 1000

Inline data: ``variety`` may be a table with ``J``, ``E`` (arrays of scalar
strings or integers) and optional ``d``; ``surjection`` may be an integer
matrix; ``omega_hat`` may be a form in ``"i,j : c"`` line format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import tomli
import tomli_w

from .abelian import PolarizedAbelianVariety, from_catalog
from .errors import HodgeProbeError, ParseError, UnknownLabel, ValidationError
from .exact_linalg import format_scalar, parse_scalar
from .exterior import KForm

CHECKS = ("validate", "weil", "projection", "lefschetz", "split", "theorem1", "iota", "modified")
DEFAULT_TERMS = 10**8
DEFAULT_MONOMIALS = 1000


@dataclass
class Scenario:
    variety: object  # catalog label or {"J": [[str]], "E": [[str]], "d": int}
    p: int = 1
    surjection: object = "sampson"  # or matrix as [[str]]
    q_list: list = field(default_factory=lambda: [1])
    omega_hat: str = "gram"
    checks: list = field(default_factory=lambda: ["validate"])
    budget_terms: int = DEFAULT_TERMS
    budget_monomials: int = DEFAULT_MONOMIALS
    output: str | None = None

    def to_dict(self) -> dict:
        out = {
            "variety": self.variety,
            "p": self.p,
            "surjection": self.surjection,
            "q": list(self.q_list),
            "omega_hat": self.omega_hat,
            "checks": list(self.checks),
            "budgets": {"terms": self.budget_terms, "monomials": self.budget_monomials},
        }
        if self.output is not None:
            out["output"] = self.output
        return out

    def variety_object(self) -> PolarizedAbelianVariety:
        if isinstance(self.variety, str):
            return from_catalog(self.variety)
        v = self.variety
        J = [[parse_scalar(x) for x in row] for row in v["J"]]
        E = [[parse_scalar(x) for x in row] for row in v["E"]]
        return PolarizedAbelianVariety(J, E, v.get("label", "inline"), v.get("d") or None)


def _canon_matrix(rows, name: str) -> list:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ValidationError(f"{name}: expected an array of arrays")
    try:
        return [[format_scalar(parse_scalar(str(x))) for x in r] for r in rows]
    except (ValueError, HodgeProbeError) as exc:
        raise ValidationError(f"{name}: {exc}") from None


def _int_field(data, key, default):
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{key}: expected an integer")
    return value


def scenario_from_dict(data: dict) -> Scenario:
    known = {"variety", "p", "surjection", "q", "omega_hat", "checks", "budgets", "output"}
    extra = sorted(set(data) - known)
    if extra:
        raise ValidationError(f"unknown field(s): {', '.join(extra)}")
    if "variety" not in data:
        raise ValidationError("variety: required")
    variety = data["variety"]
    if isinstance(variety, str):
        from_catalog(variety)
    elif isinstance(variety, dict):
        if not {"J", "E"} <= set(variety):
            raise ValidationError("variety: inline varieties need J and E")
        inline = {"J": _canon_matrix(variety["J"], "variety.J"), "E": _canon_matrix(variety["E"], "variety.E")}
        if "d" in variety:
            inline["d"] = _int_field(variety, "d", 0)
        if "label" in variety:
            inline["label"] = str(variety["label"])
        variety = inline
    else:
        raise ValidationError("variety: expected a label or a table")

    p = _int_field(data, "p", 1)
    surjection = data.get("surjection", "sampson")
    if surjection != "sampson":
        surjection = _canon_matrix(surjection, "surjection")
    q = data.get("q", [1])
    if isinstance(q, int) and not isinstance(q, bool):
        q = [q]
    if not isinstance(q, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in q):
        raise ValidationError("q: expected an integer or array of integers")
    omega_hat = data.get("omega_hat", "gram")
    if not isinstance(omega_hat, str):
        raise ValidationError("omega_hat: expected \"gram\" or a form string")
    checks = data.get("checks", ["validate"])
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise ValidationError("checks: expected an array of names")
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ValidationError(f"checks: unknown check(s) {', '.join(bad)}")
    budgets = data.get("budgets", {})
    if not isinstance(budgets, dict):
        raise ValidationError("budgets: expected a table")
    terms = _int_field(budgets, "terms", DEFAULT_TERMS)
    monomials = _int_field(budgets, "monomials", DEFAULT_MONOMIALS)
    if terms <= 0 or monomials <= 0:
        raise ValidationError("budgets: must be positive")
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        raise ValidationError("output: expected a path string")
    sc = Scenario(variety, p, surjection, list(q), omega_hat, list(checks), terms, monomials, output)
    check_scenario(sc)
    return sc


def check_scenario(sc: Scenario) -> None:
    """Range checks that need the variety's dimension."""
    try:
        A = sc.variety_object()
    except (ValueError, HodgeProbeError) as exc:
        if isinstance(exc, UnknownLabel):
            raise
        raise ValidationError(f"variety: {exc}") from None
    n = A.n
    if sc.p % 2 == 0 or not 0 < sc.p < 2 * n:
        raise ValidationError(f"p: must be odd with 0 < p < {2 * n}")
    bad = [x for x in sc.q_list if not 1 <= x <= n]
    if bad:
        raise ValidationError(f"q: values must lie in 1..{n}, got {bad}")
    if sc.surjection != "sampson":
        shape = (len(sc.surjection), len(sc.surjection[0]) if sc.surjection else 0)
        if shape != (2 * n, comb(2 * n, sc.p)):
            raise ValidationError(f"surjection: expected a {2 * n} x {comb(2 * n, sc.p)} matrix")
    if sc.omega_hat != "gram":
        try:
            KForm.parse(comb(2 * n, sc.p), 2, sc.omega_hat)
        except (ValueError, HodgeProbeError) as exc:
            raise ValidationError(f"omega_hat: {exc}") from None


def parse_scenario(text: str) -> Scenario:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ParseError(str(exc)) from None
    return scenario_from_dict(data)


def serialize_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(sc.to_dict())
