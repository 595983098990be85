"""Report assembly for the command line: a JSON-ready dict and a text view."""
from __future__ import annotations

import hashlib
from datetime import datetime, timezone

from . import __version__
from .classify import Verdict
from .eom import EulerLagrangeError, conjugated_degree, eom_degree, euler_lagrange
from .parser import render_polynomial, render_monomial
from .symbolic import Lagrangian

TOOL = "superpose"


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _reading(tc) -> dict:
    return {
        "field": tc.target,
        "i": tc.i,
        "j": tc.j,
        "compliant": tc.compliant,
        "reason": tc.reason,
    }


def verdict_dict(verdict: Verdict, L: Lagrangian) -> dict:
    terms = []
    for tc, readings in zip(verdict.per_term, verdict.readings):
        terms.append({
            "index": tc.term,
            "term": render_monomial(L.terms[tc.term]),
            "field": tc.target,
            "i": tc.i,
            "j": tc.j,
            "raw_i": tc.raw_i,
            "raw_j": tc.raw_j,
            "conjugated": tc.conjugated,
            "compliant": tc.compliant,
            "reason": tc.reason,
            "component_level": tc.component_level,
            "coefficient": list(tc.coefficient),
            "readings": [_reading(r) for r in readings],
        })
    return {"overall": verdict.overall, "terms": terms}


def equations(L: Lagrangian) -> tuple[list[dict], str | None]:
    """Euler-Lagrange equations for every field, plus conjugates where they occur."""
    out = []
    conj_present = {f.name for m in L.terms for f in m.fields() if f.conjugated}
    try:
        for decl in L.declarations.fields:
            for conj in (False, True):
                if conj and decl.name not in conj_present:
                    continue
                eq = euler_lagrange(L, decl.name, conjugated=conj)
                out.append({
                    "field": decl.name,
                    "varied": ("bar(" + decl.name + ")") if conj else decl.name,
                    "conjugated": conj,
                    "lhs": render_polynomial(eq.lhs),
                    "trivial": eq.is_trivial,
                    "degree": eom_degree(eq, decl.name),
                    "conjugated_degree": conjugated_degree(eq, decl.name),
                })
    except EulerLagrangeError as err:
        return out, str(err)
    return out, None


def build_report(
    L: Lagrangian,
    verdict: Verdict | None,
    source: str,
    input_kind: str,
    input_name: str,
    mode: str | None = None,
    target: str | None = None,
    with_equations: bool = True,
) -> dict:
    report = {
        "tool": TOOL,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "input": {"kind": input_kind, "name": input_name, "sha256": sha256(source)},
        "mode": mode,
        "target": target,
        "lagrangian": [render_monomial(m) for m in L.terms],
    }
    if verdict is not None:
        report["verdict"] = verdict_dict(verdict, L)
        report["collapse_findings"] = [f.as_dict() for f in verdict.collapse_findings]
    if with_equations:
        eqs, error = equations(L)
        report["equations"] = eqs
        report["equation_error"] = error
    return report


def render_text(report: dict) -> str:
    lines = [f"{report['input']['kind']}: {report['input']['name']}"]
    verdict = report.get("verdict")
    if verdict is not None:
        lines.append(f"verdict: {verdict['overall']} (mode {report['mode']})")
        for t in verdict["terms"]:
            mark = "ok " if t["compliant"] else "BAD"
            who = t["field"] if t["field"] is not None else "-"
            level = " component-level" if t["component_level"] else ""
            lines.append(
                f"  [{mark}] term {t['index']}: {t['term']}"
                f"  ({who}: i={t['i']}, j={t['j']}{level}; {t['reason']})"
            )
            if len(t["readings"]) > 1:
                alt = ", ".join(f"{r['field']}: i={r['i']}, j={r['j']}" for r in t["readings"])
                lines.append(f"        readings: {alt}")
        for f in report.get("collapse_findings", []):
            comps = ", ".join(f"{k}={v}" for k, v in f["assignment"].items())
            lines.append(f"  collapse: term {f['term']} {f['target']} at {comps} -> coefficient {f['value']:.6g}")
    else:
        lines.append("lagrangian:")
        lines.extend(f"  {t}" for t in report["lagrangian"])
    if "equations" in report:
        lines.append("equations of motion:")
        for eq in report["equations"]:
            lines.append(f"  d/d {eq['varied']}: {eq['lhs']} = 0  (degree {eq['degree']})")
        if report.get("equation_error"):
            lines.append(f"  not derived: {report['equation_error']}")
    return "\n".join(lines) + "\n"
