"""Superposability check of Lagrangian terms.

A term ``C psi^i (d psi)^j`` is admissible for the field ``psi`` when
``i, j <= 2``, not both equal 2, and no derivative of order above one occurs.
Everything that is not an unconjugated occurrence of the chosen field
(parameters, other fields, conjugates, tensors) belongs to ``C``.

Fields carrying adjoint (gauge-group) indices get a second look: the raw
count treats ``A^b A^c`` as ``A^2`` whatever ``b`` and ``c`` are, while the
dangerous case is a single component raised to a high power.  For such terms
every assignment of component values is enumerated and the structure
constants are contracted numerically; a term is rescued when each
assignment that would produce a forbidden single-component power has a
vanishing coefficient.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .gauge import StructureConstantTable, TableError, builtin_table, coefficient_array
from .parser import render_factor, render_monomial
from .symbolic import ADJOINT, FieldRef, Lagrangian, Monomial, conjugated_count, max_derivative_order, monomial_degree

EXISTENTIAL = "existential"
PER_FIELD = "per-field"

SUPERPOSABLE = "superposable"
VIOLATING = "violating"

REASONS = ("ok", "i-too-large", "j-too-large", "both-two", "higher-derivative", "collapse-violation")

# enumeration guard: dim ** (number of component indices)
MAX_ASSIGNMENTS = 1_000_000


class CollapseError(ValueError):
    pass


@dataclass(frozen=True)
class TermClass:
    term: int
    target: str | None
    i: int
    j: int
    conjugated: int
    coefficient: tuple
    compliant: bool
    reason: str
    raw_i: int
    raw_j: int
    component_level: bool = False

    @property
    def joint_degree(self) -> int:
        return self.i + self.conjugated


@dataclass(frozen=True)
class CollapseFinding:
    term: int
    target: str
    assignment: tuple
    value: float

    def as_dict(self) -> dict:
        return {
            "term": self.term,
            "target": self.target,
            "assignment": dict(self.assignment),
            "value": self.value,
        }


@dataclass(frozen=True)
class Verdict:
    per_term: tuple
    overall: str
    collapse_findings: tuple = ()
    readings: tuple = ()

    @property
    def superposable(self) -> bool:
        return self.overall == SUPERPOSABLE

    def flagged(self) -> list[tuple[int, str]]:
        return [(tc.term, tc.reason) for tc in self.per_term if not tc.compliant]


def _reason(i: int, j: int, max_order: int) -> str:
    if max_order > 1:
        return "higher-derivative"
    if i > 2:
        return "i-too-large"
    if j > 2:
        return "j-too-large"
    if i == 2 and j == 2:
        return "both-two"
    return "ok"


def _coefficient_parts(m: Monomial, target: str | None) -> tuple:
    rest = [
        f for f in m.factors
        if not (isinstance(f, FieldRef) and f.name == target and not f.conjugated and f.order <= 1)
    ]
    head = render_monomial(Monomial(m.coeff, m.ipow, (), ()))
    parts = [head]
    parts += [n if e == 1 else f"{n}^{e}" for n, e in m.symbols]
    parts += [render_factor(f) for f in rest]
    return tuple(parts)


def classify_term(m: Monomial, target: str | None, term: int = 0) -> TermClass:
    """Raw ``(i, j)`` classification of one monomial for one field."""
    i, j = monomial_degree(m, target) if target else (0, 0)
    reason = _reason(i, j, max_derivative_order(m))
    return TermClass(
        term=term,
        target=target,
        i=i,
        j=j,
        conjugated=conjugated_count(m, target) if target else 0,
        coefficient=_coefficient_parts(m, target),
        compliant=reason == "ok",
        reason=reason,
        raw_i=i,
        raw_j=j,
    )


def _component_names(m: Monomial, target: str) -> list[str]:
    names = []
    for f in m.fields():
        if f.name == target and not f.conjugated:
            for idx in f.indices:
                if idx.kind == ADJOINT and not idx.is_concrete and idx.name not in names:
                    names.append(idx.name)
    return names


def _dims(m: Monomial, names: list[str], tables: Mapping[str, StructureConstantTable],
          group_dims: Mapping[str, int]) -> list[int]:
    dims = []
    for n in names:
        group = next(
            idx.group for f in m.factors for idx in f.all_indices() if idx.name == n and idx.kind == ADJOINT
        )
        if group in tables:
            dims.append(tables[group].dim)
        elif group in group_dims:
            dims.append(group_dims[group])
        else:
            raise CollapseError(f"unknown dimension for group {group!r}")
    return dims


def _scan(m: Monomial, target: str, tables: Mapping[str, StructureConstantTable],
          group_dims: Mapping[str, int] | None = None, term: int = 0):
    """Enumerate component assignments of ``target``'s adjoint indices.

    Returns ``(findings, worst)`` where ``worst`` is the component-level
    ``(i, j)`` of the most severe assignment with a nonzero coefficient.
    """
    names = _component_names(m, target)
    if not names:
        return [], None
    f_groups = {t.indices[0].group for t in m.tensors() if t.name == "f"}
    missing = sorted(g for g in f_groups if g not in tables)
    if missing:
        raise CollapseError(f"no structure-constant table for group(s) {', '.join(map(str, missing))}")
    dims = _dims(m, names, tables, group_dims or {})
    total = int(np.prod(dims))
    if total > MAX_ASSIGNMENTS:
        raise CollapseError(f"{total} component assignments is too many to enumerate")

    # other adjoint indices on fields stay free; the coefficient is nonzero
    # for a target assignment if any of their values gives a nonzero entry
    others = []
    for f in m.fields():
        if f.name == target and not f.conjugated:
            continue
        for idx in f.indices:
            if idx.kind == ADJOINT and not idx.is_concrete and idx.name not in names + others:
                others.append(idx.name)
    try:
        coeff = coefficient_array(m.tensors(), names + others, tables)
    except TableError as err:
        raise CollapseError(str(err)) from None
    if others:
        coeff = np.take_along_axis(
            coeff.reshape(coeff.shape[: len(names)] + (-1,)),
            np.abs(coeff.reshape(coeff.shape[: len(names)] + (-1,))).argmax(axis=-1)[..., None],
            axis=-1,
        )[..., 0]

    exact = all(t.exact for g, t in tables.items() if g in f_groups)

    def nonzero(v: float) -> bool:
        return v != 0 if exact else abs(v) >= 1e-12

    occurrences = [
        (tuple(idx for idx in f.indices if idx.kind == ADJOINT), f.order)
        for f in m.fields()
        if f.name == target and not f.conjugated and f.order <= 1
    ]
    findings = []
    worst = None
    for values in itertools.product(*(range(1, d + 1) for d in dims)):
        env = dict(zip(names, values))
        counts: dict[tuple, list[int]] = {}
        for comps, order in occurrences:
            key = tuple(idx.value if idx.is_concrete else env[idx.name] for idx in comps)
            counts.setdefault(key, [0, 0])[order] += 1
        value = float(coeff[tuple(v - 1 if s > 1 else 0 for v, s in zip(values, coeff.shape))])
        bad = any(_reason(i, j, 0) != "ok" for i, j in counts.values())
        if not nonzero(value):
            continue
        for i, j in counts.values():
            rank = (_reason(i, j, 0) != "ok", i + j, i)
            if worst is None or rank > worst[0]:
                worst = (rank, (i, j))
        if bad:
            findings.append(CollapseFinding(term, target, tuple(sorted(env.items())), value))
    return findings, (worst[1] if worst else (0, 0))


def collapse_analysis(m: Monomial, target: str, table, term: int = 0) -> list[CollapseFinding]:
    """Component assignments with a forbidden power and nonzero coefficient.

    ``table`` is one :class:`StructureConstantTable` (used for every group in
    the monomial) or a mapping from group name to table.  An empty result
    means every dangerous component combination cancels.
    """
    tables = _as_mapping(m, table)
    findings, _ = _scan(m, target, tables, term=term)
    return findings


def _as_mapping(m: Monomial, table) -> dict:
    if table is None:
        return {}
    if isinstance(table, StructureConstantTable):
        groups = {idx.group for f in m.factors for idx in f.all_indices() if idx.kind == ADJOINT}
        return {g: table for g in groups}
    return dict(table)


def resolve_tables(L: Lagrangian, tables: Mapping[str, StructureConstantTable] | None = None) -> dict:
    """User tables first, then built-in SU(2)/SU(3) tables matched by group name."""
    out = dict(tables or {})
    for g in L.declarations.groups:
        if g.name not in out:
            builtin = builtin_table(g.name, g.dim)
            if builtin is not None:
                out[g.name] = builtin
    return out


def _assess(m: Monomial, target: str | None, term: int, tables, group_dims):
    tc = classify_term(m, target, term)
    if target is None or tc.compliant or tc.reason == "higher-derivative":
        return tc, []
    if not _component_names(m, target):
        return tc, []
    findings, worst = _scan(m, target, tables, group_dims, term)
    i, j = worst
    if findings:
        return replace(tc, i=i, j=j, compliant=False, reason="collapse-violation", component_level=True), findings
    return replace(tc, i=i, j=j, compliant=True, reason="ok", component_level=True), []


def classify_lagrangian(
    L: Lagrangian,
    mode: str = EXISTENTIAL,
    target: str | None = None,
    tables: Mapping[str, StructureConstantTable] | None = None,
) -> Verdict:
    """Classify every term and aggregate.

    In ``existential`` mode each term may pick any field that occurs in it;
    the first compliant choice in declaration order wins.  In ``per-field``
    mode ``target`` is used for every term.
    """
    if mode not in (EXISTENTIAL, PER_FIELD):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == PER_FIELD:
        if target is None or L.declarations.field(target) is None:
            raise ValueError(f"per-field mode needs a declared target, got {target!r}")
    tables = resolve_tables(L, tables)
    group_dims = L.declarations.group_dims()
    order = L.declarations.field_names

    per_term, readings, findings = [], [], []
    for k, m in enumerate(L.terms):
        if mode == PER_FIELD:
            candidates = [target]
        else:
            present = {f.name for f in m.fields()}
            candidates = [n for n in order if n in present] or [None]
        assessed = [_assess(m, c, k, tables, group_dims) for c in candidates]
        chosen = next((a for a in assessed if a[0].compliant), assessed[0])
        per_term.append(chosen[0])
        readings.append(tuple(a[0] for a in assessed))
        findings.extend(chosen[1])
    overall = SUPERPOSABLE if all(tc.compliant for tc in per_term) else VIOLATING
    return Verdict(tuple(per_term), overall, tuple(findings), tuple(readings))
