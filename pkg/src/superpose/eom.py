"""Equations of motion from a Lagrangian via the Euler-Lagrange equation.

Fields and their conjugates are independent variables.  Variation removes
one matching field occurrence and rewires the indices it was contracted with
to fresh free indices; those free indices always come out in upper position.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .symbolic import (
    ADJOINT,
    LORENTZ,
    LOWER,
    UPPER,
    FieldRef,
    Index,
    Lagrangian,
    Monomial,
    Polynomial,
    max_derivative_order,
    metric,
    rename_dummies_away,
)


class EulerLagrangeError(ValueError):
    pass


_FREE_NAMES = {
    LORENTZ: ("nu", "rho", "sigma", "kappa"),
    ADJOINT: ("a", "b", "c"),
    "flavor": ("j", "k", "l"),
    "spinor": ("s", "t", "u"),
}


@dataclass(frozen=True)
class Equation:
    """``lhs = 0`` for one field (or its conjugate)."""

    lhs: Polynomial
    target: str = ""
    conjugated: bool = False
    free_indices: tuple = ()

    @property
    def is_trivial(self) -> bool:
        return self.lhs.is_zero

    def equivalent(self, other: "Equation | Polynomial") -> bool:
        """True when the two left-hand sides differ by a nonzero constant."""
        rhs = other.lhs if isinstance(other, Equation) else other
        if self.lhs.is_zero or rhs.is_zero:
            return self.lhs.is_zero and rhs.is_zero
        a, b = self.lhs.terms[0], rhs.terms[0]
        if a.ipow != b.ipow:
            return False
        return self.lhs.scaled(b.coeff / a.coeff) == rhs


def default_index_names(L: Lagrangian, target: str) -> tuple[str, ...]:
    decl = L.declarations.field(target)
    if decl is None:
        raise EulerLagrangeError(f"undeclared field {target!r}")
    used: dict[str, int] = {}
    names = []
    for slot in decl.signature:
        k = used.get(slot.kind, 0)
        used[slot.kind] = k + 1
        names.append(_FREE_NAMES[slot.kind][k])
    return tuple(names)


def _free_slots(L: Lagrangian, target: str, index_names: Sequence[str] | None) -> list[Index]:
    decl = L.declarations.field(target)
    if decl is None:
        raise EulerLagrangeError(f"undeclared field {target!r}")
    names = tuple(index_names) if index_names is not None else default_index_names(L, target)
    if len(names) != len(decl.signature):
        raise EulerLagrangeError(f"{target!r} takes {len(decl.signature)} indices")
    return [
        Index(n, s.kind, UPPER if s.kind == LORENTZ else LOWER, s.group)
        for n, s in zip(names, decl.signature)
    ]


def _vary(m: Monomial, pos: int, pairs: list[tuple[Index, Index]]) -> Monomial:
    """Drop factor ``pos``; each of its indices hands its name to its partner.

    ``pairs`` maps each index of the removed occurrence to the free index
    that replaces it.  A Lorentz contraction internal to the removed factor
    (as in ``d_mu A^mu``) becomes a metric between the two free indices.
    """
    rest = list(m.factors[:pos] + m.factors[pos + 1:])
    extra = []
    handled = set()
    for k, (occ, free) in enumerate(pairs):
        if k in handled or occ.is_concrete:
            continue
        twin = next(
            (j for j, (o, _) in enumerate(pairs) if j != k and o.slot == occ.slot), None
        )
        if twin is not None:
            handled.update({k, twin})
            if occ.kind != LORENTZ:
                raise EulerLagrangeError("self-contracted group index on the varied field")
            extra.append(metric(free, pairs[twin][1]))
            continue
        for j, f in enumerate(rest):
            if any(i.slot == occ.slot for i in f.all_indices()):
                rest[j] = f.map_indices(lambda i, occ=occ, free=free: free if i.slot == occ.slot else i)
                break
    return Monomial(m.coeff, m.ipow, m.symbols, tuple(rest) + tuple(extra))


def _reserve(m: Monomial, frees: Sequence[Index]) -> Monomial:
    return rename_dummies_away(m, {f.slot for f in frees})


def partial_wrt_field(
    L: Lagrangian,
    target: str,
    conjugated: bool = False,
    index_names: Sequence[str] | None = None,
) -> Polynomial:
    """Formal derivative with respect to the underived field ``target``."""
    frees = _free_slots(L, target, index_names)
    out = []
    for m in L.terms:
        m = _reserve(m, frees)
        for pos, f in enumerate(m.factors):
            if _matches(f, target, conjugated, 0):
                out.append(_vary(m, pos, list(zip(f.indices, frees))))
    return Polynomial.of(out)


def partial_wrt_derivative(
    L: Lagrangian,
    target: str,
    mu: Index | str = "mu",
    conjugated: bool = False,
    index_names: Sequence[str] | None = None,
) -> Polynomial:
    """Formal derivative with respect to ``d_mu target``.

    The result carries ``mu`` as a free upper index together with the free
    indices of the field itself.
    """
    name = mu.name if isinstance(mu, Index) else mu
    frees = _free_slots(L, target, index_names)
    mu_free = Index(name, LORENTZ, UPPER)
    if any(f.slot == mu_free.slot for f in frees):
        raise EulerLagrangeError(f"derivative index {name!r} clashes with a field index")
    out = []
    for m in L.terms:
        m = _reserve(m, frees + [mu_free])
        for pos, f in enumerate(m.factors):
            if _matches(f, target, conjugated, 1):
                pairs = list(zip(f.indices, frees)) + [(f.derivatives[0], mu_free)]
                out.append(_vary(m, pos, pairs))
    return Polynomial.of(out)


def _matches(f, target: str, conjugated: bool, order: int) -> bool:
    return (
        isinstance(f, FieldRef)
        and f.name == target
        and f.conjugated == conjugated
        and f.order == order
    )


def total_derivative(p: Polynomial, mu: Index) -> Polynomial:
    """Apply ``d_mu`` to every field factor by the product rule."""
    out = []
    for m in p:
        m = rename_dummies_away(m, {mu.slot})
        for pos, f in enumerate(m.factors):
            if isinstance(f, FieldRef):
                factors = m.factors[:pos] + (f.d(mu),) + m.factors[pos + 1:]
                out.append(m.with_factors(factors))
    return Polynomial.of(out)


def _fresh_lorentz(L: Lagrangian, avoid: set[str]) -> str:
    used = set(avoid)
    for m in L.terms:
        for f in m.factors:
            used.update(i.name for i in f.all_indices())
    k = 0
    while True:
        cand = f"alpha{k}" if k else "alpha"
        if cand not in used:
            return cand
        k += 1


def euler_lagrange(
    L: Lagrangian,
    target: str,
    conjugated: bool = False,
    index_names: Sequence[str] | None = None,
) -> Equation:
    """``d_mu dL/d(d_mu target) - dL/d target`` as a canonical polynomial."""
    worst = max((max_derivative_order(m) for m in L.terms), default=0)
    if worst > 1:
        raise EulerLagrangeError(
            f"Lagrangian contains derivatives of order {worst}; the first-order "
            "Euler-Lagrange equation does not apply"
        )
    frees = _free_slots(L, target, index_names)
    mu = _fresh_lorentz(L, {f.name for f in frees})
    momentum = partial_wrt_derivative(L, target, mu, conjugated, [f.name for f in frees])
    divergence = total_derivative(momentum, Index(mu, LORENTZ, LOWER))
    force = partial_wrt_field(L, target, conjugated, [f.name for f in frees])
    return Equation(divergence - force, target, conjugated, tuple(frees))


def eom_degree(eq: Equation | Polynomial, target: str) -> int:
    """Largest number of unconjugated ``target`` factors in one monomial."""
    lhs = eq.lhs if isinstance(eq, Equation) else eq
    return max(
        (sum(1 for f in m.fields() if f.name == target and not f.conjugated) for m in lhs),
        default=0,
    )


def conjugated_degree(eq: Equation | Polynomial, target: str) -> int:
    lhs = eq.lhs if isinstance(eq, Equation) else eq
    return max(
        (sum(1 for f in m.fields() if f.name == target and f.conjugated) for m in lhs),
        default=0,
    )

