"""Immutable expression representation for Lagrangian densities.

A Lagrangian is held as a sum of monomials.  Each monomial carries an exact
coefficient (a rational number times ``1`` or ``i``), named constants with
integer exponents, and a tuple of factors.  Field factors use jet notation:
every occurrence stores its own list of derivative indices, so ``d[mu](phi)``
is a single factor and no integration by parts is ever performed.

Canonical form
--------------
:func:`canonicalize` puts a monomial into a unique representative:

* contracted (dummy) indices are renamed to a fixed alphabet, and the upper/lower
  placement of each contracted Lorentz pair is normalized;
* bosonic factors commute and are sorted; spinor fields and ``gamma`` matrices
  form a chain whose written order is kept;
* index order inside symmetric and antisymmetric tensors is chosen by the
  same search (picking up the permutation sign), and a repeated slot in an
  antisymmetric tensor makes the monomial vanish;
* metric tensors contracted with another factor are absorbed into it.

A monomial that equals its own negative under a relabeling of dummies is zero
and is dropped.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence, Union

LORENTZ = "lorentz"
SPINOR = "spinor"
ADJOINT = "adjoint"
FLAVOR = "flavor"
INDEX_KINDS = (LORENTZ, SPINOR, ADJOINT, FLAVOR)

UPPER = "upper"
LOWER = "lower"

FIELD_KINDS = ("scalar", "spinor", "vector")
SYMMETRIES = ("none", "antisymmetric", "symmetric")

#: Spacetime dimension, used for the trace of the metric.
SPACETIME_DIM = 4

# Alphabets for canonical dummy names; primes are appended on wrap-around.
_DUMMY_NAMES = {
    LORENTZ: ("mu", "nu", "rho", "sigma", "kappa", "tau"),
    ADJOINT: ("a", "b", "c"),
    FLAVOR: ("j", "k", "l"),
    SPINOR: ("s", "t", "u"),
}

# Guard on the number of tied partial placements kept by the canonical search.
_MAX_FRONTIER = 200_000

# Guard against runaway expansion of things like (phi + chi)^40.
MAX_EXPANDED_TERMS = 20_000


class SymbolicError(ValueError):
    """Raised for malformed expressions.

    ``kind`` is one of ``undeclared-field``, ``index-arity``, ``free-index``,
    ``range`` or ``size``.
    """

    def __init__(self, message: str, kind: str = "free-index"):
        super().__init__(message)
        self.kind = kind


def dummy_name(kind: str, k: int) -> str:
    base = _DUMMY_NAMES[kind]
    return base[k % len(base)] + "'" * (k // len(base))


# ---------------------------------------------------------------------------
# Expression tree
# ---------------------------------------------------------------------------


class Expr:
    """Base class of the raw expression tree; supports ``+ - * **``."""

    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Num(Fraction(-1)), as_expr(other)))))

    def __rsub__(self, other):
        return Add((as_expr(other), Mul((Num(Fraction(-1)), self))))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __neg__(self):
        return Mul((Num(Fraction(-1)), self))

    def __pow__(self, exponent: int):
        return Pow(self, exponent)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Num(Fraction(value))
    raise TypeError(f"cannot use {value!r} in an expression")


@dataclass(frozen=True, eq=False)
class Add(Expr):
    terms: tuple


@dataclass(frozen=True, eq=False)
class Mul(Expr):
    factors: tuple


@dataclass(frozen=True, eq=False)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, eq=False)
class Num(Expr):
    value: Fraction


@dataclass(frozen=True, eq=False)
class ImaginaryUnit(Expr):
    pass


@dataclass(frozen=True, eq=False)
class Param(Expr):
    name: str


I = ImaginaryUnit()


# ---------------------------------------------------------------------------
# Indices and factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Index:
    name: str
    kind: str = LORENTZ
    position: str = LOWER
    group: str | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("index name must be nonempty")
        if self.kind not in INDEX_KINDS:
            raise ValueError(f"unknown index kind {self.kind!r}")
        if self.position not in (UPPER, LOWER):
            raise ValueError(f"unknown index position {self.position!r}")
        if self.kind != LORENTZ and self.position != LOWER:
            # only Lorentz indices carry variance
            object.__setattr__(self, "position", LOWER)

    @property
    def is_concrete(self) -> bool:
        return self.name.isdigit()

    @property
    def value(self) -> int:
        return int(self.name)

    @property
    def slot(self) -> tuple:
        """Identity of the summation variable, ignoring placement."""
        return (self.kind, self.name)

    def key(self) -> tuple:
        return (self.kind, self.group or "", self.name, self.position)

    def flipped(self) -> "Index":
        return replace(self, position=UPPER if self.position == LOWER else LOWER)


def upper(name: str) -> Index:
    return Index(name, LORENTZ, UPPER)


def lower(name: str) -> Index:
    return Index(name, LORENTZ, LOWER)


def adj(name: str | int, group: str | None = None) -> Index:
    return Index(str(name), ADJOINT, LOWER, group)


@dataclass(frozen=True)
class FieldRef(Expr):
    name: str
    conjugated: bool = False
    indices: tuple = ()
    derivatives: tuple = ()
    kind: str = "scalar"

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        object.__setattr__(self, "derivatives", tuple(self.derivatives))

    @property
    def order(self) -> int:
        return len(self.derivatives)

    def all_indices(self) -> tuple:
        return self.indices + self.derivatives

    def d(self, *idx: Index) -> "FieldRef":
        """Apply derivatives ``d[idx]`` to this occurrence."""
        return replace(self, derivatives=self.derivatives + tuple(idx))

    def bar(self) -> "FieldRef":
        return replace(self, conjugated=not self.conjugated)

    def map_indices(self, fn) -> "FieldRef":
        return replace(
            self,
            indices=tuple(fn(i) for i in self.indices),
            derivatives=tuple(fn(i) for i in self.derivatives),
        )

    def key(self) -> tuple:
        return (
            0,
            self.name,
            self.conjugated,
            len(self.derivatives),
            tuple(i.key() for i in self.indices),
            tuple(i.key() for i in self.derivatives),
        )

    @property
    def in_chain(self) -> bool:
        return self.kind == "spinor"


@dataclass(frozen=True)
class TensorSymbol(Expr):
    name: str
    indices: tuple = ()
    symmetry: str = "none"

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"unknown symmetry {self.symmetry!r}")

    def all_indices(self) -> tuple:
        return self.indices

    def map_indices(self, fn) -> "TensorSymbol":
        return replace(self, indices=tuple(fn(i) for i in self.indices))

    def key(self) -> tuple:
        return (1, self.name, tuple(i.key() for i in self.indices))

    @property
    def in_chain(self) -> bool:
        return self.name == "gamma"


Factor = Union[FieldRef, TensorSymbol]


def gamma(mu: Index) -> TensorSymbol:
    return TensorSymbol("gamma", (mu,))


def structure_f(a, b, c, group: str | None = None) -> TensorSymbol:
    return TensorSymbol("f", tuple(adj(x, group) for x in (a, b, c)), "antisymmetric")


def metric(mu: Index, nu: Index) -> TensorSymbol:
    return TensorSymbol("metric", (mu, nu), "symmetric")


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------


def _merge_symbols(*groups: Iterable[tuple[str, int]]) -> tuple:
    powers: dict[str, int] = {}
    for group in groups:
        for name, exp in group:
            powers[name] = powers.get(name, 0) + exp
    return tuple(sorted((n, e) for n, e in powers.items() if e))


@dataclass(frozen=True)
class Monomial(Expr):
    coeff: Fraction = Fraction(1)
    ipow: int = 0
    symbols: tuple = ()
    factors: tuple = ()

    def __post_init__(self):
        coeff = Fraction(self.coeff)
        ipow = self.ipow % 4
        if ipow >= 2:
            coeff, ipow = -coeff, ipow - 2
        object.__setattr__(self, "coeff", coeff)
        object.__setattr__(self, "ipow", ipow)
        object.__setattr__(self, "symbols", _merge_symbols(self.symbols))
        object.__setattr__(self, "factors", tuple(self.factors))

    @classmethod
    def zero(cls) -> "Monomial":
        return cls(Fraction(0))

    @property
    def is_zero(self) -> bool:
        return self.coeff == 0

    def times(self, other: "Monomial") -> "Monomial":
        return Monomial(
            self.coeff * other.coeff,
            self.ipow + other.ipow,
            _merge_symbols(self.symbols, other.symbols),
            self.factors + other.factors,
        )

    def scaled(self, c) -> "Monomial":
        return replace(self, coeff=self.coeff * Fraction(c))

    def with_factors(self, factors) -> "Monomial":
        return replace(self, factors=tuple(factors))

    @property
    def structure(self) -> tuple:
        """Everything except the rational coefficient; like terms share it."""
        return (self.ipow, self.symbols, self.factors)

    def fields(self) -> list[FieldRef]:
        return [f for f in self.factors if isinstance(f, FieldRef)]

    def tensors(self) -> list[TensorSymbol]:
        return [f for f in self.factors if isinstance(f, TensorSymbol)]

    def sort_key(self) -> tuple:
        return (
            len(self.fields()),
            max_derivative_order(self),
            tuple(f.key() for f in self.factors),
            self.symbols,
            self.ipow,
        )


def max_derivative_order(m: Monomial) -> int:
    return max((f.order for f in m.fields()), default=0)


def monomial_degree(m: Monomial, target: str) -> tuple[int, int]:
    """Return ``(i, j)``: underived and first-derived unconjugated occurrences.

    Conjugated occurrences of ``target`` are treated as part of the
    coefficient, matching the bookkeeping in which ``m psibar psi`` is linear
    in ``psi``.
    """
    i = j = 0
    for f in m.fields():
        if f.name != target or f.conjugated:
            continue
        if f.order == 0:
            i += 1
        elif f.order == 1:
            j += 1
    return i, j


def conjugated_count(m: Monomial, target: str) -> int:
    return sum(1 for f in m.fields() if f.name == target and f.conjugated)


def field_count(m: Monomial) -> int:
    return len(m.fields())


# ---------------------------------------------------------------------------
# Expansion
# ---------------------------------------------------------------------------


def expand(expr: Expr) -> list[Monomial]:
    """Distribute products over sums; no merging or reordering."""
    if isinstance(expr, Monomial):
        return [expr]
    if isinstance(expr, Add):
        out: list[Monomial] = []
        for t in expr.terms:
            out.extend(expand(t))
            _check_size(out)
        return out
    if isinstance(expr, Mul):
        acc = [Monomial()]
        for f in expr.factors:
            parts = expand(f)
            acc = [a.times(b) for a in acc for b in parts]
            _check_size(acc)
        return acc
    if isinstance(expr, Pow):
        if expr.exponent < 0:
            raise SymbolicError("negative exponent", "size")
        return expand(Mul((expr.base,) * expr.exponent))
    if isinstance(expr, Num):
        return [Monomial(expr.value)]
    if isinstance(expr, ImaginaryUnit):
        return [Monomial(Fraction(1), 1)]
    if isinstance(expr, Param):
        return [Monomial(symbols=((expr.name, 1),))]
    if isinstance(expr, (FieldRef, TensorSymbol)):
        return [Monomial(factors=(expr,))]
    raise TypeError(f"not an expression: {expr!r}")


def _check_size(terms: list) -> None:
    if len(terms) > MAX_EXPANDED_TERMS:
        raise SymbolicError("expression expands to too many terms", "size")


# ---------------------------------------------------------------------------
# Index bookkeeping
# ---------------------------------------------------------------------------


def index_occurrences(factors: Sequence[Factor]) -> dict[tuple, list[tuple[int, Index]]]:
    """Map ``(kind, name)`` to the list of ``(factor position, index)``."""
    occ: dict[tuple, list] = {}
    for pos, f in enumerate(factors):
        for idx in f.all_indices():
            if idx.is_concrete:
                continue
            occ.setdefault(idx.slot, []).append((pos, idx))
    return occ


def _is_pair(kind: str, entries: list) -> bool:
    if len(entries) != 2:
        return False
    if kind == LORENTZ:
        return {entries[0][1].position, entries[1][1].position} == {UPPER, LOWER}
    return True


def classify_indices(factors: Sequence[Factor]) -> tuple[list[tuple], list[tuple]]:
    """Split index slots into ``(dummies, free)``; raise on malformed ones."""
    dummies, free = [], []
    for slot, entries in index_occurrences(factors).items():
        kind, name = slot
        if len(entries) == 1:
            free.append(slot)
        elif _is_pair(kind, entries):
            dummies.append(slot)
        elif len(entries) == 2:
            raise SymbolicError(
                f"Lorentz index {name!r} is contracted without one upper and one lower position",
                "free-index",
            )
        else:
            raise SymbolicError(f"index {name!r} appears {len(entries)} times", "free-index")
    return dummies, free


def free_indices(m: Monomial) -> list[Index]:
    _, free = classify_indices(m.factors)
    occ = index_occurrences(m.factors)
    return [occ[s][0][1] for s in free]


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------


def _sort_with_sign(indices: tuple) -> tuple[int, tuple]:
    keys = [i.key() for i in indices]
    if len(set(keys)) < len(keys):
        return 0, indices
    order = sorted(range(len(indices)), key=lambda k: keys[k])
    sign = _perm_sign(order)
    return sign, tuple(indices[k] for k in order)


def _tidy_factor(f: Factor) -> tuple[int, Factor]:
    """Canonical form of a single factor and the sign it picks up."""
    if isinstance(f, FieldRef):
        if len(f.derivatives) > 1:
            f = replace(f, derivatives=tuple(sorted(f.derivatives, key=Index.key)))
        return 1, f
    if f.symmetry == "antisymmetric":
        sign, idx = _sort_with_sign(f.indices)
        return sign, replace(f, indices=idx)
    if f.symmetry == "symmetric":
        return 1, replace(f, indices=tuple(sorted(f.indices, key=Index.key)))
    return 1, f


def _absorb_metrics(factors: tuple) -> tuple[Fraction, tuple]:
    """Contract metric tensors into neighbouring factors; returns a scale."""
    factors = list(factors)
    scale = Fraction(1)
    changed = True
    while changed:
        changed = False
        for pos, f in enumerate(factors):
            if not (isinstance(f, TensorSymbol) and f.name == "metric"):
                continue
            i1, i2 = f.indices
            if i1.slot == i2.slot and not i1.is_concrete:
                scale *= SPACETIME_DIM
                del factors[pos]
                changed = True
                break
            for mine, other in ((i1, i2), (i2, i1)):
                if mine.is_concrete:
                    continue
                partner = _find_partner(factors, pos, mine)
                if partner is None:
                    continue
                ppos, _ = partner

                def swap(idx, mine=mine, other=other):
                    if idx.slot == mine.slot:
                        return other
                    return idx

                factors[ppos] = factors[ppos].map_indices(swap)
                del factors[pos]
                changed = True
                break
            if changed:
                break
    return scale, tuple(factors)


def _find_partner(factors, skip_pos: int, idx: Index):
    for pos, f in enumerate(factors):
        if pos == skip_pos:
            continue
        for other in f.all_indices():
            if other.slot == idx.slot:
                return pos, other
    return None


def _arrange(factors: Sequence[Factor]) -> tuple:
    chain = [f for f in factors if f.in_chain]
    rest = sorted((f for f in factors if not f.in_chain), key=lambda f: f.key())
    return tuple(chain) + tuple(rest)


def _variants(f: Factor) -> tuple[tuple[int, Factor], ...]:
    """Equivalent internal orderings of one factor with their signs."""
    if isinstance(f, FieldRef):
        if len(f.derivatives) < 2:
            return ((1, f),)
        perms = sorted(set(itertools.permutations(f.derivatives)), key=lambda p: [i.key() for i in p])
        return tuple((1, replace(f, derivatives=p)) for p in perms)
    if f.symmetry == "none" or len(f.indices) < 2:
        return ((1, f),)
    out = []
    for perm in itertools.permutations(range(len(f.indices))):
        sign = _perm_sign(perm) if f.symmetry == "antisymmetric" else 1
        out.append((sign, replace(f, indices=tuple(f.indices[k] for k in perm))))
    return tuple(out)


def _perm_sign(perm: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length, k = 0, start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=65536)
def _canonical_factors(factors: tuple) -> tuple[Fraction, tuple]:
    """Return ``(scale, factors)``; a zero scale means the monomial vanishes.

    The factors are placed one at a time.  Dummies are named in order of
    first appearance, with the first occurrence of a Lorentz pair written
    lower.  At every step only the placements giving the smallest factor key
    survive, so the final sequence is the lexicographic minimum over all
    orderings of the commuting factors and all internal orderings of
    symmetric slots.
    """
    scale, factors = _absorb_metrics(factors)
    sign = 1
    tidy = []
    for f in factors:
        s, g = _tidy_factor(f)
        if s == 0:
            return Fraction(0), ()
        sign *= s
        tidy.append(g)
    factors = tuple(tidy)
    scale *= sign

    dummies, free = classify_indices(factors)
    if not dummies:
        return scale, _arrange(factors)

    taken: dict[str, set] = {}
    for kind, name in free:
        taken.setdefault(kind, set()).add(name)
    for f in factors:
        for idx in f.all_indices():
            if idx.is_concrete:
                taken.setdefault(idx.kind, set()).add(idx.name)
    counts: dict[str, int] = {}
    for kind, _ in dummies:
        counts[kind] = counts.get(kind, 0) + 1
    pools: dict[str, list[str]] = {}
    for kind, n in counts.items():
        pool, k = [], 0
        while len(pool) < n:
            cand = dummy_name(kind, k)
            if cand not in taken.get(kind, set()):
                pool.append(cand)
            k += 1
        pools[kind] = pool
    dummy_slots = set(dummies)

    chain = [k for k, f in enumerate(factors) if f.in_chain]
    rest = [k for k, f in enumerate(factors) if not f.in_chain]
    variants = [_variants(f) for f in factors]

    def place(var: Factor, names: dict) -> Factor:
        def fn(idx: Index) -> Index:
            if idx.slot not in dummy_slots:
                return idx
            hit = names.get(idx.slot)
            if hit is None:
                used = sum(1 for s in names if s[0] == idx.kind)
                names[idx.slot] = pools[idx.kind][used]
                return replace(idx, name=names[idx.slot], position=LOWER)
            return replace(idx, name=hit, position=UPPER)
        return var.map_indices(fn)

    # frontier entries: (sign, names, remaining positions, placed factors)
    frontier = [(1, {}, tuple(rest), ())]
    for step in range(len(factors)):
        best_key = None
        survivors: dict[tuple, tuple] = {}
        for s, names, remaining, placed in frontier:
            if step < len(chain):
                choices = [(chain[step], remaining)]
            else:
                choices = [(p, remaining[:k] + remaining[k + 1:]) for k, p in enumerate(remaining)]
            for pos, left in choices:
                for vs, var in variants[pos]:
                    new_names = dict(names)
                    g = place(var, new_names)
                    key = g.key()
                    if best_key is not None and key > best_key:
                        continue
                    if best_key is None or key < best_key:
                        best_key = key
                        survivors = {}
                    state = (left, tuple(sorted(new_names.items())), s * vs)
                    survivors.setdefault(state, (s * vs, new_names, left, placed + (g,)))
        frontier = list(survivors.values())
        if len(frontier) > _MAX_FRONTIER:
            raise SymbolicError("term is too symmetric to put in canonical form", "size")
    signs = {s for s, *_ in frontier}
    if len(signs) > 1:
        return Fraction(0), ()
    return scale * signs.pop(), frontier[0][3]


def canonicalize(m: Monomial) -> Monomial:
    """Canonical representative of ``m`` (zero monomial if it vanishes)."""
    if m.is_zero:
        return Monomial.zero()
    scale, factors = _canonical_factors(m.factors)
    if scale == 0:
        return Monomial.zero()
    return Monomial(m.coeff * scale, m.ipow, m.symbols, factors)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Polynomial:
    """Canonical sum of monomials; construct with :meth:`of`."""

    terms: tuple = ()

    @classmethod
    def of(cls, monomials: Iterable[Monomial]) -> "Polynomial":
        acc: dict[tuple, Fraction] = {}
        for m in monomials:
            c = canonicalize(m)
            if c.is_zero:
                continue
            acc[c.structure] = acc.get(c.structure, Fraction(0)) + c.coeff
        terms = [
            Monomial(coeff, ipow, symbols, factors)
            for (ipow, symbols, factors), coeff in acc.items()
            if coeff != 0
        ]
        terms.sort(key=Monomial.sort_key)
        return cls(tuple(terms))

    @classmethod
    def from_expr(cls, expr: Expr) -> "Polynomial":
        return cls.of(expand(expr))

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial.of(self.terms + other.terms)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scaled(-1)

    def __neg__(self) -> "Polynomial":
        return self.scaled(-1)

    def scaled(self, c) -> "Polynomial":
        c = Fraction(c)
        if c == 0:
            return Polynomial()
        return Polynomial(tuple(m.scaled(c) for m in self.terms))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def as_expr(self) -> Expr:
        return Add(self.terms)


# ---------------------------------------------------------------------------
# Declarations and Lagrangians
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Slot:
    """One entry of an index signature."""

    kind: str
    group: str | None = None


@dataclass(frozen=True)
class FieldDecl:
    name: str
    kind: str = "scalar"
    signature: tuple = ()

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        object.__setattr__(self, "signature", tuple(self.signature))


@dataclass(frozen=True)
class GroupDecl:
    name: str
    dim: int


@dataclass(frozen=True)
class TensorDecl:
    name: str
    signature: tuple = ()
    symmetry: str = "none"


BUILTIN_TENSORS = ("gamma", "f", "metric")


@dataclass(frozen=True)
class Declarations:
    fields: tuple = ()
    groups: tuple = ()
    params: tuple = ()
    tensors: tuple = ()

    def __post_init__(self):
        for name in ("fields", "groups", "params", "tensors"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def field(self, name: str) -> FieldDecl | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def group(self, name: str) -> GroupDecl | None:
        for g in self.groups:
            if g.name == name:
                return g
        return None

    def tensor(self, name: str) -> TensorDecl | None:
        for t in self.tensors:
            if t.name == name:
                return t
        return None

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def group_dims(self) -> dict[str, int]:
        return {g.name: g.dim for g in self.groups}


@dataclass(frozen=True)
class Lagrangian:
    declarations: Declarations = field(default_factory=Declarations)
    terms: tuple = ()

    def as_expr(self) -> Expr:
        return Add(self.terms)

    def polynomial(self) -> Polynomial:
        return Polynomial(self.terms)

    def with_terms(self, terms: Iterable[Monomial]) -> "Lagrangian":
        return Lagrangian(self.declarations, Polynomial.of(terms).terms)

    def __add__(self, other: "Lagrangian") -> "Lagrangian":
        return self.with_terms(self.terms + other.terms)

    def scaled(self, c) -> "Lagrangian":
        return Lagrangian(self.declarations, Polynomial(self.terms).scaled(c).terms)


def bind(m: Monomial, decls: Declarations) -> Monomial:
    """Check ``m`` against ``decls`` and stamp declared kinds onto factors."""
    for name, _ in m.symbols:
        if name not in decls.params:
            raise SymbolicError(f"undeclared parameter {name!r}", "undeclared-field")
    out = []
    for f in m.factors:
        if isinstance(f, FieldRef):
            decl = decls.field(f.name)
            if decl is None:
                raise SymbolicError(f"undeclared field {f.name!r}", "undeclared-field")
            if len(f.indices) != len(decl.signature):
                raise SymbolicError(
                    f"field {f.name!r} takes {len(decl.signature)} indices, got {len(f.indices)}",
                    "index-arity",
                )
            idx = tuple(_bind_index(i, s, decls, f.name) for i, s in zip(f.indices, decl.signature))
            for d in f.derivatives:
                if d.kind != LORENTZ:
                    raise SymbolicError("derivative indices must be Lorentz indices", "index-arity")
            out.append(replace(f, indices=idx, kind=decl.kind))
        else:
            out.append(_bind_tensor(f, decls))
    return m.with_factors(out)


def _bind_index(idx: Index, slot: Slot, decls: Declarations, owner: str) -> Index:
    if idx.kind != slot.kind:
        raise SymbolicError(
            f"index {idx.name!r} of {owner!r} should be {slot.kind}, got {idx.kind}", "index-arity"
        )
    group = idx.group or slot.group
    if idx.kind == ADJOINT and slot.group and idx.group and idx.group != slot.group:
        raise SymbolicError(f"index {idx.name!r} belongs to group {slot.group!r}", "index-arity")
    if idx.is_concrete and idx.kind == ADJOINT:
        g = decls.group(group) if group else None
        if g is not None and not 1 <= idx.value <= g.dim:
            raise SymbolicError(f"component {idx.value} outside 1..{g.dim} of {g.name}", "range")
    return replace(idx, group=group)


def _bind_tensor(t: TensorSymbol, decls: Declarations) -> TensorSymbol:
    decl = decls.tensor(t.name)
    if decl is not None:
        if len(t.indices) != len(decl.signature):
            raise SymbolicError(f"tensor {t.name!r} takes {len(decl.signature)} indices", "index-arity")
        idx = tuple(_bind_index(i, s, decls, t.name) for i, s in zip(t.indices, decl.signature))
        return replace(t, indices=idx, symmetry=decl.symmetry)
    if t.name == "gamma":
        if len(t.indices) != 1 or t.indices[0].kind != LORENTZ:
            raise SymbolicError("gamma takes one Lorentz index", "index-arity")
        return t
    if t.name == "metric":
        if len(t.indices) != 2 or any(i.kind != LORENTZ for i in t.indices):
            raise SymbolicError("metric takes two Lorentz indices", "index-arity")
        return replace(t, symmetry="symmetric")
    if t.name == "f":
        if len(t.indices) != 3 or any(i.kind != ADJOINT for i in t.indices):
            raise SymbolicError("f takes three adjoint indices", "index-arity")
        groups = {i.group for i in t.indices if i.group}
        if not groups:
            if len(decls.groups) != 1:
                raise SymbolicError("f needs exactly one declared group", "undeclared-field")
            group = decls.groups[0].name
        elif len(groups) == 1:
            group = groups.pop()
        else:
            raise SymbolicError("f indices mix groups", "index-arity")
        if decls.group(group) is None:
            raise SymbolicError(f"undeclared group {group!r}", "undeclared-field")
        dim = decls.group(group).dim
        idx = []
        for i in t.indices:
            if i.is_concrete and not 1 <= i.value <= dim:
                raise SymbolicError(f"component {i.value} outside 1..{dim} of {group}", "range")
            idx.append(replace(i, group=group))
        return replace(t, indices=tuple(idx), symmetry="antisymmetric")
    raise SymbolicError(f"undeclared tensor {t.name!r}", "undeclared-field")


def normalize(expr: Expr, declarations: Declarations | None = None) -> Lagrangian:
    """Expand ``expr`` into a canonical, index-closed :class:`Lagrangian`.

    Raises :class:`SymbolicError` on undeclared names or uncontracted indices.
    """
    decls = declarations or Declarations()
    monomials = [bind(m, decls) for m in expand(expr)]
    for m in monomials:
        if m.is_zero:
            continue
        _, free = classify_indices(m.factors)
        if free:
            names = ", ".join(sorted(n for _, n in free))
            raise SymbolicError(f"free index {names} left uncontracted", "free-index")
    return Lagrangian(decls, Polynomial.of(monomials).terms)


# ---------------------------------------------------------------------------
# Index collapse
# ---------------------------------------------------------------------------


def collapse_indices(
    m: Monomial, assignment: Mapping[str, int], dims: Mapping[str, int] | int
) -> Monomial:
    """Replace adjoint indices by concrete component values.

    ``dims`` gives the group dimension, either one integer or a mapping from
    group name.  Antisymmetric tensors with a repeated concrete value make the
    result the zero monomial.
    """
    def dim_of(idx: Index) -> int:
        if isinstance(dims, int):
            return dims
        if idx.group not in dims:
            raise SymbolicError(f"unknown group for index {idx.name!r}", "range")
        return dims[idx.group]

    def fn(idx: Index) -> Index:
        if idx.kind != ADJOINT or idx.name not in assignment:
            return idx
        value = int(assignment[idx.name])
        if not 1 <= value <= dim_of(idx):
            raise SymbolicError(
                f"value {value} for {idx.name!r} outside 1..{dim_of(idx)}", "range"
            )
        return replace(idx, name=str(value))

    return canonicalize(m.with_factors(f.map_indices(fn) for f in m.factors))


def rename_dummies_away(m: Monomial, reserved: set[tuple]) -> Monomial:
    """Rename dummy slots of ``m`` that collide with ``reserved`` slots."""
    dummies, _ = classify_indices(m.factors)
    used = {idx.slot for f in m.factors for idx in f.all_indices()}
    mapping = {}
    for kind, name in dummies:
        if (kind, name) not in reserved:
            continue
        k = 0
        while True:
            cand = f"{name}{k}" if k else f"{name}_"
            if (kind, cand) not in used and (kind, cand) not in reserved:
                break
            k += 1
        used.add((kind, cand))
        mapping[(kind, name)] = cand
    if not mapping:
        return m

    def fn(idx: Index) -> Index:
        new = mapping.get(idx.slot)
        return replace(idx, name=new) if new else idx

    return m.with_factors(f.map_indices(fn) for f in m.factors)
