"""Structure-constant tables for SU(2) and SU(3) and their algebraic checks."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .symbolic import Monomial, TensorSymbol


class TableError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StructureConstantTable:
    """Dense ``f[a][b][c]`` with 1-based component labels.

    ``values`` is stored 0-based.  ``exact`` marks tables whose entries are
    exactly representable (e.g. Levi-Civita), so zero tests need no tolerance.
    """

    label: str
    dim: int
    values: np.ndarray
    exact: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.dim,) * 3:
            raise TableError(f"table must have shape {(self.dim,) * 3}, got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __getitem__(self, abc: tuple[int, int, int]) -> float:
        a, b, c = abc
        return float(self.values[a - 1, b - 1, c - 1])

    def is_zero(self, value: float) -> bool:
        return value == 0 if self.exact else abs(value) < 1e-12


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for (a, b, c), s in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                         ((0, 2, 1), -1), ((2, 1, 0), -1), ((1, 0, 2), -1)):
        eps[a, b, c] = s
    return eps


def gell_mann_matrices() -> np.ndarray:
    """The eight Gell-Mann matrices, normalized to ``Tr(l_a l_b) = 2 delta_ab``."""
    lam = np.zeros((8, 3, 3), dtype=complex)
    lam[0][0, 1] = lam[0][1, 0] = 1
    lam[1][0, 1], lam[1][1, 0] = -1j, 1j
    lam[2][0, 0], lam[2][1, 1] = 1, -1
    lam[3][0, 2] = lam[3][2, 0] = 1
    lam[4][0, 2], lam[4][2, 0] = -1j, 1j
    lam[5][1, 2] = lam[5][2, 1] = 1
    lam[6][1, 2], lam[6][2, 1] = -1j, 1j
    lam[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return lam


def structure_constants_from_generators(lam: np.ndarray) -> np.ndarray:
    """``f_abc = Tr([l_a, l_b] l_c) / 4i`` for generators with trace norm 2."""
    comm = np.einsum("aij,bjk->abik", lam, lam) - np.einsum("bij,ajk->abik", lam, lam)
    f = np.einsum("abij,cji->abc", comm, lam) / 4j
    if np.max(np.abs(f.imag)) > 1e-12:
        raise TableError("generators do not give real structure constants")
    f = f.real
    f[np.abs(f) < 1e-14] = 0.0
    return f


@lru_cache(maxsize=None)
def su_n_structure_constants(n: int) -> StructureConstantTable:
    if n == 2:
        return StructureConstantTable("SU(2)", 3, levi_civita(), exact=True)
    if n == 3:
        return StructureConstantTable("SU(3)", 8, structure_constants_from_generators(gell_mann_matrices()))
    raise TableError(f"no built-in structure constants for SU({n})")


def builtin_table(group: str, dim: int | None = None) -> StructureConstantTable | None:
    """Built-in table for a group named like ``SU2``/``SU(3)``, if any."""
    name = group.upper().replace("(", "").replace(")", "").replace("_", "")
    for n in (2, 3):
        if name == f"SU{n}":
            table = su_n_structure_constants(n)
            if dim is not None and dim != table.dim:
                return None
            return table
    return None


def antisymmetry_check(t: StructureConstantTable, tol: float = 0.0) -> bool:
    f = t.values
    return bool(
        np.all(np.abs(f + f.transpose(1, 0, 2)) <= tol)
        and np.all(np.abs(f + f.transpose(0, 2, 1)) <= tol)
        and np.all(np.abs(f + f.transpose(2, 1, 0)) <= tol)
    )


def jacobi_residual(t: StructureConstantTable) -> np.ndarray:
    f = t.values
    return (
        np.einsum("abe,ecd->abcd", f, f)
        + np.einsum("bce,ead->abcd", f, f)
        + np.einsum("cae,ebd->abcd", f, f)
    )


def jacobi_check(t: StructureConstantTable, tol: float = 0.0) -> bool:
    return bool(np.all(np.abs(jacobi_residual(t)) <= tol))


def _f_tensors(pattern) -> list[TensorSymbol]:
    if isinstance(pattern, Monomial):
        pattern = pattern.tensors()
    return [t for t in pattern if t.name == "f"]


def contracted_coefficient(pattern, assignment: Mapping[str, int], t: StructureConstantTable) -> float:
    """Numeric value of a product of ``f`` tensors.

    Indices named in ``assignment`` (or already concrete) are fixed; every
    other index must occur exactly twice and is summed over ``1..t.dim``.
    """
    tensors = _f_tensors(pattern)
    counts: dict[str, int] = {}
    for ten in tensors:
        for idx in ten.indices:
            if not idx.is_concrete and idx.name not in assignment:
                counts[idx.name] = counts.get(idx.name, 0) + 1
    loose = [n for n, c in counts.items() if c != 2]
    if loose:
        raise TableError(f"unassigned free slot(s): {', '.join(sorted(loose))}")
    summed = sorted(counts)
    total = 0.0
    for values in itertools.product(range(1, t.dim + 1), repeat=len(summed)):
        env = dict(assignment)
        env.update(zip(summed, values))
        term = 1.0
        for ten in tensors:
            a, b, c = (idx.value if idx.is_concrete else int(env[idx.name]) for idx in ten.indices)
            term *= t[a, b, c]
            if term == 0.0:
                break
        total += term
    return total


def coefficient_array(tensors: Sequence[TensorSymbol], keep: Sequence[str],
                      tables: Mapping[str, StructureConstantTable]) -> np.ndarray:
    """Contract ``f`` tensors over all names not in ``keep``.

    Returns an array with one axis per entry of ``keep`` (0-based components).
    Names in ``keep`` that do not occur on any tensor broadcast as length-1 axes.
    """
    letters: dict[str, str] = {}
    alphabet = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    operands, subscripts = [], []
    for ten in tensors:
        if ten.name != "f":
            continue
        group = ten.indices[0].group
        table = tables.get(group) if group else None
        if table is None:
            raise TableError(f"no structure-constant table for group {group!r}")
        arr = table.values
        subs = ""
        # fix concrete slots by slicing, last axis first so positions stay valid
        for axis in reversed(range(3)):
            idx = ten.indices[axis]
            if idx.is_concrete:
                arr = np.take(arr, idx.value - 1, axis=axis)
        for idx in ten.indices:
            if idx.is_concrete:
                continue
            if idx.name not in letters:
                letters[idx.name] = next(alphabet)
            subs += letters[idx.name]
        operands.append(arr)
        subscripts.append(subs)
    out = "".join(letters[n] for n in keep if n in letters)
    if operands:
        result = np.einsum(",".join(subscripts) + "->" + out, *operands)
    else:
        result = np.array(1.0)
    shape = [result.shape[out.index(letters[n])] if n in letters else 1 for n in keep]
    return np.reshape(result, shape)


def parse_table(text: str, label: str = "custom", dim: int | None = None) -> StructureConstantTable:
    """Read ``a b c value`` lines; entries are completed by antisymmetry.

    A ``dim N`` line fixes the dimension; otherwise it is the largest label.
    Values are rationals (``1/2``) or floats.  Contradictory entries raise.
    """
    entries: list[tuple[int, int, int, Fraction | float, int]] = []
    exact = True
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "dim" and len(parts) == 2:
            dim = int(parts[1])
            continue
        if len(parts) != 4:
            raise TableError(f"line {lineno}: expected 'a b c value'")
        try:
            a, b, c = (int(p) for p in parts[:3])
        except ValueError:
            raise TableError(f"line {lineno}: indices must be integers") from None
        try:
            value: Fraction | float = Fraction(parts[3])
            exact = exact and Fraction(float(value)) == value
        except ValueError:
            try:
                value = float(parts[3])
            except ValueError:
                raise TableError(f"line {lineno}: bad value {parts[3]!r}") from None
            exact = False
        entries.append((a, b, c, value, lineno))
    if dim is None:
        dim = max((max(e[:3]) for e in entries), default=0)
    if dim < 1:
        raise TableError("empty table")
    values = np.zeros((dim, dim, dim))
    filled = np.zeros((dim, dim, dim), dtype=bool)
    for a, b, c, value, lineno in entries:
        if min(a, b, c) < 1 or max(a, b, c) > dim:
            raise TableError(f"line {lineno}: index outside 1..{dim}")
        if len({a, b, c}) < 3:
            if value != 0:
                raise TableError(f"line {lineno}: repeated index with nonzero value")
            continue
        for perm, sign in _permutations_with_sign((a - 1, b - 1, c - 1)):
            v = sign * float(value)
            if filled[perm] and abs(values[perm] - v) > 1e-12:
                raise TableError(f"line {lineno}: conflicts with an earlier entry")
            values[perm] = v
            filled[perm] = True
    return StructureConstantTable(label, dim, values, exact=exact)


def load_table(path: str | Path, dim: int | None = None) -> StructureConstantTable:
    path = Path(path)
    return parse_table(path.read_text(encoding="utf-8"), label=path.stem, dim=dim)


def _permutations_with_sign(abc: tuple[int, int, int]) -> Iterable[tuple[tuple[int, int, int], int]]:
    a, b, c = abc
    yield (a, b, c), 1
    yield (b, c, a), 1
    yield (c, a, b), 1
    yield (b, a, c), -1
    yield (a, c, b), -1
    yield (c, b, a), -1


def format_table(t: StructureConstantTable) -> str:
    """Nonzero entries with ``a < b < c``, in the file format read by :func:`parse_table`."""
    lines = [f"dim {t.dim}"]
    for a, b, c in itertools.combinations(range(1, t.dim + 1), 3):
        v = t[a, b, c]
        if v != 0:
            lines.append(f"{a} {b} {c} {v!r}")
    return "\n".join(lines) + "\n"


__all__ = [
    "StructureConstantTable",
    "TableError",
    "antisymmetry_check",
    "builtin_table",
    "coefficient_array",
    "contracted_coefficient",
    "gell_mann_matrices",
    "jacobi_check",
    "levi_civita",
    "load_table",
    "parse_table",
    "su_n_structure_constants",
]
