"""Built-in Lagrangians with their expected verdicts.

Each entry is a ``.lag`` file shipped next to this module, so the same text
works as a command-line input.  Flags refer to term positions in the
canonical (normalized) term order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..parser import parse_lagrangian
from ..symbolic import Lagrangian


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    source: str
    expected_verdict: str
    expected_flags: tuple
    location: str

    def lagrangian(self) -> Lagrangian:
        return parse_lagrangian(self.source)


_ENTRIES = {
    "scalar": ("superposable", (), "free real scalar field"),
    "dirac": ("superposable", (), "free Dirac field"),
    "em": ("superposable", (), "free electromagnetic field"),
    "qed": ("superposable", (), "quantum electrodynamics with minimal coupling"),
    "qcd-classical": ("superposable", (), "classical QCD, one flavour, SU(3) gluons"),
    "phi4": ("violating", ((2, "i-too-large"),), "scalar field with quartic self-interaction"),
    "higgs": ("violating", ((2, "i-too-large"),), "Higgs sector, quartic potential term"),
}


def names() -> list[str]:
    return list(_ENTRIES)


@lru_cache(maxsize=None)
def get(name: str) -> CatalogEntry:
    if name not in _ENTRIES:
        raise KeyError(f"unknown catalog entry {name!r}; available: {', '.join(_ENTRIES)}")
    verdict, flags, location = _ENTRIES[name]
    source = resources.files(__name__).joinpath(f"{name}.lag").read_text(encoding="utf-8")
    return CatalogEntry(name, source, verdict, flags, location)
