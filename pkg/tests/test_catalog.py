import numpy as np
import pytest

from superpose import catalog
from superpose.classify import classify_lagrangian
from superpose.gauge import StructureConstantTable
from superpose.parser import parse_lagrangian, render

NAMES = ["scalar", "dirac", "em", "qed", "qcd-classical", "phi4", "higgs"]


def test_names():
    assert catalog.names() == NAMES


def test_unknown_name_lists_alternatives():
    with pytest.raises(KeyError) as err:
        catalog.get("yukawa")
    assert all(n in str(err.value) for n in NAMES)


@pytest.mark.parametrize("name", NAMES)
def test_entry_matches_classifier(name):
    entry = catalog.get(name)
    L = entry.lagrangian()
    assert parse_lagrangian(render(L)).terms == L.terms
    v = classify_lagrangian(L)
    assert v.overall == entry.expected_verdict
    assert tuple(v.flagged()) == entry.expected_flags


def test_flagged_terms_are_the_quartic_ones():
    for name in ("phi4", "higgs"):
        L = catalog.get(name).lagrangian()
        (index, reason), = catalog.get(name).expected_flags
        assert "lambda" in dict(L.terms[index].symbols)
        assert classify_lagrangian(L).per_term[index].i == 4


def test_qcd_with_symmetric_table_is_violating():
    L = catalog.get("qcd-classical").lagrangian()
    ones = StructureConstantTable("ones", 8, np.ones((8, 8, 8)))
    v = classify_lagrangian(L, tables={"SU3": ones})
    assert v.overall == "violating"
    assert [reason for _, reason in v.flagged()] == ["collapse-violation"]


def test_sources_are_text_files():
    for name in NAMES:
        assert catalog.get(name).source.lstrip().startswith("#")
