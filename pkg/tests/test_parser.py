import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from strategies import lagrangian_text

from superpose import catalog
from superpose.parser import ParseError, SourceSpan, parse_lagrangian, render, render_monomial, tokenize
from superpose.symbolic import FieldRef, Polynomial, lower, upper

SCALAR = """\
# free scalar field
param m;
field phi: scalar;
term 1/2 * d[^mu](phi) * d[mu](phi);
term -1/2 * m^2 * phi^2;
"""


def test_scalar_source_parses():
    L = parse_lagrangian(SCALAR)
    assert L.declarations.field_names == ("phi",)
    assert L.declarations.params == ("m",)
    assert len(L.terms) == 2
    phi = FieldRef("phi")
    kinetic = Polynomial.from_expr(phi.d(lower("nu")) * phi.d(upper("nu")))
    assert any(t.factors == kinetic.terms[0].factors for t in L.terms)


def test_juxtaposition_and_star_agree():
    a = parse_lagrangian("param m; field phi: scalar; term m * phi * phi;")
    b = parse_lagrangian("param m; field phi: scalar; term m phi phi;")
    assert a.terms == b.terms


def test_parentheses_and_powers_expand():
    a = parse_lagrangian("param m; field phi: scalar; term (phi + m)^2;")
    b = parse_lagrangian("param m; field phi: scalar; term phi^2; term 2 m phi; term m^2;")
    assert a.terms == b.terms


def test_terms_are_summed():
    a = parse_lagrangian("field phi: scalar; term phi^2; term phi^2;")
    b = parse_lagrangian("field phi: scalar; term 2 * phi^2;")
    assert a.terms == b.terms


def test_bytes_input():
    assert parse_lagrangian(SCALAR.encode()).terms == parse_lagrangian(SCALAR).terms


def test_nested_derivative_and_bar():
    L = parse_lagrangian("field phi: scalar; term d[mu](d[^mu](phi)) * phi;")
    (term,) = L.terms
    assert max(f.order for f in term.fields()) == 2
    L = parse_lagrangian("field psi: spinor; term bar(psi) * psi;")
    assert L.terms[0].fields()[0].conjugated


def test_gauge_declarations():
    L = parse_lagrangian(
        "group SU3 dim 8; field A: vector [lorentz, adjoint(SU3)];"
        "term f[a,b,c] A[mu,a] A[nu,b] d[^mu](A[^nu,c]);"
    )
    assert L.declarations.group_dims() == {"SU3": 8}
    assert {i.group for t in L.terms[0].tensors() for i in t.indices} == {"SU3"}


@pytest.mark.parametrize(
    "source, kind, line, column",
    [
        ("field phi: scalar;\nterm phi *;", "syntax", 2, 11),
        ("field phi: scalar;\nterm phi * chi;", "undeclared-field", 2, 12),
        ("field A: vector [lorentz];\nterm A * A;", "index-arity", 2, 6),
        ("field A: vector [lorentz];\nterm A[mu] * A[nu];", "free-index", 2, 1),
        ("field phi: scalar; term phi $ phi;", "syntax", 1, 29),
        ("field phi: scalar; field phi: scalar;", "syntax", 1, 26),
        ("term 1/0;", "syntax", 1, 8),
    ],
)
def test_errors_carry_kind_and_span(source, kind, line, column):
    with pytest.raises(ParseError) as err:
        parse_lagrangian(source)
    assert err.value.kind == kind
    assert (err.value.span.line, err.value.span.column) == (line, column)


def test_lorentz_pair_needs_opposite_positions():
    with pytest.raises(ParseError) as err:
        parse_lagrangian("field phi: scalar; term d[mu](phi) * d[mu](phi);")
    assert err.value.kind == "free-index"


def test_exponent_limit():
    with pytest.raises(ParseError):
        parse_lagrangian("field phi: scalar; term phi^99;")


def test_deep_nesting_is_reported():
    text = "field phi: scalar; term " + "(" * 500 + "phi" + ")" * 500 + ";"
    with pytest.raises(ParseError):
        parse_lagrangian(text)


def test_invalid_utf8():
    with pytest.raises(ParseError):
        parse_lagrangian(b"term \xff;")


def test_tokenizer_spans():
    toks = tokenize("term\n  phi;")
    assert [(t.text, t.span) for t in toks[:2]] == [("term", SourceSpan(1, 1, 4)), ("phi", SourceSpan(2, 3, 3))]


@pytest.mark.parametrize("name", catalog.names())
def test_catalog_round_trip(name):
    L = catalog.get(name).lagrangian()
    again = parse_lagrangian(render(L))
    assert again.terms == L.terms
    assert again.declarations == L.declarations


def test_render_monomial_compresses_powers():
    L = parse_lagrangian("param lambda; field phi: scalar; term -1/24 lambda phi^4;")
    assert render_monomial(L.terms[0]) == "-1/24 * lambda * phi^4"


@settings(max_examples=150)
@given(lagrangian_text())
def test_round_trip(text):
    L = parse_lagrangian(text)
    again = parse_lagrangian(render(L))
    assert again.terms == L.terms
    assert again.declarations == L.declarations


@settings(max_examples=100)
@given(lagrangian_text(), st.integers(0, 2**32 - 1))
def test_whitespace_and_comments_are_insignificant(text, seed):
    rng = random.Random(seed)
    out = []
    for ch in text:
        out.append(ch)
        if ch in ";*(),[" and rng.random() < 0.5:
            out.append(rng.choice(["  ", "\n", "\t", " # note\n", "\n\n"]))
    assert parse_lagrangian("".join(out)).terms == parse_lagrangian(text).terms


_ALPHABET = "field phi A psi scalar spinor vector lorentz term param m d bar gamma [ ] ( ) ^ * + - / ; : , 1 2 mu nu #\n"


@settings(max_examples=300)
@given(st.one_of(
    st.text(max_size=80),
    st.lists(st.sampled_from(_ALPHABET.split(" ")), max_size=40).map(" ".join),
    st.binary(max_size=60),
))
def test_parser_is_total(data):
    try:
        parse_lagrangian(data)
    except ParseError as err:
        assert err.kind in ParseError.KINDS
        assert err.span.line >= 1 and err.span.column >= 1


@settings(max_examples=100)
@given(lagrangian_text(), st.data())
def test_truncated_sources_fail_cleanly(text, data):
    cut = data.draw(st.integers(0, len(text)))
    try:
        parse_lagrangian(text[:cut])
    except ParseError:
        pass
