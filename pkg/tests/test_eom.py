from fractions import Fraction

import pytest

from superpose import catalog
from superpose.eom import (
    Equation,
    EulerLagrangeError,
    conjugated_degree,
    eom_degree,
    euler_lagrange,
    partial_wrt_derivative,
    partial_wrt_field,
    total_derivative,
)
from superpose.parser import parse_lagrangian
from superpose.symbolic import I, FieldRef, Param, Polynomial, gamma, lower, upper

phi = FieldRef("phi")
chi = FieldRef("chi")
psi = FieldRef("psi", kind="spinor")
m, e = Param("m"), Param("e")


def A(idx):
    return FieldRef("A", indices=(idx,), kind="vector")


def P(expr):
    return Polynomial.from_expr(expr)


# Expected equations written out by hand.  Overall signs follow the usual
# textbook form, so comparisons go through Equation.equivalent.
KLEIN_GORDON = P(phi.d(upper("mu")).d(lower("mu")) + m * m * phi)
MAXWELL = P(A(upper("nu")).d(upper("mu")).d(lower("mu")) - A(upper("mu")).d(upper("nu")).d(lower("mu")))
DIRAC = P(I * gamma(upper("mu")) * psi.d(lower("mu")) - m * psi)
DIRAC_QED = P(I * gamma(upper("mu")) * psi.d(lower("mu")) - m * psi - e * gamma(upper("mu")) * psi * A(lower("mu")))


def test_klein_gordon():
    eq = euler_lagrange(catalog.get("scalar").lagrangian(), "phi")
    assert eq.equivalent(KLEIN_GORDON)
    # with the +1/2 kinetic normalization the sign matches exactly
    assert eq.lhs == KLEIN_GORDON


def test_maxwell():
    eq = euler_lagrange(catalog.get("em").lagrangian(), "A")
    assert eq.equivalent(MAXWELL)
    assert [i.name for i in eq.free_indices] == ["nu"]


def test_dirac_wrt_conjugate():
    eq = euler_lagrange(catalog.get("dirac").lagrangian(), "psi", conjugated=True)
    assert eq.equivalent(DIRAC)
    assert not eq.equivalent(P(I * gamma(upper("mu")) * psi.d(lower("mu")) + m * psi))


def test_dirac_with_minimal_coupling():
    eq = euler_lagrange(catalog.get("qed").lagrangian(), "psi", conjugated=True)
    assert eq.equivalent(DIRAC_QED)


def test_maxwell_with_source():
    eq = euler_lagrange(catalog.get("qed").lagrangian(), "A")
    current = P(e * psi.bar() * gamma(upper("nu")) * psi)
    # d_mu F^{mu nu} = e psibar gamma^nu psi
    assert eq.equivalent(MAXWELL - current)
    assert not eq.equivalent(MAXWELL + current)


def test_scalar_momentum():
    L = catalog.get("scalar").lagrangian()
    assert partial_wrt_derivative(L, "phi", "mu") == P(phi.d(upper("mu")))
    assert partial_wrt_field(L, "phi") == P(-1 * m * m * phi)


def test_field_strength_momentum():
    L = catalog.get("em").lagrangian()
    got = partial_wrt_derivative(L, "A", "mu", index_names=["nu"])
    expected = P(A(upper("mu")).d(upper("nu")) - A(upper("nu")).d(upper("mu")))
    assert got == expected


def test_total_derivative_product_rule():
    p = P(phi * chi)
    mu = lower("mu")
    assert total_derivative(p, mu) == P(phi.d(mu) * chi + phi * chi.d(mu))


def test_total_derivative_avoids_captured_dummies():
    p = P(phi.d(lower("mu")) * phi.d(upper("mu")))
    got = total_derivative(p, lower("mu"))
    assert got == P(2 * phi.d(lower("rho")) * phi.d(upper("rho"), lower("mu")))


def test_quartic_gives_cubic_equation():
    eq = euler_lagrange(catalog.get("phi4").lagrangian(), "phi")
    lam = Param("lambda")
    assert eq.lhs == P(KLEIN_GORDON.as_expr() + Fraction(1, 6) * lam * phi**3)
    assert eom_degree(eq, "phi") == 3


@pytest.mark.parametrize("name", ["scalar", "dirac", "em", "qed"])
def test_superposable_entries_give_linear_equations(name):
    L = catalog.get(name).lagrangian()
    for decl in L.declarations.fields:
        conj = decl.kind == "spinor"
        eq = euler_lagrange(L, decl.name, conjugated=conj)
        assert eom_degree(eq, decl.name) <= 1


def test_conjugated_degree():
    eq = euler_lagrange(catalog.get("dirac").lagrangian(), "psi")
    assert eom_degree(eq, "psi") == 0
    assert conjugated_degree(eq, "psi") == 1


def test_higher_derivative_lagrangian_is_rejected():
    L = parse_lagrangian("field phi: scalar; term phi * d[mu](d[^mu](phi));")
    with pytest.raises(EulerLagrangeError):
        euler_lagrange(L, "phi")


def test_undeclared_target():
    with pytest.raises(EulerLagrangeError):
        euler_lagrange(catalog.get("scalar").lagrangian(), "chi")


def test_absent_field_gives_trivial_equation():
    L = parse_lagrangian("field phi: scalar; field chi: scalar; term phi^2;")
    assert euler_lagrange(L, "chi").is_trivial


def test_equivalence_is_up_to_rational_scale():
    eq = Equation(KLEIN_GORDON, "phi")
    assert eq.equivalent(KLEIN_GORDON.scaled(Fraction(-3, 2)))
    assert not eq.equivalent(P(phi.d(upper("mu")).d(lower("mu")) - m * m * phi))
    assert not eq.equivalent(P(I * phi.d(upper("mu")).d(lower("mu")) + I * m * m * phi))
    assert Equation(Polynomial()).equivalent(Polynomial())


def test_custom_free_index_names():
    eq = euler_lagrange(catalog.get("em").lagrangian(), "A", index_names=["kappa"])
    renamed = P(A(upper("kappa")).d(upper("mu")).d(lower("mu")) - A(upper("mu")).d(upper("kappa")).d(lower("mu")))
    assert eq.equivalent(renamed)
