"""Derive the field equations of the free theories and of phi^4."""
from superpose import catalog, eom_degree, euler_lagrange
from superpose.parser import render_polynomial

for name, field, conjugated in [("scalar", "phi", False), ("dirac", "psi", True), ("em", "A", False), ("phi4", "phi", False)]:
    eq = euler_lagrange(catalog.get(name).lagrangian(), field, conjugated=conjugated)
    print(f"{name} ({'bar ' if conjugated else ''}{field}): degree {eom_degree(eq, field)}")
    print("   ", render_polynomial(eq.lhs), "= 0")

# the cubic term of phi^4 is what breaks superposition of solutions
