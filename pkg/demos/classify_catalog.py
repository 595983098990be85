"""Classify every catalog Lagrangian and show the per-term powers."""
from superpose import catalog, classify_lagrangian

for name in catalog.names():
    L = catalog.get(name).lagrangian()
    v = classify_lagrangian(L)
    print(f"{name}: {v.overall}")
    for k, tc in enumerate(v.per_term):
        mark = "ok " if tc.compliant else "BAD"
        print(f"  [{mark}] term {k}: {tc.target} i={tc.i} j={tc.j} ({tc.reason})")

# a field-by-field reading of QED: the coupling is linear in both psi and A
L = catalog.get("qed").lagrangian()
for target in ("psi", "A"):
    v = classify_lagrangian(L, "per-field", target)
    print(f"qed read as a theory of {target}: {v.overall}")
