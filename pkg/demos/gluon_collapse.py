"""The four-gluon term looks quartic, but on a single colour component it vanishes."""
import numpy as np

from superpose import catalog, classify_lagrangian
from superpose.gauge import StructureConstantTable, contracted_coefficient, su_n_structure_constants

L = catalog.get("qcd-classical").lagrangian()
quartic = L.terms[-1]
su3 = su_n_structure_constants(3)
ones = StructureConstantTable("ones", 8, np.ones((8, 8, 8)))

names = sorted({i.name for f in quartic.fields() for i in f.indices if i.kind == "adjoint"})
print("adjoint indices on the gluons:", names)
for k in range(1, 9):
    a = {n: k for n in names}
    print(f"component {k}: SU(3) {contracted_coefficient(quartic, a, su3):+.3e}"
          f"   all-ones {contracted_coefficient(quartic, a, ones):+.3e}")

print("verdict with SU(3):", classify_lagrangian(L).overall)
print("verdict with a symmetric table:", classify_lagrangian(L, tables={"SU3": ones}).overall)
