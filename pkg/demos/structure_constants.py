"""Structure constants of su(2) and su(3) and their algebraic checks."""
import numpy as np

from superpose.gauge import antisymmetry_check, format_table, jacobi_check, jacobi_residual, su_n_structure_constants

for n in (2, 3):
    t = su_n_structure_constants(n)
    print(f"SU({n}): dim {t.dim}, antisymmetric {antisymmetry_check(t, 1e-12)}, "
          f"jacobi {jacobi_check(t, 1e-10)} (max residual {np.abs(jacobi_residual(t)).max():.1e})")

print(format_table(su_n_structure_constants(3)))
