"""Moments of the heat kernel, the composition law, and the time derivative."""
import numpy as np

from superpose.kernels import (
    chapman_kolmogorov_residual,
    coefficients,
    fixed_width,
    forward_difference,
    heat,
    moments,
    reconstruct_time_derivative,
    time_derivative,
)

k = heat(0.5)
dt = 0.01
print("G_n at x=0, dt=0.01:", np.round(moments(k, 0.0, 0.0, dt, 4).G, 12))
S = coefficients(k, 0.0, 0.0, dt, 4)
print("S^1_2 (the diffusion constant):", S[1, 2])

for t2 in (0.8, 1.25, 1.7):
    print(f"t2={t2}: heat residual {chapman_kolmogorov_residual(k, 0.7, 2.0, 0.1, 0.5, t2):.1e}, "
          f"fixed width {chapman_kolmogorov_residual(fixed_width(1.0), 0.7, 2.0, 0.1, 0.5, t2):.1e}")

# D = 1 so that dK/dt is not zero at (1, 1)
k = heat(1.0)
exact = time_derivative(k, 1.0, 1.0)
print("analytic dK/dt at (1, 1):", exact)
for dt in (1e-2, 1e-3, 1e-4):
    rec = reconstruct_time_derivative(k, 1.0, 1.0, dt, 2)
    fd = forward_difference(k, 1.0, 1.0, dt)
    print(f"dt={dt:g}: expansion {rec:.10f}  forward difference {fd:.10f}  gap {abs(rec - fd):.2e}")
