import csv
import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superpose.kernels import (
    QuadraturePlan,
    KernelError,
    TabulatedKernel,
    central_weights,
    chapman_kolmogorov_residual,
    coefficients,
    compose,
    derivative,
    drifted_heat,
    eval_kernel,
    fixed_width,
    forward_difference,
    heat,
    load_tabulated,
    moment,
    moments,
    moments_csv,
    profile_time_derivative,
    propagate,
    reconstruct_time_derivative,
    time_derivative,
)


def gaussian(x, mean, var):
    return math.exp(-((x - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)


def test_heat_peak_value():
    assert eval_kernel(heat(0.5), 0.3, 1.0, 0.3, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_heat_matches_closed_form():
    for D, v, dx, tau in [(0.5, 0.0, 0.7, 0.3), (2.0, 1.5, -1.0, 0.8)]:
        got = eval_kernel(drifted_heat(D, v), dx, tau, 0.0, 0.0)
        assert got == pytest.approx(gaussian(dx, v * tau, 2 * D * tau), rel=1e-14)


def test_drifted_peak_moves_with_velocity():
    k = drifted_heat(0.5, 1.0)
    xs = np.linspace(-1, 5, 60001)
    vals = eval_kernel(k, xs, 3.0, 0.2, 1.0)
    assert xs[np.argmax(vals)] == pytest.approx(0.2 + 2.0, abs=1e-4)


def test_kernel_integrates_to_one():
    plan = QuadraturePlan()
    k = drifted_heat(0.7, -0.4)
    total = plan.integrate(lambda x: eval_kernel(k, x, 1.3, 0.5, 0.4), 0.5 + k.mean(0.9), k.std(0.9))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_time_order_is_enforced():
    with pytest.raises(KernelError):
        eval_kernel(heat(1.0), 0.0, 1.0, 0.0, 1.0)
    with pytest.raises(KernelError):
        compose(heat(1.0), 0.0, 2.0, 0.0, 0.0, 2.0)
    with pytest.raises(KernelError):
        heat(0.0)


@pytest.mark.parametrize("kernel", [heat(0.5), heat(3.0), drifted_heat(0.5, 1.0), drifted_heat(1.2, -2.0)])
def test_composition_holds(kernel):
    for t2 in (0.6, 1.1, 1.9):
        assert chapman_kolmogorov_residual(kernel, 0.7, 2.0, 0.1, 0.5, t2) < 1e-8


def test_composition_is_independent_of_intermediate_time():
    k = drifted_heat(0.5, 0.3)
    values = [compose(k, 1.2, 3.0, -0.4, 0.0, t2) for t2 in (0.2, 1.0, 1.5, 2.9)]
    assert max(values) - min(values) < 1e-8


def test_fixed_width_kernel_breaks_composition():
    k = fixed_width(1.0)
    for t2 in (0.6, 1.1, 1.9):
        assert chapman_kolmogorov_residual(k, 0.7, 2.0, 0.1, 0.5, t2) > 1e-2
    # convolving two unit Gaussians gives variance 2, not 1
    expected = gaussian(0.6, 0.0, 2.0) - gaussian(0.6, 0.0, 1.0)
    assert chapman_kolmogorov_residual(k, 0.7, 2.0, 0.1, 0.5, 1.0) == pytest.approx(abs(expected), rel=1e-10)


def test_heat_moments():
    G = moments(heat(0.5), 0.0, 0.0, 0.01, 4).G
    assert G[0] == pytest.approx(1.0, abs=1e-10)
    assert abs(G[1]) < 1e-10
    assert G[2] == pytest.approx(0.01, abs=1e-8)
    assert abs(G[3]) < 1e-10
    assert G[4] == pytest.approx(3 * 0.01**2, rel=1e-9)


def test_coefficient_examples():
    S = coefficients(heat(0.5), 0.0, 0.0, 0.01, 4)
    assert S[1, 2] == pytest.approx(0.5, abs=1e-6)
    assert S[1, 4] == pytest.approx(1.25e-3, rel=1e-8)
    drift = coefficients(drifted_heat(0.5, 1.0), 0.0, 0.0, 0.01, 2)
    # the (-dx)^n weight flips the sign of the drift
    assert drift[1, 1] == pytest.approx(-1.0, abs=1e-6)


def test_higher_order_coefficients_are_consistent():
    dt = 0.02
    table = coefficients(drifted_heat(0.8, 0.5), 0.0, 0.0, dt, 5, max_m=3)
    for (m, n), value in table.S.items():
        assert value * dt**m / math.factorial(m) == pytest.approx(table.S[1, n] * dt, rel=1e-12)
        assert value == math.factorial(m) * table.moments.G[n] / (math.factorial(n) * dt**m)


def test_coefficient_preconditions():
    with pytest.raises(KernelError):
        coefficients(heat(1.0), 0.0, 0.0, 0.01, 1)
    with pytest.raises(KernelError):
        moment(heat(1.0), 0.0, 0.0, 0.0, 2)
    with pytest.raises(KernelError):
        moment(heat(1.0), 0.0, 0.0, 0.1, -1)


def test_quadrature_plan_validation():
    for kwargs in ({"node_count": 32}, {"half_width": 6.0}, {"rule": "trapezoid"}, {"node_count": 100}):
        with pytest.raises(KernelError):
            QuadraturePlan(**kwargs)
    simpson = QuadraturePlan(rule="simpson")
    assert moment(heat(0.5), 0.0, 0.0, 0.01, 2, simpson) == pytest.approx(0.01, rel=1e-9)


def test_central_weights_are_exact():
    assert central_weights(1) == ((-2, Fraction(1, 12)), (-1, Fraction(-2, 3)), (1, Fraction(2, 3)), (2, Fraction(-1, 12)))
    assert dict(central_weights(2)) == {
        -2: Fraction(-1, 12), -1: Fraction(4, 3), 0: Fraction(-5, 2), 1: Fraction(4, 3), 2: Fraction(-1, 12)
    }
    for n in range(1, 5):
        # fourth order: exact on every monomial x^p with p <= n + 3
        w = central_weights(n)
        for p in range(n + 4):
            total = sum(c * k**p for k, c in w)
            assert total == (math.factorial(n) if p == n else 0)


def test_derivative_of_polynomial():
    assert derivative(lambda x: x**3, 2.0, 1, 0.1) == pytest.approx(12.0, rel=1e-12)
    assert derivative(lambda x: x**4, 1.0, 3, 0.1) == pytest.approx(24.0, rel=1e-9)


def test_analytic_time_derivative_solves_the_diffusion_equation():
    for k, x, t in [(heat(0.5), 1.3, 0.7), (drifted_heat(0.8, -0.6), 0.2, 1.5)]:
        h = 1e-3
        kx = lambda y: eval_kernel(k, y, t, 0.0, 0.0)  # noqa: E731
        rhs = k.D * derivative(kx, x, 2, h) - k.v * derivative(kx, x, 1, h)
        assert time_derivative(k, x, t) == pytest.approx(rhs, rel=1e-8)


def test_reconstruction_heat_example():
    # at x^2 = 2 D t the kernel is momentarily stationary, so the check is absolute
    k = heat(0.5)
    assert time_derivative(k, 1.0, 1.0) == 0.0
    assert abs(reconstruct_time_derivative(k, 1.0, 1.0, 1e-3, 2)) < 1e-4 * k.density(0.0, 1.0)


def test_reconstruction_drifted_example():
    k = drifted_heat(0.5, 0.2)
    exact = time_derivative(k, 0.0, 1.0)
    got = reconstruct_time_derivative(k, 0.0, 1.0, 1e-3, 2)
    assert abs(got - exact) / abs(exact) < 1e-4


def test_higher_truncation_difference_is_first_order():
    k = heat(0.5)
    diffs = [
        abs(reconstruct_time_derivative(k, 1.0, 1.0, dt, 4) - reconstruct_time_derivative(k, 1.0, 1.0, dt, 2))
        for dt in (1e-2, 1e-3, 1e-4)
    ]
    for big, small in zip(diffs, diffs[1:]):
        assert math.log10(big / small) == pytest.approx(1.0, abs=0.1)


def test_reconstruction_against_forward_difference():
    k = drifted_heat(0.5, 0.2)
    errs = [
        abs(reconstruct_time_derivative(k, 0.5, 1.0, dt, 2) - forward_difference(k, 0.5, 1.0, dt))
        for dt in (1e-2, 1e-3, 1e-4)
    ]
    assert errs[0] > errs[1] > errs[2]
    assert math.log10(errs[0] / errs[2]) / 2 >= 0.9


def test_reconstruction_preconditions():
    with pytest.raises(KernelError):
        reconstruct_time_derivative(heat(1.0), 1.0, 1.0, 1e-3, 1)
    with pytest.raises(KernelError):
        time_derivative(fixed_width(1.0), 1.0, 1.0)


def test_expansion_acts_on_a_propagated_profile():
    k = heat(0.5)

    def profile(x):
        return 0.6 * np.exp(-((x + 1) ** 2) / 0.5) + 0.4 * np.exp(-((x - 1) ** 2) / 2)

    # total mass is conserved by the propagator
    mass0 = 0.6 * math.sqrt(0.5 * math.pi) + 0.4 * math.sqrt(2 * math.pi)
    mass = QuadraturePlan().integrate(lambda x: np.array([propagate(k, profile, xi, 0.8, 0.0, 1.5) for xi in x]), 0.0, 1.5)
    assert mass == pytest.approx(mass0, rel=1e-9)
    expansion, forward = profile_time_derivative(k, profile, 0.4, 0.8, 1e-4, 2, 0.0, 1.5)
    assert expansion == pytest.approx(forward, rel=1e-3)


def test_tabulated_kernel(tmp_path):
    dt = 0.01
    grid = np.linspace(-1, 1, 4001)
    values = np.array([gaussian(x, 0.0, 2 * 0.5 * dt) for x in grid])
    values /= np.trapezoid(values, grid)
    path = tmp_path / "kernel.txt"
    np.savetxt(path, np.column_stack([grid, values]), header="x value")
    k = load_tabulated(path, dt)
    G = moments(k, 0.0, 0.0, dt, 2).G
    assert G[0] == pytest.approx(1.0, abs=1e-8)
    assert G[2] == pytest.approx(0.01, rel=1e-4)
    with pytest.raises(KernelError):
        moment(k, 0.0, 0.0, 0.02, 2)


@pytest.mark.parametrize(
    "grid, values",
    [
        ([0.0, 1.0, 3.0], [0.5, 0.5, 0.0]),
        ([0.0, 1.0, 2.0], [1.0, -0.5, 0.5]),
        ([0.0, 1.0, 2.0], [1.0, 1.0, 1.0]),
        ([0.0, 1.0], [1.0, 1.0]),
    ],
)
def test_tabulated_kernel_validation(grid, values):
    with pytest.raises(KernelError):
        TabulatedKernel(np.array(grid), np.array(values), 0.1)


def test_moments_csv():
    rows = list(csv.reader(io.StringIO(moments_csv([moments(heat(0.5), 0.0, 0.0, 0.01, 2)]))))
    assert rows[0] == ["x", "t", "dt", "n", "G", "S1n"]
    assert rows[1][3:] == ["0", "1.0", ""]
    assert float(rows[3][5]) == pytest.approx(0.5, abs=1e-6)


kernels = st.one_of(
    st.builds(heat, st.floats(0.05, 5.0)),
    st.builds(drifted_heat, st.floats(0.05, 5.0), st.floats(-3.0, 3.0)),
)


@settings(max_examples=120)
@given(kernels, st.floats(-5, 5), st.floats(0, 10), st.floats(1e-4, 0.5), st.integers(0, 6))
def test_doubling_nodes_is_stable(kernel, x, t, dt, n):
    plan = QuadraturePlan()
    a = moment(kernel, x, t, dt, n, plan)
    b = moment(kernel, x, t, dt, n, plan.doubled())
    assert abs(a - b) < 1e-10


@settings(max_examples=100)
@given(kernels, st.floats(-5, 5), st.floats(0, 10), st.floats(1e-4, 0.5))
def test_probability_is_conserved(kernel, x, t, dt):
    assert moment(kernel, x, t, dt, 0) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=100)
@given(st.floats(0.05, 5.0), st.floats(1e-4, 0.5), st.integers(0, 3))
def test_odd_moments_vanish_without_drift(D, dt, k):
    assert abs(moment(heat(D), 0.0, 0.0, dt, 2 * k + 1)) < 1e-9
