"""Transition kernels in one dimension: composition, moments, and the moment
expansion of the time derivative.

Notation: ``K(x2, t2; x1, t1)`` is the density of moving from ``x1`` at
``t1`` to ``x2`` at ``t2``.  The short-time moments are

    G(x, n) = integral d(dx) (-dx)^n K(x + dx, t + dt; x, t)

and the expansion coefficients are ``S[m, n] = m! G(x, n) / (n! dt^m)``.
With ``m = 1`` these give ``dK/dt ~ sum_n d^n/dx^n [S[1, n] K]``.

Only real diffusion-type kernels are provided; their moment integrals
converge, which the free Schroedinger propagator's do not.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, Union

import numpy as np


class KernelError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

RULES = ("gauss-legendre", "simpson")
_GL_ORDER = 8


@lru_cache(maxsize=None)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


@dataclass(frozen=True)
class QuadraturePlan:
    """Fixed composite rule over ``center +- half_width * scale``.

    ``half_width`` is measured in standard deviations of the integrand's
    Gaussian envelope.  ``gauss-legendre`` uses panels of 8 nodes.
    """

    half_width: float = 12.0
    node_count: int = 256
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if self.node_count < 64:
            raise KernelError("node_count must be at least 64")
        if self.half_width < 8:
            raise KernelError("half_width must be at least 8 standard deviations")
        if self.rule not in RULES:
            raise KernelError(f"unknown rule {self.rule!r}; choose from {RULES}")
        if self.rule == "gauss-legendre" and self.node_count % _GL_ORDER:
            raise KernelError(f"gauss-legendre needs node_count divisible by {_GL_ORDER}")
        if self.rule == "simpson" and self.node_count % 2:
            raise KernelError("simpson needs an even node_count")

    def doubled(self) -> "QuadraturePlan":
        return QuadraturePlan(self.half_width, 2 * self.node_count, self.rule)

    def nodes(self, center: float, scale: float) -> tuple[np.ndarray, np.ndarray]:
        lo = center - self.half_width * scale
        hi = center + self.half_width * scale
        if self.rule == "simpson":
            x = np.linspace(lo, hi, self.node_count + 1)
            h = (hi - lo) / self.node_count
            w = np.full(x.size, 2.0)
            w[1::2] = 4.0
            w[0] = w[-1] = 1.0
            return x, w * h / 3
        panels = self.node_count // _GL_ORDER
        t, wt = _leggauss(_GL_ORDER)
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        w = (half[:, None] * wt[None, :]).ravel()
        return x, w

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray], center: float, scale: float) -> float:
        x, w = self.nodes(center, scale)
        return float(np.dot(w, fn(x)))


DEFAULT_PLAN = QuadraturePlan()


# ---------------------------------------------------------------------------
# Kernel families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatKernel:
    """Gaussian transition density with diffusivity ``D`` and drift ``v``."""

    D: float
    v: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise KernelError("diffusivity D must be positive")

    @property
    def family(self) -> str:
        return "heat" if self.v == 0 else "drifted-heat"

    def density(self, dx, tau):
        var = 2 * self.D * tau
        return np.exp(-((dx - self.v * tau) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)

    def mean(self, tau: float) -> float:
        return self.v * tau

    def std(self, tau: float) -> float:
        return math.sqrt(2 * self.D * tau)

    def time_derivative(self, dx, tau):
        y = dx - self.v * tau
        rate = -1 / (2 * tau) + self.v * y / (2 * self.D * tau) + y**2 / (4 * self.D * tau**2)
        return self.density(dx, tau) * rate


@dataclass(frozen=True)
class FixedWidthKernel:
    """Gaussian whose width ignores the elapsed time.

    Not a valid propagator: composing two steps doubles the variance.  Used as
    a negative control for the composition check.
    """

    sigma: float

    family = "fixed-width"

    def density(self, dx, tau):
        return np.exp(-(dx**2) / (2 * self.sigma**2)) / (math.sqrt(2 * math.pi) * self.sigma)

    def mean(self, tau: float) -> float:
        return 0.0

    def std(self, tau: float) -> float:
        return self.sigma


@dataclass(frozen=True, eq=False)
class TabulatedKernel:
    """Displacement density sampled on a uniform grid for one time step ``dt``."""

    grid: np.ndarray
    values: np.ndarray
    dt: float

    family = "tabulated"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 3:
            raise KernelError("tabulated kernel needs matching 1-D grid and values")
        steps = np.diff(grid)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(steps[0]):
            raise KernelError("tabulated kernel grid must be uniform and increasing")
        if np.any(values < 0):
            raise KernelError("tabulated kernel values must be nonnegative")
        total = float(np.trapezoid(values, grid))
        if abs(total - 1) > 1e-8:
            raise KernelError(f"tabulated kernel integrates to {total}, not 1")
        if not self.dt > 0:
            raise KernelError("dt must be positive")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def _check_tau(self, tau: float) -> None:
        if not math.isclose(tau, self.dt, rel_tol=1e-12):
            raise KernelError(f"tabulated kernel is only defined for a time step of {self.dt}")

    def density(self, dx, tau):
        self._check_tau(tau)
        return np.interp(dx, self.grid, self.values, left=0.0, right=0.0)


KernelSpec = Union[HeatKernel, FixedWidthKernel, TabulatedKernel]


def heat(D: float) -> HeatKernel:
    return HeatKernel(D)


def drifted_heat(D: float, v: float) -> HeatKernel:
    return HeatKernel(D, v)


def fixed_width(sigma: float) -> FixedWidthKernel:
    return FixedWidthKernel(sigma)


def load_tabulated(path: str | Path, dt: float) -> TabulatedKernel:
    """Read two whitespace-separated columns ``x value``; ``#`` starts a comment."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise KernelError("tabulated kernel file needs exactly two columns")
    return TabulatedKernel(data[:, 0], data[:, 1], dt)


# ---------------------------------------------------------------------------
# Evaluation and composition
# ---------------------------------------------------------------------------


def eval_kernel(spec: KernelSpec, x2, t2: float, x1, t1: float):
    if not t2 > t1:
        raise KernelError(f"need t2 > t1, got t2={t2}, t1={t1}")
    out = spec.density(np.asarray(x2, dtype=float) - np.asarray(x1, dtype=float), t2 - t1)
    return float(out) if np.ndim(out) == 0 else out


def compose(spec: KernelSpec, x3: float, t3: float, x1: float, t1: float, t2: float,
            plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    """``integral dx2 K(x3, t3; x2, t2) K(x2, t2; x1, t1)`` by fixed quadrature."""
    if not t1 < t2 < t3:
        raise KernelError(f"need t1 < t2 < t3, got {t1}, {t2}, {t3}")
    if isinstance(spec, TabulatedKernel):
        raise KernelError("composition needs a kernel defined for every time step")
    # the integrand is a product of two Gaussians in x2; centre the window on it
    c1, s1 = x1 + spec.mean(t2 - t1), spec.std(t2 - t1)
    c2, s2 = x3 - spec.mean(t3 - t2), spec.std(t3 - t2)
    p1, p2 = 1 / s1**2, 1 / s2**2
    center = (c1 * p1 + c2 * p2) / (p1 + p2)
    scale = 1 / math.sqrt(p1 + p2)

    def integrand(x2):
        return spec.density(x3 - x2, t3 - t2) * spec.density(x2 - x1, t2 - t1)

    return plan.integrate(integrand, center, scale)


def chapman_kolmogorov_residual(spec: KernelSpec, x3: float, t3: float, x1: float, t1: float,
                                t2: float, plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    return abs(compose(spec, x3, t3, x1, t1, t2, plan) - eval_kernel(spec, x3, t3, x1, t1))


# ---------------------------------------------------------------------------
# Moments and coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentTable:
    x: float
    t: float
    dt: float
    G: tuple


@dataclass(frozen=True)
class CoefficientTable:
    S: dict
    moments: MomentTable = field(compare=False)

    def __getitem__(self, mn: tuple[int, int]) -> float:
        return self.S[mn]


def moment(spec: KernelSpec, x: float, t: float, dt: float, n: int,
           plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    """``G(x, n)``: the ``(-dx)^n``-weighted integral of the one-step kernel."""
    if not dt > 0:
        raise KernelError("dt must be positive")
    if n < 0:
        raise KernelError("moment order must be nonnegative")
    if isinstance(spec, TabulatedKernel):
        spec._check_tau(dt)
        return float(np.trapezoid((-spec.grid) ** n * spec.values, spec.grid))

    def integrand(d):
        return (-d) ** n * spec.density(d, dt)

    return plan.integrate(integrand, spec.mean(dt), spec.std(dt))


def moments(spec: KernelSpec, x: float, t: float, dt: float, max_n: int,
            plan: QuadraturePlan = DEFAULT_PLAN) -> MomentTable:
    return MomentTable(x, t, dt, tuple(moment(spec, x, t, dt, n, plan) for n in range(max_n + 1)))


def coefficients(spec: KernelSpec, x: float, t: float, dt: float, max_n: int, max_m: int = 1,
                 plan: QuadraturePlan = DEFAULT_PLAN) -> CoefficientTable:
    """``S[m, n] = m! G(x, n) / (n! dt^m)`` for ``1 <= m <= max_m``, ``1 <= n <= max_n``.

    For ``m > 1`` the entries grow like ``dt^(1-m)`` as ``dt -> 0``; they are
    evaluated at the given finite ``dt``.
    """
    if max_n < 2:
        raise KernelError("max_n must be at least 2")
    if max_m < 1:
        raise KernelError("max_m must be at least 1")
    table = moments(spec, x, t, dt, max_n, plan)
    S = {
        (m, n): math.factorial(m) * table.G[n] / (math.factorial(n) * dt**m)
        for m in range(1, max_m + 1)
        for n in range(1, max_n + 1)
    }
    return CoefficientTable(S, table)


def moments_csv(rows: Iterable[MomentTable]) -> str:
    """CSV with columns ``x, t, dt, n, G, S1n`` (``S1n`` empty for ``n = 0``)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "t", "dt", "n", "G", "S1n"])
    for table in rows:
        for n, g in enumerate(table.G):
            s1 = repr(g / (math.factorial(n) * table.dt)) if n else ""
            writer.writerow([repr(table.x), repr(table.t), repr(table.dt), n, repr(g), s1])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Reconstruction of dK/dt
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def central_weights(deriv: int, accuracy: int = 4) -> tuple[tuple[int, Fraction], ...]:
    """Exact central finite-difference weights (Fornberg's recursion)."""
    p = (deriv + 1) // 2 + accuracy // 2 - 1
    offsets = list(range(-p, p + 1))
    n = len(offsets)
    c = [[Fraction(0)] * (deriv + 1) for _ in range(n)]
    c[0][0] = Fraction(1)
    c1, c4 = Fraction(1), Fraction(offsets[0])
    for i in range(1, n):
        mn = min(i, deriv)
        c2, c5, c4 = Fraction(1), c4, Fraction(offsets[i])
        for j in range(i):
            c3 = Fraction(offsets[i] - offsets[j])
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return tuple((off, c[i][deriv]) for i, off in enumerate(offsets) if c[i][deriv] != 0)


def derivative(fn: Callable[[float], float], x: float, deriv: int, h: float) -> float:
    """Fourth-order central difference of ``fn`` at ``x``."""
    if deriv == 0:
        return fn(x)
    return math.fsum(float(w) * fn(x + k * h) for k, w in central_weights(deriv)) / h**deriv


def time_derivative(spec: KernelSpec, x: float, t: float) -> float:
    """Closed-form ``dK(x, t; 0, 0)/dt``."""
    if not isinstance(spec, HeatKernel):
        raise KernelError(f"no closed-form time derivative for {spec.family} kernels")
    if not t > 0:
        raise KernelError("t must be positive")
    return float(spec.time_derivative(x, t))


def forward_difference(spec: KernelSpec, x: float, t: float, dt: float) -> float:
    """``(K(x, t + dt) - K(x, t)) / dt`` with the initial point at the origin."""
    return (eval_kernel(spec, x, t + dt, 0.0, 0.0) - eval_kernel(spec, x, t, 0.0, 0.0)) / dt


def _expansion(spec: KernelSpec, field_fn: Callable[[float], float], x: float, t: float,
               dt: float, trunc_n: int, plan: QuadraturePlan, h: float) -> float:
    total = 0.0
    for n in range(1, trunc_n + 1):
        scale = math.factorial(n) * dt

        def g(xp, n=n, scale=scale):
            return moment(spec, xp, t, dt, n, plan) / scale * field_fn(xp)

        total += derivative(g, x, n, h)
    return total


def reconstruct_time_derivative(spec: KernelSpec, x: float, t: float, dt: float, trunc_n: int,
                                plan: QuadraturePlan = DEFAULT_PLAN, rel_step: float = 1e-3) -> float:
    """``sum_{n=1}^{trunc_n} d^n/dx^n [S[1, n](x) K(x, t; 0, 0)]``.

    Spatial derivatives use fourth-order central stencils with step
    ``rel_step`` times the standard deviation of ``K(., t; 0, 0)``.
    """
    if trunc_n < 2:
        raise KernelError("trunc_n must be at least 2")
    if isinstance(spec, TabulatedKernel):
        raise KernelError("reconstruction needs K(x, t; 0, 0) at arbitrary t")
    h = rel_step * spec.std(t)
    return _expansion(spec, lambda xp: eval_kernel(spec, xp, t, 0.0, 0.0), x, t, dt, trunc_n, plan, h)


# ---------------------------------------------------------------------------
# Acting on an initial profile
# ---------------------------------------------------------------------------


def propagate(spec: KernelSpec, profile: Callable[[np.ndarray], np.ndarray], x: float, t: float,
              center: float = 0.0, width: float = 1.0, plan: QuadraturePlan = DEFAULT_PLAN) -> float:
    """``psi(x, t) = integral dx1 K(x, t; x1, 0) psi0(x1)``.

    ``center`` and ``width`` describe where ``psi0`` lives; the window covers
    both it and the kernel's spread.
    """
    scale = max(width, spec.std(t))

    def integrand(x1):
        return spec.density(x - x1, t) * profile(x1)

    return plan.integrate(integrand, 0.5 * (center + x - spec.mean(t)), 2 * scale)


def profile_time_derivative(spec: KernelSpec, profile, x: float, t: float, dt: float, trunc_n: int,
                            center: float = 0.0, width: float = 1.0,
                            plan: QuadraturePlan = DEFAULT_PLAN, rel_step: float = 1e-3) -> tuple[float, float]:
    """Return ``(expansion, forward difference)`` of ``d psi/dt`` for a propagated profile."""
    def psi(xp, tt=t):
        return propagate(spec, profile, xp, tt, center, width, plan)

    h = rel_step * math.hypot(width, spec.std(t))
    expansion = _expansion(spec, psi, x, t, dt, trunc_n, plan, h)
    forward = (psi(x, t + dt) - psi(x, t)) / dt
    return expansion, forward
