"""Weighted functionals, regional masses and the term-by-term virial identity."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Protocol

import numpy as np
from scipy import integrate as sp_integrate
from scipy import interpolate

from .dynamics import Trajectory
from .spectral import Field, Grid, commutator_half, commutator_hilbert, frac_deriv, inner, norm
from .weights import (
    PSI_SUP,
    FrontSpec,
    ScheduleParams,
    WeightValues,
    phi_delta,
    psi_sigma,
    schedules,
    smooth_step,
    _phi,
)

# Zero-padding factor used when a field is integrated against an analytic weight.
REFINE = 8

_PHI_L2 = float(np.sqrt(2 * sp_integrate.quad(lambda s: _phi(s) ** 2, 0, 60, points=[1, 1.6], limit=200)[0]))


# ---------------------------------------------------------------------------
# quadrature helpers


def upsample(f: Field, factor: int) -> tuple[np.ndarray, np.ndarray]:
    """Samples of the trigonometric interpolant of ``f`` on a grid ``factor`` times finer."""
    grid = f.grid
    M = grid.N * factor
    c = np.zeros(M // 2 + 1, dtype=complex)
    c[: grid.N // 2 + 1] = f.spectrum
    if factor > 1:
        # the Nyquist cosine splits evenly between +-N/2 on the finer grid
        c[grid.N // 2] *= 0.5
    x = -0.5 * grid.L + grid.L / M * np.arange(M)
    return x, np.fft.irfft(c * M, n=M)


def _weighted_integral(values: np.ndarray, weight: np.ndarray, L: float) -> float:
    return float(np.dot(values, weight) * L / values.size)


def interval_integral_of_squares(fields, a: float, b: float) -> float:
    """Exact ``int_a^b sum f_i^2`` for the trigonometric interpolants of ``fields``."""
    grid = fields[0].grid
    M = 4 * grid.N
    g = np.zeros(M)
    for f in fields:
        g += upsample(f, 4)[1] ** 2
    d = np.fft.rfft(g) / M
    k = 2 * np.pi / grid.L * np.arange(1, d.size)
    x0 = -0.5 * grid.L
    prim = (np.exp(1j * k * (b - x0)) - np.exp(1j * k * (a - x0))) / (1j * k)
    return float(d[0].real * (b - a) + 2 * np.real(np.dot(d[1:], prim)))


def _interval_integral_samples(x: np.ndarray, y: np.ndarray, L: float, a: float, b: float) -> float:
    """Integral over ``[a, b]`` of the periodic cubic spline through the samples."""
    spline = interpolate.CubicSpline(np.append(x, x[0] + L), np.append(y, y[0]), bc_type="periodic")
    return float(spline.integrate(a, b))


def _clip(grid: Grid, a: float, b: float) -> tuple[float, float] | None:
    lo, hi = max(a, -0.5 * grid.L), min(b, 0.5 * grid.L)
    return (lo, hi) if lo < hi else None


# ---------------------------------------------------------------------------
# functionals


def _bound_check(name, value, u, sched, params, sigma, delta):
    bound = sched.mu1 ** (params.q / 2) / sched.mu * norm(u) * sigma * PSI_SUP * delta**1.5 * _PHI_L2
    if abs(value) > bound * (1 + 1e-9) + 1e-300:
        raise ArithmeticError(f"{name} = {value:.6g} exceeds its a-priori bound {bound:.6g}")


def _functional(u: Field, t: float, params: ScheduleParams, sigma: float, delta: float, shift: float):
    sched = schedules(t, params)
    x, v = upsample(u, REFINE)
    y = x - shift
    w = psi_sigma(y / sched.mu1, sigma) * phi_delta(y / sched.mu1 ** params.q, delta)
    value = _weighted_integral(v, w, u.grid.L) / sched.mu
    return value, sched


def functional_I(u: Field, t: float, params: ScheduleParams, sigma: float = 1.0, delta: float = 1.0) -> float:
    """``(1/mu) int u psi_sigma(x/mu1) phi_delta(x/mu1^q) dx``."""
    value, sched = _functional(u, t, params, sigma, delta, 0.0)
    _bound_check("I", value, u, sched, params, sigma, delta)
    return value


def functional_I_rho(u: Field, t: float, params: ScheduleParams, sigma: float = 1.0, delta: float = 1.0) -> float:
    """Same integrand as :func:`functional_I` with ``x`` replaced by ``x - rho(t)``."""
    rho = schedules(t, params).rho
    value, sched = _functional(u, t, params, sigma, delta, rho)
    _bound_check("I_rho", value, u, sched, params, sigma, delta)
    return value


def functional_J(u: Field, t: float, params: ScheduleParams, sigma: float = 1.0) -> float:
    """``(1/mu) int u^2 psi_sigma(x/mu1) dx``."""
    sched = schedules(t, params)
    x, v = upsample(u, REFINE)
    return _weighted_integral(v * v, psi_sigma(x / sched.mu1, sigma), u.grid.L) / sched.mu


# ---------------------------------------------------------------------------
# regional masses


def ball(t: float, b: float, m: float | None = None, sign: int = 1) -> tuple[float, float]:
    """The interval ``|x - sign t^m| < t^b``; ``m=None`` centers it at the origin."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    center = 0.0 if m is None else sign * t**m
    r = t**b
    return center - r, center + r


def _ball_in_box(grid: Grid, t, b, m, sign):
    a, c = ball(t, b, m, sign)
    if not grid.contains(a, c):
        raise ValueError(f"ball ({a:.6g}, {c:.6g}) leaves the box [-{grid.L / 2:g}, {grid.L / 2:g})")
    return a, c


def regional_mass(u: Field, t: float, b: float, m: float | None = None, sign: int = 1) -> float:
    """``int u^2`` over ``|x - sign t^m| < t^b`` with a sharp indicator."""
    a, c = _ball_in_box(u.grid, t, b, m, sign)
    return max(interval_integral_of_squares([u], a, c), 0.0)


def regional_half_energy(u: Field, t: float, b: float, m: float | None = None, sign: int = 1) -> float:
    """``int (u^2 + |D^{1/2} u|^2)`` over the same ball."""
    a, c = _ball_in_box(u.grid, t, b, m, sign)
    return max(interval_integral_of_squares([u, frac_deriv(u, 0.5)], a, c), 0.0)


def _power_mass(u: Field, a: float, b: float, p: float) -> float:
    if p == 2:
        return max(interval_integral_of_squares([u], a, b), 0.0)
    x, v = upsample(u, REFINE)
    return _interval_integral_samples(x, np.abs(v) ** p, u.grid.L, a, b)


def front_mass(u: Field, t: float, spec: FrontSpec, p: float = 2.0) -> float:
    """``int |u|^p`` beyond the front: ``x >= c1 + c0 t`` or ``x <= -c1 - mu(t)``, clipped to the box."""
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")
    edge = spec.threshold(t)
    half = 0.5 * u.grid.L
    span = _clip(u.grid, edge, half) if spec.variant == "right" else _clip(u.grid, -half, edge)
    if span is None:
        return 0.0
    return _power_mass(u, *span, p)


def omega_region(t: float, c: float, gamma: float, C0: float, exponent: float = 0.6):
    """``(-c t log^{1+gamma} t, -c t^e)`` and ``(c t^e, C0 t)``."""
    if not 0 < exponent < 2 / 3:
        raise ValueError(f"exponent must lie in (0, 2/3), got {exponent}")
    if not t > 1:
        raise ValueError(f"t must exceed 1, got {t}")
    inner_edge = c * t**exponent
    return (-c * t * np.log(t) ** (1 + gamma), -inner_edge), (inner_edge, C0 * t)


def omega_mass(u: Field, t: float, c: float, gamma: float, C0: float, exponent: float = 0.6) -> float:
    """``int u^2`` over the two-sided region between the dispersive and soliton scales."""
    total = 0.0
    for a, b in omega_region(t, c, gamma, C0, exponent):
        span = _clip(u.grid, a, b)
        if span is not None:
            total += max(interval_integral_of_squares([u], *span), 0.0)
    return total


@dataclass(frozen=True)
class DecayRecord:
    t: float
    mass: float
    region: str
    I: float = 0.0
    I_rho: float = 0.0
    J: float = 0.0
    lemma34_partial: float = 0.0

    def __post_init__(self):
        if not self.mass >= 0:
            raise ValueError(f"mass must be non-negative, got {self.mass}")


# ---------------------------------------------------------------------------
# log-weighted mass accumulator


def lemma34_partial(times, masses) -> np.ndarray:
    """Running trapezoid of ``m(t) / (t log t)`` starting from ``times[0] >= 10``."""
    t = np.asarray(times, dtype=float)
    m = np.asarray(masses, dtype=float)
    if t.size == 0 or t[0] < 10:
        raise ValueError("accumulator times must start at t >= 10")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return sp_integrate.cumulative_trapezoid(m / (t * np.log(t)), t, initial=0.0)


def stationary_reference(times, M: float) -> np.ndarray:
    """``M (log log t - log log t_0)``: the accumulator for a mass frozen at ``M``."""
    t = np.asarray(times, dtype=float)
    return M * (np.log(np.log(t)) - np.log(np.log(t[0])))


class AccumulatorSeries(NamedTuple):
    times: np.ndarray
    mass: np.ndarray
    partial: np.ndarray
    reference: np.ndarray
    slope: float
    reference_slope: float


def lemma34_accumulator(traj: Trajectory, b: float, m: float | None = None, sign: int = 1,
                        t_start: float = 10.0) -> AccumulatorSeries:
    """Ball masses along ``traj`` for ``t >= t_start`` and their running weighted integral."""
    t_start = max(t_start, 10.0)
    idx = [i for i, t in enumerate(traj.times) if t >= t_start]
    if len(idx) < 2:
        raise ValueError(f"need at least two snapshots with t >= {t_start:g}")
    times = np.array([traj.times[i] for i in idx])
    mass = np.array([regional_mass(traj.field(i), traj.times[i], b, m, sign) for i in idx])
    partial = lemma34_partial(times, mass)
    M = mass[0]
    T = times[-1]
    return AccumulatorSeries(
        times, mass, partial, stationary_reference(times, M),
        slope=float(mass[-1] / (T * np.log(T))),
        reference_slope=float(M / (T * np.log(T))),
    )


# ---------------------------------------------------------------------------
# virial identity


class WeightEvaluator(Protocol):
    def evaluate(self, x, t: float) -> WeightValues: ...


@dataclass(frozen=True)
class ConstantWeight:
    value: float = 1.0

    def evaluate(self, x, t):
        x = np.asarray(x, dtype=float)
        z = np.zeros(x.shape)
        return WeightValues(np.full(x.shape, self.value), z, z, z, z)


@dataclass(frozen=True)
class SmoothStepWeight:
    """``(1 + tanh((x - x0 - v t) / w)) / 2``."""

    x0: float = 0.0
    width: float = 2.0
    speed: float = 0.0

    def evaluate(self, x, t):
        s = (np.asarray(x, dtype=float) - self.x0 - self.speed * t) / self.width
        th = np.tanh(s)
        sech2 = 1 - th**2
        dx = 0.5 * sech2 / self.width
        return WeightValues(
            0.5 * (1 + th), dx, -self.speed * dx,
            -sech2 * th / self.width**2,
            sech2 * (3 * th**2 - 1) / self.width**3,
        )


@dataclass(frozen=True)
class CompactStepWeight:
    """Smooth step with flat ends, rising on ``[x0, x0 + width]``."""

    x0: float = 0.0
    width: float = 4.0

    def evaluate(self, x, t):
        s = (np.asarray(x, dtype=float) - self.x0) / self.width
        w = self.width
        z = np.zeros(s.shape)
        return WeightValues(smooth_step(s), smooth_step(s, order=1) / w, z,
                            smooth_step(s, order=2) / w**2, smooth_step(s, order=3) / w**3)


@dataclass(frozen=True)
class VirialBreakdown:
    t: float
    A1: float
    A2: float
    A3: float
    A4: float
    A5: float
    lhs_fd: float
    residual: float

    @property
    def terms(self) -> tuple[float, ...]:
        return (self.A1, self.A2, self.A3, self.A4, self.A5)

    @property
    def relative_residual(self) -> float:
        scale = max(abs(a) for a in self.terms)
        return abs(self.residual) / scale if scale > 0 else abs(self.residual)


_FD4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def weighted_mass(u: Field, weight: WeightEvaluator, t: float) -> float:
    return inner(u * u, Field(u.grid, weight.evaluate(u.grid.x, t).value))


def virial_terms(u: Field, t: float, weight: WeightEvaluator, k: int = 1) -> tuple[float, ...]:
    """``A1..A5`` for a single state ``u`` at time ``t``."""
    grid = u.grid
    W = weight.evaluate(grid.x, t)
    phi = Field(grid, W.value)
    phi_x = Field(grid, W.dx)
    half = frac_deriv(u, 0.5)
    A1 = -inner(u, commutator_hilbert(phi, u, 1, 1))
    A2 = -2.0 * inner(half * half, phi_x)
    A3 = -2.0 * inner(u, commutator_half(phi_x, u))
    A4 = 2.0 / (k + 2) * inner(u ** (k + 2), phi_x)
    A5 = inner(u * u, Field(grid, W.dt))
    return A1, A2, A3, A4, A5


def virial_breakdown(traj: Trajectory, i: int, weight: WeightEvaluator) -> VirialBreakdown:
    """Terms of ``d/dt int u^2 phi`` next to a fourth-order centered difference of the left side."""
    n = len(traj.times)
    if i < 2 or i > n - 3:
        raise ValueError(f"snapshot {i} needs two neighbours on each side (have {n} snapshots)")
    times = np.asarray(traj.times[i - 2:i + 3], dtype=float)
    h = np.diff(times)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise ValueError("centered differencing needs uniformly spaced snapshots")
    t = float(times[2])
    terms = virial_terms(traj.field(i), t, weight, traj.model.k)
    if isinstance(weight, FrontSpec) and weight.variant == "right" and terms[1] > 0:
        raise ArithmeticError(f"Kato term A2 = {terms[1]:.3g} > 0 for the right front at t={t:g}")
    f = np.array([weighted_mass(traj.field(j), weight, tj) for j, tj in zip(range(i - 2, i + 3), times)])
    lhs = float(np.dot(_FD4, f) / h[0])
    return VirialBreakdown(t, *terms, lhs_fd=lhs, residual=lhs - sum(terms))
