"""Benjamin-Ono and k-generalized BO dynamics on the periodic grid.

    u_t = H u_xx - u^k u_x

Time integration is integrating-factor RK4: the linear symbol
``i xi |xi|`` is propagated exactly, the nonlinearity by classical RK4.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .spectral import Field, Grid, dealias_mask, frac_deriv, spectral_tail

BLOWUP_THRESHOLD = 1e12
TAIL_TOLERANCE = 1e-8


class BlowUpError(RuntimeError):
    """The solution left the representable range during a run."""

    def __init__(self, t: float, peak: float):
        super().__init__(f"blow-up at t={t:.6g}: max|u| = {peak:.3g}")
        self.t = t
        self.peak = peak


class ResolutionError(ValueError):
    """Initial data is not resolved by the grid."""


@dataclass(frozen=True)
class ModelSpec:
    """Nonlinearity power ``k``; ``k = 1`` is BO. ``nonlinear=False`` keeps only ``H u_xx``."""

    k: int = 1
    nonlinear: bool = True

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"nonlinearity power must be an integer >= 1, got k={self.k}")

    @property
    def dealias_fraction(self) -> float:
        return 2.0 / (self.k + 2)


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class Soliton:
    c: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"soliton speed must be positive, got c={self.c}")

    def __call__(self, x):
        y = self.c * (x - self.x0)
        return self.c * 4.0 / (1.0 + y * y)


@dataclass(frozen=True)
class Gaussian:
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"gaussian width must be positive, got {self.width}")

    def __call__(self, x):
        return self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))


@dataclass(frozen=True)
class FromFile:
    path: str

    def __call__(self, x):
        u, _ = read_snapshot(self.path)
        if u.grid.N != x.size:
            raise ValueError(f"snapshot {self.path} has N={u.grid.N}, grid has N={x.size}")
        return u.values


InitialComponent = Union[Soliton, Gaussian, FromFile]


def soliton(grid: Grid, c: float = 1.0, x0: float = 0.0) -> Field:
    """``u_c(x) = c phi(c (x - x0))`` with ``phi(x) = 4 / (1 + x^2)``."""
    return Field.from_function(grid, Soliton(c, x0))


def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0) -> Field:
    return Field.from_function(grid, Gaussian(amplitude, width, center))


def initial_field(grid: Grid, components: Sequence[InitialComponent]) -> Field:
    values = np.zeros(grid.N)
    for comp in components:
        values = values + comp(grid.x)
    return Field(grid, values)


# ---------------------------------------------------------------------------
# right-hand side and stepping


class _Propagator:
    """Precomputed integrating-factor RK4 data for one (grid, dt, model)."""

    def __init__(self, grid: Grid, dt: float, model: ModelSpec, fraction: float | None = None):
        self.grid = grid
        self.dt = dt
        self.k = model.k
        self.active = model.nonlinear
        k = grid.rwavenumbers
        lin = 1j * k * k
        lin[-1] = 0.0
        self.linear = lin
        self.E = np.exp(0.5 * dt * lin)
        self.E2 = self.E * self.E
        ik = 1j * k
        ik[-1] = 0.0
        self.ik = ik
        frac = model.dealias_fraction if fraction is None else fraction
        self.mask = dealias_mask(grid, frac)

    def nonlinear(self, uhat: np.ndarray) -> np.ndarray:
        if not self.active:
            return np.zeros_like(uhat)
        n = self.grid.N
        u = np.fft.irfft(uhat, n=n)
        ux = np.fft.irfft(self.ik * uhat, n=n)
        prod = ux * u if self.k == 1 else ux * u ** self.k
        return -self.mask * np.fft.rfft(prod)

    def step(self, uhat: np.ndarray) -> np.ndarray:
        h = self.dt
        E, E2 = self.E, self.E2
        n1 = self.nonlinear(uhat)
        n2 = self.nonlinear(E * (uhat + 0.5 * h * n1))
        n3 = self.nonlinear(E * uhat + 0.5 * h * n2)
        n4 = self.nonlinear(E2 * uhat + h * E * n3)
        return E2 * uhat + (h / 6.0) * (E2 * n1 + 2.0 * E * (n2 + n3) + n4)


def rhs(u: Field, model: ModelSpec = ModelSpec(), fraction: float | None = None) -> Field:
    """``H u_xx - dealias(u^k u_x)``."""
    prop = _Propagator(u.grid, 1.0, model, fraction)
    # internal arrays use rfft without the 1/N factor
    uhat = u.spectrum * u.grid.N
    total = prop.linear * uhat + prop.nonlinear(uhat)
    return Field.from_spectrum(u.grid, total / u.grid.N)


def step(u: Field, dt: float, model: ModelSpec = ModelSpec(), fraction: float | None = None) -> Field:
    """Advance one integrating-factor RK4 step; negative ``dt`` steps backward."""
    if dt == 0 or not np.isfinite(dt):
        raise ValueError(f"time step must be finite and nonzero, got dt={dt}")
    prop = _Propagator(u.grid, dt, model, fraction)
    out = Field.from_spectrum(u.grid, prop.step(u.spectrum * u.grid.N) / u.grid.N)
    _check_blowup(out.values, dt)
    return out


def _check_blowup(values: np.ndarray, t: float) -> None:
    peak = np.max(np.abs(values))
    if not np.isfinite(peak) or peak > BLOWUP_THRESHOLD:
        raise BlowUpError(t, float(peak))


# ---------------------------------------------------------------------------
# invariants and symmetries


def invariants(u: Field, model: ModelSpec = ModelSpec()) -> tuple[float, float, float]:
    """``(I1, I2, I3)`` = mass, L^2 mass and energy.

    The energy is ``int 1/2 |D^{1/2} u|^2 - u^{k+2} / ((k+1)(k+2))``, the sign
    that makes it conserved for ``u_t = H u_xx - u^k u_x``.
    """
    dx = u.grid.dx
    v = u.values
    k = model.k
    i1 = float(v.sum() * dx)
    i2 = float(np.dot(v, v) * dx)
    half = frac_deriv(u, 0.5).values
    i3 = float(0.5 * np.dot(half, half) * dx - np.sum(v ** (k + 2)) * dx / ((k + 1) * (k + 2)))
    return i1, i2, i3


def rescale(u: Field, lam: float, model: ModelSpec = ModelSpec()) -> Field:
    """``lam^{1/k} u(lam x)``; points with ``|lam x| >= L/2`` are set to zero."""
    if not lam > 0:
        raise ValueError(f"scaling factor must be positive, got {lam}")
    if lam == 1:
        return u
    x = u.grid.x
    y = lam * x
    inside = np.abs(y) < 0.5 * u.grid.L
    values = np.zeros(u.grid.N)
    values[inside] = u.evaluate(y[inside])
    return Field(u.grid, lam ** (1.0 / model.k) * values)


# ---------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    dt: float
    t_end: float
    initial: tuple = (Soliton(),)
    model: ModelSpec = ModelSpec()
    t0: float = 0.0
    n_out: int = 1
    dealias_fraction: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(self.initial))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t0 >= 0:
            raise ValueError(f"t0 must be non-negative, got {self.t0}")
        if not self.t_end > self.t0:
            raise ValueError(f"t_end must exceed t0, got t0={self.t0}, t_end={self.t_end}")
        if int(self.n_out) != self.n_out or self.n_out < 1:
            raise ValueError(f"snapshot cadence must be an integer >= 1, got {self.n_out}")
        frac = self.fraction
        if not (0 < frac <= 1):
            raise ValueError(f"dealias fraction must lie in (0, 1], got {frac}")
        self.n_steps  # validates the step count

    @property
    def fraction(self) -> float:
        if self.dealias_fraction is None:
            return self.model.dealias_fraction
        return self.dealias_fraction

    @property
    def n_steps(self) -> int:
        span = self.t_end - self.t0
        n = int(round(span / self.dt))
        if n < 1 or abs(n * self.dt - span) > 1e-9 * max(1.0, span):
            raise ValueError(f"(t_end - t0) = {span} is not a multiple of dt = {self.dt}")
        return n


@dataclass(frozen=True)
class ConservationLedger:
    times: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    I3: np.ndarray

    @staticmethod
    def _drift(series: np.ndarray) -> float:
        ref = series[0]
        scale = abs(ref) if ref != 0 else max(np.max(np.abs(series)), 1.0)
        return float(np.max(np.abs(series - ref)) / scale)

    def drift(self) -> dict:
        """Maximum relative deviation from the initial value of each invariant."""
        return {"I1": self._drift(self.I1), "I2": self._drift(self.I2), "I3": self._drift(self.I3)}


@dataclass(frozen=True)
class Trajectory:
    config: RunConfig
    times: np.ndarray
    samples: np.ndarray
    ledger: ConservationLedger = field(repr=False)

    def __len__(self):
        return len(self.times)

    @property
    def grid(self) -> Grid:
        return self.config.grid

    @property
    def model(self) -> ModelSpec:
        return self.config.model

    def field(self, i: int) -> Field:
        return Field(self.grid, self.samples[i])

    def subsample(self, stride: int) -> "Trajectory":
        """Every ``stride``-th snapshot; cadence multiplies by ``stride``."""
        sel = slice(None, None, stride)
        cfg = RunConfig(
            grid=self.config.grid, dt=self.config.dt, t_end=self.config.t_end,
            initial=self.config.initial, model=self.config.model, t0=self.config.t0,
            n_out=self.config.n_out * stride, dealias_fraction=self.config.dealias_fraction,
        )
        led = self.ledger
        return Trajectory(cfg, self.times[sel], self.samples[sel],
                          ConservationLedger(led.times[sel], led.I1[sel], led.I2[sel], led.I3[sel]))


def run(config: RunConfig, initial: Field | None = None) -> Trajectory:
    """Integrate ``config`` and return every ``n_out``-th state (plus the last)."""
    grid = config.grid
    u0 = initial if initial is not None else initial_field(grid, config.initial)
    tail = spectral_tail(u0)
    if tail > TAIL_TOLERANCE:
        raise ResolutionError(
            f"initial data under-resolved: spectral tail {tail:.3g} exceeds {TAIL_TOLERANCE:g} of peak")
    _check_blowup(u0.values, config.t0)

    prop = _Propagator(grid, config.dt, config.model, config.fraction)
    n = config.n_steps
    uhat = u0.spectrum * grid.N
    times = [config.t0]
    samples = [u0.values.copy()]
    for i in range(1, n + 1):
        uhat = prop.step(uhat)
        if i % config.n_out == 0 or i == n:
            u = np.fft.irfft(uhat, n=grid.N)
            t = config.t0 + i * config.dt
            _check_blowup(u, t)
            times.append(t)
            samples.append(u)
        elif i % 64 == 0:
            _check_blowup(np.fft.irfft(uhat, n=grid.N), config.t0 + i * config.dt)

    return trajectory_from_states(config, times, samples)


def trajectory_from_states(config: RunConfig, times, samples) -> Trajectory:
    """Wrap stored states in a :class:`Trajectory`, recomputing the conservation ledger."""
    times = np.array(times, dtype=float)
    samples = np.array(samples, dtype=float)
    if samples.shape != (times.size, config.grid.N):
        raise ValueError(f"expected {times.size} states of length {config.grid.N}, got {samples.shape}")
    samples.flags.writeable = False
    inv = np.array([invariants(Field(config.grid, s), config.model) for s in samples])
    ledger = ConservationLedger(times, inv[:, 0], inv[:, 1], inv[:, 2])
    return Trajectory(config, times, samples, ledger)


# ---------------------------------------------------------------------------
# snapshot binary format: b"BOVF", u32 version, u64 N, f64 L, f64 t, N x f64

SNAPSHOT_MAGIC = b"BOVF"
SNAPSHOT_VERSION = 1
_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("N", "<u8"), ("L", "<f8"), ("t", "<f8")])


def encode_snapshot(u: Field, t: float) -> bytes:
    head = np.zeros((), dtype=_HEADER)
    head["magic"] = SNAPSHOT_MAGIC
    head["version"] = SNAPSHOT_VERSION
    head["N"] = u.grid.N
    head["L"] = u.grid.L
    head["t"] = t
    return head.tobytes() + u.values.astype("<f8").tobytes()


def decode_snapshot(data: bytes) -> tuple[Field, float]:
    if len(data) < _HEADER.itemsize:
        raise ValueError("snapshot truncated before end of header")
    head = np.frombuffer(data[:_HEADER.itemsize], dtype=_HEADER)[0]
    if bytes(head["magic"]) != SNAPSHOT_MAGIC:
        raise ValueError(f"bad snapshot magic {bytes(head['magic'])!r}")
    if int(head["version"]) != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {int(head['version'])}")
    n = int(head["N"])
    body = data[_HEADER.itemsize:]
    if len(body) != 8 * n:
        raise ValueError(f"snapshot body has {len(body)} bytes, expected {8 * n}")
    grid = Grid(float(head["L"]), n)
    return Field(grid, np.frombuffer(body, dtype="<f8")), float(head["t"])


def write_snapshot(path, u: Field, t: float) -> None:
    Path(path).write_bytes(encode_snapshot(u, t))


def read_snapshot(path) -> tuple[Field, float]:
    return decode_snapshot(Path(path).read_bytes())
