"""Weight functions and time schedules used by the virial functionals.

All profiles are built from one smooth step

    S_a(s) = 1 / (1 + exp(a (1/s - 1/(1-s)))),   0 < s < 1,

which is 0 for ``s <= 0``, 1 for ``s >= 1`` and C-infinity everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import expit

# Sharpness of the front profiles; keeps max|chi'| = 1.62 below 2.
FRONT_SHARPNESS = 0.8
# Width of the bridge of phi on [1, 1 + BRIDGE_WIDTH]; 0.6 keeps phi <= 3 e^{-x}.
BRIDGE_WIDTH = 0.6

_S_EPS = 1e-3  # S_a and its derivatives underflow to 0 within this distance of 0 and 1


def smooth_step(s, a: float = 1.0, order: int = 0) -> np.ndarray:
    """``S_a`` or one of its first three derivatives, evaluated elementwise."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    if order == 0:
        out[s >= 1] = 1.0
    m = (s > 0) & (s < 1)
    if not np.any(m):
        return out
    y = np.clip(s[m], _S_EPS, 1 - _S_EPS)
    g = a * (1 / y - 1 / (1 - y))
    F = expit(-g)
    if order == 0:
        out[m] = F
        return out
    F1 = -F * expit(g)
    g1 = -a * (1 / y**2 + 1 / (1 - y) ** 2)
    if order == 1:
        out[m] = F1 * g1
        return out
    F2 = -F1 * (1 - 2 * F)
    g2 = a * (2 / y**3 - 2 / (1 - y) ** 3)
    if order == 2:
        out[m] = F2 * g1**2 + F1 * g2
        return out
    if order == 3:
        F3 = F1 * (1 - 6 * F + 6 * F**2)
        g3 = -a * (6 / y**4 + 6 / (1 - y) ** 4)
        out[m] = F3 * g1**3 + 3 * F2 * g1 * g2 + F1 * g3
        return out
    raise ValueError(f"derivative order must be 0..3, got {order}")


# ---------------------------------------------------------------------------
# phi / psi


def _ramp(y, order):
    """``r(y) = y S((y - 1)/w)`` for ``y >= 0`` and its derivatives."""
    w = BRIDGE_WIDTH
    s = (y - 1) / w
    T = smooth_step(s)
    if order == 0:
        return y * T
    T1 = smooth_step(s, order=1) / w
    if order == 1:
        return T + y * T1
    T2 = smooth_step(s, order=2) / w**2
    return 2 * T1 + y * T2


def _phi(x):
    y = np.abs(np.asarray(x, dtype=float))
    return np.exp(-_ramp(y, 0))


def _dphi(x):
    x = np.asarray(x, dtype=float)
    y = np.abs(x)
    return -np.sign(x) * _ramp(y, 1) * np.exp(-_ramp(y, 0))


def _d2phi(x):
    y = np.abs(np.asarray(x, dtype=float))
    r1 = _ramp(y, 1)
    return (r1 * r1 - _ramp(y, 2)) * np.exp(-_ramp(y, 0))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)
_BRIDGE_END = 1.0 + BRIDGE_WIDTH


def _bridge_integral(y):
    """``int_1^y phi`` for ``1 <= y <= 1 + w`` by fixed Gauss-Legendre."""
    y = np.asarray(y, dtype=float)
    half = 0.5 * (y - 1.0)
    nodes = 1.0 + half[..., None] * (_GL_NODES + 1.0)
    return half * (_phi(nodes) @ _GL_WEIGHTS)


_PSI_BRIDGE_END = 1.0 + float(_bridge_integral(_BRIDGE_END))
PSI_SUP = _PSI_BRIDGE_END + float(np.exp(-_BRIDGE_END))


def _psi(x):
    x = np.asarray(x, dtype=float)
    y = np.abs(x)
    out = np.empty(y.shape)
    a = y <= 1.0
    out[a] = y[a]
    b = (y > 1.0) & (y < _BRIDGE_END)
    out[b] = 1.0 + _bridge_integral(y[b])
    c = y >= _BRIDGE_END
    out[c] = _PSI_BRIDGE_END + np.exp(-_BRIDGE_END) - np.exp(-y[c])
    return np.sign(x) * out


@dataclass(frozen=True)
class WeightProfile:
    """The even weight ``phi``, its derivatives and ``psi = int_0^x phi``.

    ``c`` is the measured constant with ``|phi'| <= c phi`` and ``|phi''| <= c phi``.
    """

    c: float
    bridge: tuple = (1.0, _BRIDGE_END)

    phi = staticmethod(_phi)
    dphi = staticmethod(_dphi)
    d2phi = staticmethod(_d2phi)
    psi = staticmethod(_psi)

    @property
    def psi_sup(self) -> float:
        return PSI_SUP


class WeightCheckError(RuntimeError):
    pass


def _profile_constant(x: np.ndarray) -> float:
    """Sampled maximum of ``|phi'|/phi`` and ``|phi''|/phi``, polished by a bounded search."""
    best = 0.0
    h = x[1] - x[0]
    for d in (_dphi, _d2phi):
        ratio = lambda y, d=d: float(abs(d(y)) / _phi(y))
        r = np.abs(d(x)) / _phi(x)
        i = int(np.argmax(r))
        res = optimize.minimize_scalar(lambda y: -ratio(y), bounds=(x[i] - h, x[i] + h),
                                       method="bounded", options={"xatol": 1e-12})
        best = max(best, float(r[i]), -float(res.fun))
    return best


def make_weight_profile(n_check: int = 20001, x_max: float = 50.0) -> WeightProfile:
    """Build ``phi`` and verify every listed property on ``[0, x_max]``."""
    x = np.linspace(0.0, x_max, n_check)
    p = _phi(x)
    d1 = _dphi(x)
    e = np.exp(-x)
    problems = []
    if not np.all(p > 0):
        problems.append("phi positive")
    if not np.allclose(_phi(-x), p, rtol=0, atol=0):
        problems.append("phi even")
    if np.any(d1 > 0):
        problems.append("phi' <= 0 on x >= 0")
    if np.any(p[x <= 1.0] != 1.0):
        problems.append("phi == 1 on [0, 1]")
    tail = x >= 2.0
    if np.any(np.abs(p[tail] - e[tail]) > 1e-15 * e[tail]):
        problems.append("phi == e^{-x} on x >= 2")
    if np.any(p < e * (1 - 1e-15)) or np.any(p > 3 * e):
        problems.append("e^{-x} <= phi <= 3 e^{-x}")
    # psi' = phi: compare against adaptive quadrature at the breakpoints and beyond
    for y in (0.5, 1.0, 1.3, _BRIDGE_END, 2.0, 7.5):
        brk = [b for b in (1.0, _BRIDGE_END) if b < y] or None
        ref, _ = integrate.quad(_phi, 0.0, y, points=brk, epsabs=1e-13, epsrel=1e-13, limit=200)
        if abs(float(_psi(y)) - ref) > 1e-12:
            problems.append(f"psi({y}) quadrature mismatch")
    c = _profile_constant(x)
    if not np.isfinite(c):
        problems.append("finite constant c")
    if problems:
        raise WeightCheckError("weight profile failed: " + ", ".join(problems))
    return WeightProfile(c=c)


def psi_sigma(x, sigma: float):
    """``sigma psi(x / sigma)``."""
    return sigma * _psi(np.asarray(x, dtype=float) / sigma)


def phi_delta(x, delta: float):
    """``delta phi(x / delta)``."""
    return delta * _phi(np.asarray(x, dtype=float) / delta)


def zeta(x):
    """Cut-off equal to 1 on ``[0, 1]`` and supported in ``(-1, 2)``."""
    x = np.asarray(x, dtype=float)
    return smooth_step(x + 1) * (1 - smooth_step(x - 1))


def zeta_n(x, n: int):
    return zeta(np.asarray(x, dtype=float) - n)


# ---------------------------------------------------------------------------
# schedules


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleParams:
    """Exponents of ``mu1 = t^b / log t``, ``mu = t^{1-b} log^2 t``, ``rho = +-t^m``.

    Always enforced: ``0 < b < 2/3``, ``q > 1``, ``b <= 2/(2+q)`` and
    ``0 <= m <= 1 - b/2``. With ``corollary=True`` also ``m < 1 - 3b/2``.
    """

    b: float
    m: float = 0.0
    q: float = 1.1
    sign: int = 1
    corollary: bool = False

    def __post_init__(self):
        bad = self.violations()
        if bad:
            raise ScheduleError("schedule constraint violated: " + "; ".join(bad))

    def violations(self) -> list[str]:
        b, m, q = self.b, self.m, self.q
        out = []
        if self.sign not in (1, -1):
            out.append(f"sign of rho must be +1 or -1 (got {self.sign})")
        if not (0 < b < 2 / 3):
            out.append(f"0 < b < 2/3 (got b={b})")
        if not q > 1:
            out.append(f"q > 1 (got q={q})")
        elif not b <= 2 / (2 + q):
            out.append(f"b <= 2/(2+q) = {2 / (2 + q):.6g} (got b={b})")
        if not (0 <= m <= 1 - b / 2):
            out.append(f"0 <= m <= 1 - b/2 = {1 - b / 2:.6g} (got m={m})")
        if self.corollary and not m < 1 - 1.5 * b:
            out.append(f"m < 1 - 3b/2 = {1 - 1.5 * b:.6g} (got m={m})")
        return out

    @property
    def satisfies_corollary_bound(self) -> bool:
        return self.m < 1 - 1.5 * self.b

    @property
    def bound_mismatch(self) -> bool:
        """True when exactly one of ``m <= 1 - b/2`` and ``m < 1 - 3b/2`` holds."""
        return (self.m <= 1 - self.b / 2) != self.satisfies_corollary_bound

    @property
    def mu1_increasing_from(self) -> float:
        """``mu1' > 0`` exactly for ``t > exp(1/b)``."""
        return float(np.exp(1.0 / self.b))


class Schedule(NamedTuple):
    mu: float
    mu1: float
    rho: float
    dmu: float
    dmu1: float
    drho: float


T_MIN = 10.0


def schedules(t: float, params: ScheduleParams) -> Schedule:
    if not t >= T_MIN:
        raise ValueError(f"schedules need t >= {T_MIN:g}, got t={t}")
    b, m = params.b, params.m
    lg = np.log(t)
    mu1 = t**b / lg
    mu = t ** (1 - b) * lg**2
    rho = params.sign * t**m
    dmu1 = mu1 * (b / t - 1 / (t * lg))
    dmu = mu * ((1 - b) / t + 2 / (t * lg))
    drho = params.sign * m * t ** (m - 1) if m != 0 else 0.0
    return Schedule(float(mu), float(mu1), float(rho), float(dmu), float(dmu1), float(drho))


# ---------------------------------------------------------------------------
# fronts


def chi(s, order: int = 0):
    """Right front profile: 0 on ``s <= 1``, 1 on ``s >= 2``, increasing between."""
    return smooth_step(np.asarray(s, dtype=float) - 1.0, FRONT_SHARPNESS, order)


def beta(s, order: int = 0):
    """Left front profile ``beta(s) = chi(-s)``: 1 on ``s <= -2``, 0 on ``s >= -1``."""
    return (-1) ** order * chi(-np.asarray(s, dtype=float), order)


class WeightValues(NamedTuple):
    value: np.ndarray
    dx: np.ndarray
    dt: np.ndarray
    dxx: np.ndarray | None = None
    dxxx: np.ndarray | None = None


@dataclass(frozen=True)
class FrontSpec:
    """Moving front ``chi((x - c1)/(c0 t))`` (right) or ``beta((x + c1)/mu(t))`` (left).

    For the left variant ``mu(t) = c2 t log^{1+eta} t``.
    """

    variant: str = "right"
    c0: float = 1.0
    c1: float = 0.0
    c2: float = 1.0
    eta: float = 0.5
    derivative_bounds: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.variant not in ("right", "left"):
            raise ValueError(f"front variant must be 'right' or 'left', got {self.variant!r}")
        if self.variant == "right" and not self.c0 > 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if self.variant == "left":
            if not self.c2 > 0:
                raise ValueError(f"c2 must be positive, got {self.c2}")
            if not self.eta > 0:
                raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.derivative_bounds:
            self.derivative_bounds.update(front_derivative_maxima())

    def mu(self, t):
        return self.c2 * t * np.log(t) ** (1 + self.eta)

    def _check_time(self, t):
        if self.variant == "right" and not t > 0:
            raise ValueError(f"right front needs t > 0, got t={t}")
        if self.variant == "left" and not t > 1:
            raise ValueError(f"left front needs t > 1, got t={t}")

    def threshold(self, t: float) -> float:
        """Edge of the sharp region: ``x >= c1 + c0 t`` or ``x <= -c1 - mu(t)``."""
        self._check_time(t)
        if self.variant == "right":
            return self.c1 + self.c0 * t
        return -self.c1 - self.mu(t)

    def evaluate(self, x, t: float) -> WeightValues:
        return front_weight(x, t, self)


def front_weight(x, t: float, spec: FrontSpec) -> WeightValues:
    """Value, ``d/dx``, ``d/dt``, ``d2/dx2``, ``d3/dx3`` of the front weight."""
    spec._check_time(t)
    x = np.asarray(x, dtype=float)
    if spec.variant == "right":
        scale = spec.c0 * t
        s = (x - spec.c1) / scale
        prof = chi
        rate = 1.0 / t
    else:
        scale = spec.mu(t)
        s = (x + spec.c1) / scale
        prof = beta
        lg = np.log(t)
        rate = 1.0 / t + (1 + spec.eta) / (t * lg)
    p1 = prof(s, 1)
    return WeightValues(
        value=prof(s, 0),
        dx=p1 / scale,
        dt=-p1 * s * rate,
        dxx=prof(s, 2) / scale**2,
        dxxx=prof(s, 3) / scale**3,
    )


def front_derivative_maxima(n: int = 200001) -> dict:
    """Measured ``max |chi^(k)|`` for ``k = 1, 2, 3`` (identical for ``beta``)."""
    s = np.linspace(1.0, 2.0, n)
    return {k: float(np.max(np.abs(chi(s, k)))) for k in (1, 2, 3)}
