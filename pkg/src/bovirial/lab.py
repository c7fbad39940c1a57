"""Brute-force checks of commutator, interpolation and product inequalities.

Every ratio here divides a left-hand side by the corresponding right-hand
side with constant 1, so an empirical constant is the family maximum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .spectral import (
    Field,
    Grid,
    commutator_half,
    commutator_hilbert,
    derivative,
    norm,
    seminorm_hs,
)
from .virial import upsample

WRAP_TOLERANCE = 1e-8
# sup norms are read off the interpolant on a grid this many times finer
SUP_REFINE = 16


def sup_norm(f: Field) -> float:
    """``max |f|`` of the trigonometric interpolant, sampled on a refined grid."""
    return float(np.max(np.abs(upsample(f, SUP_REFINE)[1])))


def _reject_zero(value: float, scale: float, what: str) -> None:
    if not value > 1e-12 * scale:
        raise ValueError(f"{what} vanishes; ratio undefined")


def calderon_ratio(a: Field, f: Field, k: int = 1, m: int = 0, p: float = 2) -> float:
    """``||d^k [H; a] d^m f||_p / (||d^{k+m} a||_inf ||f||_p)``."""
    num = norm(commutator_hilbert(a, f, k, m), p)
    da = sup_norm(derivative(a, k + m))
    _reject_zero(da, sup_norm(a) * max(1.0, a.grid.kmax) ** (k + m), "d^{k+m} a")
    nf = norm(f, p)
    _reject_zero(nf, 1e-300, "||f||_p")
    return num / (da * nf)


def gns_ratio(f: Field) -> float:
    """``||f||_3 / (||f||_2^{2/3} ||D^{1/2} f||_2^{1/3})``."""
    half = seminorm_hs(f, 0.5)
    _reject_zero(half, norm(f) * np.sqrt(f.grid.kmax), "||D^{1/2} f||_2")
    return norm(f, 3) / (norm(f) ** (2 / 3) * half ** (1 / 3))


def wrap_fraction(f: Field) -> float:
    """Share of ``||f||_2^2`` outside the middle third of the box."""
    x = f.grid.x
    outer = np.abs(x) > f.grid.L / 6
    v = f.values**2
    total = v.sum()
    return float(v[outer].sum() / total) if total > 0 else 0.0


def leibniz_ratio(f: Field, g: Field, s: float = 0.5) -> float:
    """``||D^s(fg)||_2 / (||f||_inf ||D^s g||_2 + ||D^s f||_2 ||g||_inf)``."""
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    num = seminorm_hs(f * g, s)
    fi, gi = sup_norm(f), sup_norm(g)
    den = fi * seminorm_hs(g, s) + seminorm_hs(f, s) * gi
    scale = fi * gi * np.sqrt(g.grid.L) * g.grid.kmax**s
    _reject_zero(den, scale, "right-hand side")
    return num / den


def fourier_l1_derivative(a: Field) -> float:
    """``||(a')^||_{L^1}`` as ``sum_j |xi_j| |c_j|`` over the full spectrum."""
    c = a.full_spectrum
    k = a.grid.wavenumbers.copy()
    k[a.grid.N // 2] = 0.0  # odd symbol at Nyquist
    return float(np.sum(np.abs(k * c)))


def half_comm_ratio(a: Field, f: Field) -> tuple[float, float]:
    """``||D^{1/2}[D^{1/2}; a] f||_2`` over ``||(a')^||_1 ||f||_2`` and over ``||a'||^{1/2} ||a''||^{1/2} ||f||_2``."""
    num = norm(commutator_half(a, f))
    nf = norm(f)
    _reject_zero(nf, 1e-300, "||f||_2")
    l1 = fourier_l1_derivative(a)
    _reject_zero(l1, sup_norm(a) * a.grid.kmax, "(a')^ in L^1")
    sob = np.sqrt(norm(derivative(a, 1)) * norm(derivative(a, 2)))
    return num / (l1 * nf), num / (sob * nf)


class ClaimScan(NamedTuple):
    sup: float
    xi: float
    eta: float
    samples: int


def claim_ratio(xi, eta):
    """``|xi|^{1/2} | |xi|^{1/2} - |eta|^{1/2} | / |xi - eta|`` (undefined on the diagonal)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    rx, re = np.sqrt(np.abs(xi)), np.sqrt(np.abs(eta))
    return rx * np.abs(rx - re) / np.abs(xi - eta)


def claim_scan(xi_range=(1e-6, 1e3), eta_range=(1e-6, 1e3), resolution: int = 2000) -> ClaimScan:
    """Supremum of :func:`claim_ratio` over a logarithmic grid, diagonal excluded."""
    xi = np.geomspace(*xi_range, resolution)
    eta = np.geomspace(*eta_range, resolution)
    X, E = np.meshgrid(xi, eta, indexing="ij")
    off = X != E
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(off, claim_ratio(X, E), -np.inf)
    i, j = np.unravel_index(np.argmax(r), r.shape)
    return ClaimScan(float(r[i, j]), float(xi[i]), float(eta[j]), int(off.sum()))


class L1Interp(NamedTuple):
    lhs: float
    rhs: float
    R: float


def fourier_l1_interp(a: Field, const: float = np.sqrt(2), R: float | None = None) -> L1Interp:
    """Split ``||(a')^||_1`` at ``|xi| = R`` and bound each piece by Cauchy-Schwarz.

    Discrete norms use the mode spacing ``d = 2 pi / L``: with ``g_j = |xi_j c_j| / d``
    the sum ``d sum g_j`` is the left side and ``(d sum g_j^2)^{1/2}`` is the
    ``L^2`` norm. By default ``R`` minimizes the right-hand side.
    """
    c = a.full_spectrum
    k = a.grid.wavenumbers.copy()
    k[a.grid.N // 2] = 0.0
    d = 2 * np.pi / a.grid.L
    lhs = float(np.sum(np.abs(k * c)))
    A = float(np.sqrt(np.sum(np.abs(k * c) ** 2) / d))
    B = float(np.sqrt(np.sum(np.abs(k * k * c) ** 2) / d))
    if A == 0:
        return L1Interp(lhs, 0.0, np.nan if R is None else R)
    if R is None:
        R = B / A
    return L1Interp(lhs, const * (np.sqrt(R) * A + B / np.sqrt(R)), float(R))


# ---------------------------------------------------------------------------
# test families


@dataclass(frozen=True)
class BandLimited:
    """Random trigonometric polynomial with modes ``1..modes``; unit variance."""

    coeffs: np.ndarray
    mean: float = 0.0

    def __call__(self, grid: Grid) -> Field:
        half = np.zeros(grid.N // 2 + 1, dtype=complex)
        half[1:self.coeffs.size + 1] = self.coeffs
        half[0] = self.mean
        return Field.from_spectrum(grid, half)


@dataclass(frozen=True)
class Bump:
    """``amp * exp(-1 / (1 - r^2))`` with ``r = (x - center) / radius``."""

    center: float
    radius: float
    amp: float = 1.0

    def __call__(self, grid: Grid) -> Field:
        r = (grid.x - self.center) / self.radius
        v = np.zeros(grid.N)
        m = np.abs(r) < 1
        v[m] = self.amp * np.exp(-1.0 / (1.0 - r[m] ** 2))
        return Field(grid, v)


def band_limited_family(n: int, modes: int, seed: int) -> list[BandLimited]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        c = rng.standard_normal(modes) + 1j * rng.standard_normal(modes)
        # variance of the samples is 2 sum |c_j|^2
        c /= np.sqrt(2 * np.sum(np.abs(c) ** 2))
        out.append(BandLimited(c, mean=float(rng.standard_normal())))
    return out


def bump_family(n: int, L: float, seed: int) -> list[Bump]:
    """Bumps inside the middle third of ``[-L/2, L/2)``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        radius = rng.uniform(0.05, 0.12) * L
        center = rng.uniform(-L / 6 + radius, L / 6 - radius)
        out.append(Bump(center, radius, rng.uniform(0.5, 2.0)))
    return out


# ---------------------------------------------------------------------------
# dense kernel oracles


def _full_symbols(grid: Grid):
    k = grid.wavenumbers
    odd = k.copy()
    odd[grid.N // 2] = 0.0
    return k, odd


def convolution_matrix(a: Field) -> np.ndarray:
    """Matrix of ``g -> a g`` acting on full-spectrum coefficients."""
    N = a.grid.N
    ah = a.full_spectrum
    j = np.arange(N)
    return ah[(j[:, None] - j[None, :]) % N]


def hilbert_commutator_matrix(a: Field, k: int, m: int) -> np.ndarray:
    """Dense matrix of ``d^k [H; a] d^m`` in coefficient space."""
    kk, odd = _full_symbols(a.grid)
    h = -1j * np.sign(odd)
    dk = (1j * (odd if k % 2 else kk)) ** k
    dm = (1j * (odd if m % 2 else kk)) ** m
    A = convolution_matrix(a)
    return dk[:, None] * (h[:, None] - h[None, :]) * A * dm[None, :]


def half_commutator_matrix(a: Field) -> np.ndarray:
    """Dense matrix of ``D^{1/2} [D^{1/2}; a]`` in coefficient space."""
    s = np.sqrt(np.abs(a.grid.wavenumbers))
    A = convolution_matrix(a)
    return s[:, None] * (s[:, None] - s[None, :]) * A


def apply_matrix(M: np.ndarray, f: Field) -> np.ndarray:
    return np.fft.ifft(M @ f.full_spectrum * f.grid.N).real


# ---------------------------------------------------------------------------
# constants report


@dataclass(frozen=True)
class ConstantRow:
    lemma: str
    family_size: int
    seed: int
    constant: float
    refinement_change: float


REPORT_HEADER = ("lemma", "family_size", "seed", "constant", "refinement_change")


def _family_max(fn: Callable[[Grid], float], grids) -> tuple[float, float]:
    vals = [fn(g) for g in grids]
    change = abs(vals[1] - vals[0]) / vals[0] if vals[0] > 0 else 0.0
    return vals[0], change


def constants_report(seed: int = 0, family_size: int = 20, N: int = 256, L: float = 2 * np.pi,
                     claim_resolution: int = 2000) -> list[ConstantRow]:
    """Empirical constants of every inequality at ``N`` and their change at ``2N``."""
    grids = (Grid(L, N), Grid(L, 2 * N))
    modes = N // 8
    fam_a = band_limited_family(family_size, modes, seed)
    fam_f = band_limited_family(family_size, modes, seed + 1)
    bumps = bump_family(family_size, L, seed + 2)
    rows = []

    def add(lemma, fn):
        c, ch = _family_max(fn, grids)
        rows.append(ConstantRow(lemma, family_size, seed, c, ch))

    for k, m in ((1, 0), (0, 1), (1, 1), (2, 0)):
        add(f"calderon_k{k}_m{m}_p2",
            lambda g, k=k, m=m: max(calderon_ratio(a(g), f(g), k, m) for a, f in zip(fam_a, fam_f)))
    add("gns_band", lambda g: max(gns_ratio(f(g)) for f in fam_f))
    add("gns_bump", lambda g: max(gns_ratio(b(g)) for b in bumps))
    add("leibniz_s0.5", lambda g: max(leibniz_ratio(a(g), f(g), 0.5) for a, f in zip(fam_a, fam_f)))
    add("half_comm_l1", lambda g: max(half_comm_ratio(a(g), f(g))[0] for a, f in zip(fam_a, fam_f)))
    add("half_comm_sobolev", lambda g: max(half_comm_ratio(a(g), f(g))[1] for a, f in zip(fam_a, fam_f)))

    def l1_ratio(g):
        out = []
        for a in fam_a:
            r = fourier_l1_interp(a(g), const=1.0)
            out.append(r.lhs / r.rhs)
        return max(out)

    add("fourier_l1_split", l1_ratio)
    scan = claim_scan(resolution=claim_resolution)
    rows.append(ConstantRow("claim", scan.samples, seed, scan.sup, 0.0))
    return rows
