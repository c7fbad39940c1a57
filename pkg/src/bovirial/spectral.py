"""Fourier-multiplier calculus on a uniform periodic grid.

The real line is replaced by the box ``[-L/2, L/2)`` sampled at ``N`` points.
Every operator here is a Fourier multiplier (or a commutator built from
multipliers and pointwise products) applied in the discrete basis.

Normalization
-------------
The forward transform carries ``1/N``: a field is written as

    f(x_n) = sum_j c_j exp(i xi_j (x_n - x_0)),    c_j = fft(f)_j / N,

with ``xi_j = 2 pi j / L`` and ``x_0 = -L/2`` the first grid point. With
this convention

    ||f||_2^2 = L * sum_j |c_j|^2            (Parseval)

and a product of two fields has coefficients given by the circular
convolution of the coefficient sequences. Internally the half spectrum of
``numpy.fft.rfft`` is stored; index ``N/2`` is the Nyquist mode.

Nyquist convention: odd symbols (``i xi``, ``-i sgn xi``) zero the Nyquist
mode, even symbols (``|xi|^s``, ``-xi^2``) keep it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "hilbert",
    "frac_deriv",
    "derivative",
    "norm",
    "seminorm_hs",
    "integrate",
    "inner",
    "commutator_hilbert",
    "commutator_half",
    "dealias",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-L/2, L/2)`` with ``N`` points."""

    L: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"box length must be positive, got L={self.L}")
        n = int(self.N)
        if n != self.N or n < 8 or n & (n - 1):
            raise ValueError(f"N must be a power of two >= 8, got N={self.N}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", n)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        x = -0.5 * self.L + self.dx * np.arange(self.N)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Full set ``xi_j`` in FFT order, ``j`` in ``{-N/2, ..., N/2-1}``."""
        k = 2 * np.pi / self.L * np.fft.fftfreq(self.N, d=1.0 / self.N)
        k.flags.writeable = False
        return k

    @cached_property
    def rwavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers of the half spectrum (last entry is Nyquist)."""
        k = 2 * np.pi / self.L * np.arange(self.N // 2 + 1)
        k.flags.writeable = False
        return k

    @property
    def kmax(self) -> float:
        return np.pi * self.N / self.L

    def contains(self, a: float, b: float) -> bool:
        return -0.5 * self.L < a <= b < 0.5 * self.L


class Field:
    """Immutable real samples on a :class:`Grid` with a cached spectrum."""

    __slots__ = ("grid", "_values", "_spectrum")

    def __init__(self, grid: Grid, values, *, _spectrum=None):
        v = np.array(values, dtype=float)
        if v.shape != (grid.N,):
            raise ValueError(f"expected {grid.N} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        v.flags.writeable = False
        self.grid = grid
        self._values = v
        self._spectrum = _spectrum

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(grid.x))

    @classmethod
    def from_spectrum(cls, grid: Grid, coeffs) -> "Field":
        """Build from half-spectrum coefficients ``c_j`` (``1/N`` convention)."""
        c = np.array(coeffs, dtype=complex)
        values = np.fft.irfft(c * grid.N, n=grid.N)
        # irfft discards the imaginary parts of the zero and Nyquist modes.
        c[0] = c[0].real
        c[-1] = c[-1].real
        c.flags.writeable = False
        return cls(grid, values, _spectrum=c)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.N))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spectrum(self) -> np.ndarray:
        """Half-spectrum coefficients ``rfft(values) / N``."""
        if self._spectrum is None:
            c = np.fft.rfft(self._values) / self.grid.N
            c.flags.writeable = False
            self._spectrum = c
        return self._spectrum

    @property
    def full_spectrum(self) -> np.ndarray:
        """All ``N`` coefficients in FFT order."""
        return np.fft.fft(self._values) / self.grid.N

    def mean(self) -> float:
        return float(self.spectrum[0].real)

    def evaluate(self, points, chunk: int = 256) -> np.ndarray:
        """Evaluate the trigonometric interpolant at arbitrary points."""
        pts = np.asarray(points, dtype=float)
        flat = pts.ravel()
        c = self.spectrum
        k = self.grid.rwavenumbers
        # c_0 + 2 Re sum_{0<j<N/2} c_j e^{i xi_j (x - x_0)} + c_{N/2} cos(xi_{N/2} (x - x_0))
        w = np.full(k.shape, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        shift = flat - self.grid.x[0]
        out = np.empty(flat.shape)
        cw = c * w
        for start in range(0, flat.size, chunk):
            seg = shift[start:start + chunk]
            out[start:start + chunk] = (np.exp(1j * np.outer(seg, k)) @ cw).real
        return out.reshape(pts.shape)

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values + other._values)
        return Field(self.grid, self._values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values - other._values)
        return Field(self.grid, self._values - other)

    def __rsub__(self, other):
        return Field(self.grid, other - self._values)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values * other._values)
        return Field(self.grid, self._values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self._values)

    def __pow__(self, p):
        return Field(self.grid, self._values ** p)

    def __repr__(self):
        return f"Field(L={self.grid.L}, N={self.grid.N}, max|f|={np.abs(self._values).max():.3g})"


def _multiply(f: Field, symbol: np.ndarray) -> Field:
    return Field.from_spectrum(f.grid, f.spectrum * symbol)


def _hilbert_symbol(grid: Grid) -> np.ndarray:
    s = np.full(grid.N // 2 + 1, -1j)
    s[0] = 0.0
    s[-1] = 0.0
    return s


def _deriv_symbol(grid: Grid, n: int) -> np.ndarray:
    s = (1j * grid.rwavenumbers) ** n
    if n % 2:
        s[-1] = 0.0
    return s


def hilbert(f: Field) -> Field:
    """Hilbert transform, multiplier ``-i sgn(xi)`` with ``sgn(0) = 0``."""
    return _multiply(f, _hilbert_symbol(f.grid))


def frac_deriv(f: Field, s: float) -> Field:
    """``D^s f`` with symbol ``|xi|^s``; ``s = 0`` is the identity."""
    if s < 0:
        raise ValueError(f"fractional order must be non-negative, got s={s}")
    if s == 0:
        return f
    return _multiply(f, f.grid.rwavenumbers ** s)


def derivative(f: Field, n: int = 1) -> Field:
    """Spectral derivative ``d^n f / dx^n``."""
    if int(n) != n or n < 0:
        raise ValueError(f"derivative order must be a non-negative integer, got {n}")
    if n == 0:
        return f
    return _multiply(f, _deriv_symbol(f.grid, int(n)))


def integrate(f: Field) -> float:
    return float(f.values.sum() * f.grid.dx)


def inner(f: Field, g: Field) -> float:
    f._check(g)
    return float(np.dot(f.values, g.values) * f.grid.dx)


def norm(f: Field, p: float = 2) -> float:
    """Grid quadrature of the ``L^p`` norm, ``p`` in ``[1, inf]``."""
    if not (p >= 1):
        raise ValueError(f"p must lie in [1, inf], got {p}")
    v = np.abs(f.values)
    if np.isinf(p):
        return float(v.max())
    if p == 2:
        return float(np.sqrt(np.dot(v, v) * f.grid.dx))
    return float((np.sum(v ** p) * f.grid.dx) ** (1.0 / p))


def seminorm_hs(f: Field, s: float) -> float:
    """``||D^s f||_2`` evaluated through Parseval; the zero mode is skipped for ``s < 0``."""
    c = f.spectrum
    k = f.grid.rwavenumbers
    w = np.full(k.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    if s == 0:
        sym = np.ones_like(k)
    else:
        sym = np.zeros_like(k)
        sym[1:] = k[1:] ** (2 * s)
    return float(np.sqrt(f.grid.L * np.sum(w * sym * np.abs(c) ** 2)))


def commutator_hilbert(a: Field, f: Field, k: int, m: int) -> Field:
    """``d^k [H; a] d^m f = d^k ( H(a d^m f) - a H(d^m f) )``."""
    if k < 0 or m < 0 or k + m < 1:
        raise ValueError(f"need k, m >= 0 with k + m >= 1, got k={k}, m={m}")
    a._check(f)
    a = a - a.mean()  # constants commute with every multiplier
    g = derivative(f, m)
    inner_term = hilbert(a * g) - a * hilbert(g)
    return derivative(inner_term, k)


def commutator_half(a: Field, f: Field) -> Field:
    """``D^{1/2} [D^{1/2}; a] f = D^{1/2}( D^{1/2}(a f) - a D^{1/2} f )``."""
    a._check(f)
    a = a - a.mean()
    inner_term = frac_deriv(a * f, 0.5) - a * frac_deriv(f, 0.5)
    return frac_deriv(inner_term, 0.5)


def dealias(f: Field, fraction: float) -> Field:
    """Zero every mode with ``|j| > fraction * N / 2``."""
    if not (0 < fraction <= 1):
        raise ValueError(f"dealias fraction must lie in (0, 1], got {fraction}")
    if fraction == 1:
        return f
    return _multiply(f, dealias_mask(f.grid, fraction))


def dealias_mask(grid: Grid, fraction: float) -> np.ndarray:
    j = np.arange(grid.N // 2 + 1)
    return (j <= fraction * grid.N / 2).astype(float)


def spectral_tail(f: Field, fraction: float = 2.0 / 3.0) -> float:
    """Largest coefficient beyond ``fraction * N/2`` relative to the largest overall."""
    c = np.abs(f.spectrum)
    peak = c.max()
    if peak == 0:
        return 0.0
    j = np.arange(c.size)
    return float(c[j > fraction * f.grid.N / 2].max(initial=0.0) / peak)
