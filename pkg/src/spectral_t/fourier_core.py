"""Discrete Fourier transform conventions and the real-coefficient representation.

A real series ``x_0 .. x_{N-1}`` sampled every ``dt`` seconds is written as

    x_i = 1/sqrt(N dt) * sum_j [a_j cos(2 pi f_j t_i) + b_j sin(2 pi f_j t_i)]

with ``t_i = i dt`` (``i = 0 .. N-1``), ``f_j = j / (N dt)`` and
``j = 0 .. floor(N/2)``.  The DFT is unnormalized in the forward direction and
carries ``1/N`` in the inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "TimeSeries",
    "FourierGrid",
    "FourierCoefficients",
    "Periodogram",
    "AmplitudePhase",
    "dft",
    "inverse_dft",
    "kappa",
    "to_coefficients",
    "from_coefficients",
    "periodogram",
    "amplitude_phase",
    "synthesize_amplitude_phase",
]


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real series."""

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        x = _frozen(self.samples)
        if x.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if x.size < 2:
            raise ValueError(f"need at least 2 samples, got {x.size}")
        bad = np.flatnonzero(~np.isfinite(x))
        if bad.size:
            raise ValueError(f"non-finite sample at index {int(bad[0])}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    @property
    def df(self) -> float:
        return 1.0 / (self.n * self.dt)

    @property
    def grid(self) -> "FourierGrid":
        return FourierGrid(self.n, self.dt)

    def __len__(self):
        return self.n


def kappa(j: int, n: int) -> int:
    """Number of Fourier coefficients at bin ``j`` that are not zero by definition."""
    if n < 1:
        raise ValueError(f"sample count must be positive, got {n}")
    if not 0 <= j <= n // 2:
        raise ValueError(f"bin index {j} outside 0..{n // 2}")
    if j == 0 or (n % 2 == 0 and j == n // 2):
        return 1
    return 2


@dataclass(frozen=True)
class FourierGrid:
    """Fourier frequencies ``f_j = j/(N dt)`` for ``j = 0 .. floor(N/2)``."""

    n: int
    dt: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs an integer sample count >= 2, got {self.n}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def nbins(self) -> int:
        return self.n // 2 + 1

    @property
    def df(self) -> float:
        return 1.0 / (self.n * self.dt)

    @cached_property
    def kappas(self) -> np.ndarray:
        k = np.full(self.nbins, 2, dtype=int)
        k[0] = 1
        if self.n % 2 == 0:
            k[-1] = 1
        k.setflags(write=False)
        return k

    @cached_property
    def frequencies(self) -> np.ndarray:
        return _frozen(np.arange(self.nbins) * self.df)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def band_indices(self, f1: float, f2: float, include_dc: bool = False) -> tuple[int, int]:
        """Inclusive bin range ``(j1, j2)`` for the band ``(f1, f2]``.

        ``j1`` is the first bin strictly above ``f1`` and ``j2`` the last bin
        at or below ``f2``.  With ``include_dc`` (or ``f1 < 0``) a lower edge
        at zero frequency admits bin 0 as well.
        """
        # frequencies are compared on the index scale with a small slack so
        # that band edges given as exact Fourier frequencies behave as intended
        eps = 1e-9
        u1 = f1 / self.df
        u2 = f2 / self.df
        if f1 < 0 or (include_dc and f1 <= eps * self.df):
            j1 = 0
        else:
            j1 = int(np.floor(u1 + eps)) + 1
        j2 = min(int(np.floor(u2 + eps)), self.nbins - 1)
        if j1 > j2:
            raise ValueError(f"no Fourier frequency in the band ({f1}, {f2}]")
        return j1, j2


@dataclass(frozen=True)
class FourierCoefficients:
    """Real cosine/sine amplitudes ``a_j``, ``b_j`` on a Fourier grid."""

    a: np.ndarray
    b: np.ndarray
    grid: FourierGrid

    def __post_init__(self):
        a, b = _frozen(self.a), _frozen(self.b)
        m = self.grid.nbins
        if a.shape != (m,) or b.shape != (m,):
            raise ValueError(f"expected {m} coefficients per component, got {a.shape} and {b.shape}")
        if b[0] != 0:
            raise ValueError("b_0 must be zero")
        if self.grid.n % 2 == 0 and b[-1] != 0:
            raise ValueError("b at the Nyquist bin must be zero for even N")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def power(self) -> np.ndarray:
        """Per-bin ``a_j^2 + b_j^2``."""
        return self.a**2 + self.b**2

    @property
    def kappas(self) -> np.ndarray:
        return self.grid.kappas

    def __sub__(self, other: "FourierCoefficients") -> "FourierCoefficients":
        if other.grid != self.grid:
            raise ValueError("coefficient grids differ")
        return FourierCoefficients(self.a - other.a, self.b - other.b, self.grid)

    def __add__(self, other: "FourierCoefficients") -> "FourierCoefficients":
        if other.grid != self.grid:
            raise ValueError("coefficient grids differ")
        return FourierCoefficients(self.a + other.a, self.b + other.b, self.grid)

    def scaled(self, factor: float) -> "FourierCoefficients":
        return FourierCoefficients(factor * self.a, factor * self.b, self.grid)


@dataclass(frozen=True)
class Periodogram:
    p1: np.ndarray
    p2: np.ndarray
    grid: FourierGrid


@dataclass(frozen=True)
class AmplitudePhase:
    amplitude: np.ndarray
    phase: np.ndarray
    grid: FourierGrid


def dft(ts: TimeSeries | np.ndarray) -> np.ndarray:
    """Forward DFT, ``X(f_k) = sum_j x_j exp(-2 pi i j k / N)``, for ``k = 0 .. N-1``."""
    x = ts.samples if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=float)
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise ValueError(f"non-finite sample at index {int(bad[0])}")
    return np.fft.fft(x)


def inverse_dft(xf) -> np.ndarray:
    """Inverse DFT with the ``1/N`` factor; returns the real part."""
    xf = np.asarray(xf, dtype=complex)
    if xf.ndim != 1 or xf.size == 0:
        raise ValueError("inverse_dft needs a non-empty one-dimensional input")
    return np.fft.ifft(xf).real


def _coefficients_from_samples(x: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[-1]
    m = n // 2 + 1
    xf = np.fft.rfft(x)
    k = np.full(m, 2.0)
    k[0] = 1.0
    if n % 2 == 0:
        k[-1] = 1.0
    scale = k * np.sqrt(dt / n)
    a = scale * xf.real
    b = -scale * xf.imag
    # exact zeros by definition, rather than rounding noise
    b[..., 0] = 0.0
    if n % 2 == 0:
        b[..., -1] = 0.0
    return a, b


def to_coefficients(ts: TimeSeries) -> FourierCoefficients:
    a, b = _coefficients_from_samples(ts.samples, ts.dt)
    return FourierCoefficients(a, b, ts.grid)


def from_coefficients(fc: FourierCoefficients) -> TimeSeries:
    grid = fc.grid
    n = grid.n
    xf = np.zeros(grid.nbins, dtype=complex)
    scale = grid.kappas * np.sqrt(grid.dt / n)
    xf.real = fc.a / scale
    xf.imag = -fc.b / scale
    return TimeSeries(np.fft.irfft(xf, n=n), grid.dt)


def periodogram(fc: FourierCoefficients) -> Periodogram:
    """One-sided ``p1 = (a^2+b^2)/kappa`` and two-sided ``p2 = p1/kappa`` power."""
    p1 = fc.power / fc.kappas
    return Periodogram(_frozen(p1), _frozen(p1 / fc.kappas), fc.grid)


def amplitude_phase(fc: FourierCoefficients) -> AmplitudePhase:
    """Amplitude/phase form ``lambda_j sin(2 pi f_j t + phi_j)``.

    Matching ``a cos + b sin`` term by term gives ``a = lambda sin(phi)`` and
    ``b = lambda cos(phi)``, hence ``phi = atan2(a, b)``.  Zero amplitude maps
    to phase 0.
    """
    lam = np.hypot(fc.a, fc.b)
    phi = np.arctan2(fc.a, fc.b)
    phi = np.where(lam == 0, 0.0, phi)
    # atan2 returns -pi for (−0, negative); fold onto (−pi, pi]
    phi = np.where(phi <= -np.pi, np.pi, phi)
    return AmplitudePhase(_frozen(lam), _frozen(phi), fc.grid)


def synthesize_amplitude_phase(ap: AmplitudePhase) -> TimeSeries:
    grid = ap.grid
    t = grid.times[:, None]
    terms = ap.amplitude * np.sin(2 * np.pi * grid.frequencies * t + ap.phase)
    return TimeSeries(terms.sum(axis=1) / np.sqrt(grid.n * grid.dt), grid.dt)
