"""Example data: AR(1) noise with uniform innovations, a linear chirp, and SNR."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .fourier_core import FourierGrid, TimeSeries, to_coefficients, _coefficients_from_samples
from .spectrum_model import SpectrumDraw

__all__ = [
    "Ar1Config",
    "ChirpParams",
    "SnrValue",
    "generate_ar1",
    "ar1_theoretical_psd",
    "ar1_true_spectrum",
    "chirp",
    "chirp_coefficients",
    "snr",
    "scale_to_snr",
    "BURN_IN",
]

# pre-samples discarded so the returned segment starts near stationarity
BURN_IN = 1000


@dataclass(frozen=True)
class Ar1Config:
    """``n_i = coefficient * n_{i-1} + e_i`` with ``e_i ~ U[-half_width, half_width]``."""

    coefficient: float = 0.75
    innovation_half_width: float = math.sqrt(3.0)
    n: int = 100
    dt: float = 0.01

    def __post_init__(self):
        if not abs(self.coefficient) < 1:
            raise ValueError(f"AR coefficient must lie in (-1, 1), got {self.coefficient}")
        if not self.innovation_half_width > 0:
            raise ValueError("innovation half width must be positive")
        if self.n < 2:
            raise ValueError("need at least 2 samples")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def innovation_variance(self) -> float:
        return self.innovation_half_width**2 / 3

    @property
    def stationary_variance(self) -> float:
        return self.innovation_variance / (1 - self.coefficient**2)

    @property
    def grid(self) -> FourierGrid:
        return FourierGrid(self.n, self.dt)


def generate_ar1(config: Ar1Config, seed=None) -> TimeSeries:
    """Simulate the AR(1) process; ``seed`` may be an int, SeedSequence or Generator."""
    rng = np.random.default_rng(seed)
    w = config.innovation_half_width
    e = rng.uniform(-w, w, size=config.n + BURN_IN)
    x = lfilter([1.0], [1.0, -config.coefficient], e)
    return TimeSeries(x[BURN_IN:], config.dt)


def ar1_theoretical_psd(config: Ar1Config, grid: FourierGrid | None = None) -> np.ndarray:
    """Two-sided continuous PSD ``var_e dt / |1 - rho exp(-2 pi i f dt)|^2`` at the grid frequencies."""
    grid = grid or config.grid
    z = np.exp(-2j * np.pi * grid.frequencies * grid.dt)
    return config.innovation_variance * grid.dt / np.abs(1 - config.coefficient * z) ** 2


def ar1_true_spectrum(config: Ar1Config, grid: FourierGrid | None = None) -> SpectrumDraw:
    """Per-bin variances ``sigma_j^2 = kappa_j S2(f_j)`` from the continuous PSD."""
    grid = grid or config.grid
    return SpectrumDraw.from_two_sided(ar1_theoretical_psd(config, grid), grid)


@dataclass(frozen=True)
class ChirpParams:
    f: float
    fdot: float
    a: float
    phi: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError(f"amplitude must be nonnegative, got {self.a}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.fdot, self.a, self.phi])

    @classmethod
    def from_array(cls, v) -> "ChirpParams":
        return cls(*map(float, v))


def chirp(params: ChirpParams, times) -> np.ndarray:
    """``a sin(2 pi (f + fdot t) t + phi)``."""
    t = np.asarray(times, dtype=float)
    return params.a * np.sin(2 * np.pi * (params.f + params.fdot * t) * t + params.phi)


def chirp_coefficients(params: ChirpParams, grid: FourierGrid):
    """Fourier coefficients of the chirp sampled on the grid."""
    ts = TimeSeries(chirp(params, grid.times), grid.dt)
    return to_coefficients(ts)


@dataclass(frozen=True)
class SnrValue:
    rho: float

    def __float__(self):
        return self.rho


def snr(signal: TimeSeries, draw: SpectrumDraw) -> SnrValue:
    """Noise-weighted signal norm, ``rho^2 = sum_j (a_j^2 + b_j^2) / sigma_j^2``.

    On bins with ``kappa_j = 2`` each term equals ``4 (dt/N) |G(f_j)|^2 / S1*(f_j)``.
    """
    if signal.grid != draw.grid:
        raise ValueError("signal and spectrum are on different Fourier grids")
    if np.any(draw.sigma2 <= 0):
        raise ValueError("spectrum must be positive in every bin")
    a, b = _coefficients_from_samples(signal.samples, signal.dt)
    return SnrValue(float(np.sqrt(np.sum((a**2 + b**2) / draw.sigma2))))


def scale_to_snr(params: ChirpParams, draw: SpectrumDraw, target: float) -> ChirpParams:
    """Rescale the chirp amplitude so that its SNR under ``draw`` equals ``target``."""
    grid = draw.grid
    unit = ChirpParams(params.f, params.fdot, 1.0, params.phi)
    rho1 = snr(TimeSeries(chirp(unit, grid.times), grid.dt), draw).rho
    if rho1 == 0:
        raise ValueError("chirp has zero power on this grid")
    return ChirpParams(params.f, params.fdot, target / rho1, params.phi)
