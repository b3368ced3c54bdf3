"""Scaled inverse-chi-squared spectrum priors, posteriors and derived quantities.

Each Fourier bin ``j`` carries a variance ``sigma_j^2 = Var(A_j)``; the
discretized one-sided spectrum is ``S1*(f_j) = sigma_j^2`` and the two-sided
one ``S2*(f_j) = sigma_j^2 / kappa_j``.

Moments that do not exist (infinite mean for ``nu <= 2``, infinite variance
for ``nu <= 4``) are returned as ``None``, never as a numeric sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

from .fourier_core import FourierCoefficients, FourierGrid

__all__ = [
    "InvChiSqParams",
    "SpectrumPrior",
    "SpectrumDraw",
    "AutocovarianceFn",
    "WhitePriorTarget",
    "Band",
    "inv_chisq_log_density",
    "inv_chisq_moments",
    "inv_chisq_quantile",
    "inv_chisq_cdf",
    "posterior_update",
    "integrated_spectrum",
    "autocovariance",
    "covariance_matrix",
    "autocovariance_moments",
    "elicit_from_moments",
    "elicit_white_prior",
    "white_prior_from_nu",
    "full_band_integrated_spectrum",
    "autocovariance_from_sigma2",
    "band_prior_params",
    "elicit_band_prior",
    "integrated_spectrum_moments",
    "white_variation_coefficient",
]


@dataclass(frozen=True)
class InvChiSqParams:
    """``Inv-chi^2(nu, s2)``; ``nu <= 0`` denotes an improper member of the family.

    Jeffreys is ``(0, 0)``, uniform on sigma ``(-1, 0)``, uniform on sigma^2
    ``(-2, 0)``.
    """

    nu: float
    s2: float

    def __post_init__(self):
        nu, s2 = float(self.nu), float(self.s2)
        if not (np.isfinite(nu) and np.isfinite(s2)):
            raise ValueError(f"non-finite parameters nu={nu}, s2={s2}")
        if s2 < 0:
            raise ValueError(f"scale must be nonnegative, got {s2}")
        if nu > 0 and s2 <= 0:
            raise ValueError(f"proper distribution (nu={nu}) needs a positive scale")
        if nu <= 0 and s2 != 0:
            raise ValueError(f"improper member (nu={nu}) must have zero scale, got {s2}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "s2", s2)

    @property
    def improper(self) -> bool:
        return self.nu <= 0

    @property
    def jeffreys(self) -> bool:
        return self.nu == 0

    def _require_proper(self, what: str):
        if self.improper:
            raise ValueError(f"{what} is undefined for the improper prior nu={self.nu}")


def _check_proper_arrays(nu, s2, what):
    if np.any(nu <= 0) or np.any(s2 <= 0):
        raise ValueError(f"{what} requires proper bins (nu > 0, s2 > 0)")


def inv_chisq_log_density(params: InvChiSqParams, sigma2):
    params._require_proper("density")
    sigma2 = np.asarray(sigma2, dtype=float)
    if np.any(sigma2 <= 0):
        raise ValueError("sigma2 must be positive")
    nu, s2 = params.nu, params.s2
    half = nu / 2
    out = (half * np.log(half * s2) - special.gammaln(half)
           - (1 + half) * np.log(sigma2) - nu * s2 / (2 * sigma2))
    return out if out.ndim else float(out)


def inv_chisq_cdf(params: InvChiSqParams, sigma2):
    """``P(X <= sigma2) = Q(nu/2, nu s2 / (2 sigma2))`` (upper regularized gamma)."""
    params._require_proper("cdf")
    sigma2 = np.asarray(sigma2, dtype=float)
    with np.errstate(divide="ignore"):
        out = special.gammaincc(params.nu / 2, params.nu * params.s2 / (2 * sigma2))
    return out if out.ndim else float(out)


def inv_chisq_moments(params: InvChiSqParams) -> tuple[float | None, float | None]:
    params._require_proper("moments")
    nu, s2 = params.nu, params.s2
    mean = nu * s2 / (nu - 2) if nu > 2 else None
    var = 2 * nu**2 * s2**2 / ((nu - 2) ** 2 * (nu - 4)) if nu > 4 else None
    return mean, var


def inv_chisq_quantile(params: InvChiSqParams, p):
    params._require_proper("quantile")
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("quantile level must lie strictly between 0 and 1")
    # isf(p) is the (1-p)-quantile of chi^2_nu, computed without cancellation
    out = params.nu * params.s2 / stats.chi2.isf(p, params.nu)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class SpectrumPrior:
    """Independent ``Inv-chi^2(nu_j, s2_j)`` per Fourier bin.

    Used for priors and (by conjugacy) posteriors alike.
    """

    nu: np.ndarray
    s2: np.ndarray
    grid: FourierGrid

    def __post_init__(self):
        nu = np.array(self.nu, dtype=float)
        s2 = np.array(self.s2, dtype=float)
        m = self.grid.nbins
        if nu.shape == ():
            nu = np.full(m, float(nu))
        if s2.shape == ():
            s2 = np.full(m, float(s2))
        if nu.shape != (m,) or s2.shape != (m,):
            raise ValueError(f"need {m} bins, got {nu.shape} and {s2.shape}")
        # validates each bin
        for v, s in zip(nu, s2):
            InvChiSqParams(v, s)
        nu.setflags(write=False)
        s2.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "s2", s2)

    @classmethod
    def from_bins(cls, bins: Sequence[InvChiSqParams], grid: FourierGrid) -> "SpectrumPrior":
        return cls([b.nu for b in bins], [b.s2 for b in bins], grid)

    @classmethod
    def jeffreys(cls, grid: FourierGrid) -> "SpectrumPrior":
        return cls(np.zeros(grid.nbins), np.zeros(grid.nbins), grid)

    @classmethod
    def white(cls, params: InvChiSqParams, grid: FourierGrid) -> "SpectrumPrior":
        return cls(np.full(grid.nbins, params.nu), np.full(grid.nbins, params.s2), grid)

    @property
    def bins(self) -> list[InvChiSqParams]:
        return [InvChiSqParams(v, s) for v, s in zip(self.nu, self.s2)]

    def __getitem__(self, j) -> InvChiSqParams:
        return InvChiSqParams(self.nu[j], self.s2[j])

    def __len__(self):
        return self.grid.nbins

    @property
    def improper(self) -> np.ndarray:
        return self.nu <= 0

    @property
    def proper(self) -> bool:
        return not np.any(self.improper)

    def means(self) -> np.ndarray | None:
        """Per-bin ``E[sigma_j^2]``, or None unless every ``nu_j > 2``."""
        if np.any(self.nu <= 2):
            return None
        return self.nu * self.s2 / (self.nu - 2)

    def variances(self) -> np.ndarray | None:
        if np.any(self.nu <= 4):
            return None
        nu = self.nu
        return 2 * nu**2 * self.s2**2 / ((nu - 2) ** 2 * (nu - 4))

    def quantiles(self, p) -> np.ndarray:
        """Per-bin ``p``-quantiles of ``sigma_j^2``."""
        _check_proper_arrays(self.nu, self.s2, "quantiles")
        return self.nu * self.s2 / stats.chi2.isf(p, self.nu)

    def log_density(self, sigma2) -> np.ndarray:
        """Per-bin log densities evaluated at ``sigma2`` (broadcast over trailing grid axes)."""
        _check_proper_arrays(self.nu, self.s2, "density")
        sigma2 = np.asarray(sigma2, dtype=float)
        nu = self.nu.reshape((-1,) + (1,) * (sigma2.ndim - 1)) if sigma2.ndim > 1 else self.nu
        s2 = self.s2.reshape(nu.shape)
        half = nu / 2
        return (half * np.log(half * s2) - special.gammaln(half)
                - (1 + half) * np.log(sigma2) - nu * s2 / (2 * sigma2))


@dataclass(frozen=True)
class SpectrumDraw:
    """One realization of the per-bin variances ``sigma_j^2``."""

    sigma2: np.ndarray
    grid: FourierGrid

    def __post_init__(self):
        s = np.array(self.sigma2, dtype=float)
        if s.shape == ():
            s = np.full(self.grid.nbins, float(s))
        if s.shape != (self.grid.nbins,):
            raise ValueError(f"need {self.grid.nbins} variances, got shape {s.shape}")
        if not np.all(np.isfinite(s)) or np.any(s <= 0):
            raise ValueError("spectrum variances must be positive and finite")
        s.setflags(write=False)
        object.__setattr__(self, "sigma2", s)

    @property
    def one_sided(self) -> np.ndarray:
        return self.sigma2

    @property
    def two_sided(self) -> np.ndarray:
        return self.sigma2 / self.grid.kappas

    @classmethod
    def from_two_sided(cls, psd, grid: FourierGrid) -> "SpectrumDraw":
        return cls(np.asarray(psd, dtype=float) * grid.kappas, grid)


@dataclass(frozen=True)
class AutocovarianceFn:
    """``gamma(k dt)`` for lags ``k = 0 .. N-1``."""

    gamma: np.ndarray
    dt: float

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.gamma.size) * self.dt

    @property
    def variance(self) -> float:
        return float(self.gamma[0])


@dataclass(frozen=True)
class WhitePriorTarget:
    """Prior mean and variation coefficient of the full-band integrated power."""

    var_expectation: float
    variation_coeff: float

    def __post_init__(self):
        for name in ("var_expectation", "variation_coeff"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


def posterior_update(prior: SpectrumPrior, residual: FourierCoefficients) -> SpectrumPrior:
    """Conjugate update ``nu' = nu + kappa``, ``s2' = (nu s2 + a^2 + b^2) / nu'``.

    Improper priors go through the same algebra; a bin is proper afterwards
    iff ``nu' > 0``.  A bin left improper (``nu' <= 0``) with nonzero power
    has no representation in the family and is rejected.
    """
    if residual.grid != prior.grid:
        raise ValueError("prior and data are on different Fourier grids")
    kap = prior.grid.kappas
    nu_new = prior.nu + kap
    ss = prior.nu * prior.s2 + residual.power
    bad = (nu_new <= 0) & (ss > 0)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise ValueError(f"posterior at bin {j} stays improper (nu'={nu_new[j]}) with nonzero data")
    with np.errstate(divide="ignore", invalid="ignore"):
        s2_new = np.where(nu_new > 0, ss / nu_new, 0.0)
    if np.any((nu_new > 0) & (s2_new <= 0)):
        j = int(np.flatnonzero((nu_new > 0) & (s2_new <= 0))[0])
        raise ValueError(f"posterior at bin {j} is degenerate: zero scale with nu'={nu_new[j]}")
    return SpectrumPrior(nu_new, s2_new, prior.grid)


def _band_sum(grid: FourierGrid, f1: float, f2: float, include_dc: bool):
    j1, j2 = grid.band_indices(f1, f2, include_dc=include_dc)
    return slice(j1, j2 + 1)


def integrated_spectrum(draw: SpectrumDraw, f1: float, f2: float, include_dc: bool = False) -> float:
    """``df * sum_{j1..j2} (kappa_j/2) sigma_j^2`` over the bins of ``(f1, f2]``."""
    grid = draw.grid
    if f2 - f1 < grid.df * (1 - 1e-9):
        raise ValueError(f"band ({f1}, {f2}] narrower than the frequency spacing {grid.df}")
    sl = _band_sum(grid, f1, f2, include_dc)
    return float(grid.df * np.sum(grid.kappas[sl] / 2 * draw.sigma2[sl]))


def full_band_integrated_spectrum(draw: SpectrumDraw) -> float:
    grid = draw.grid
    return integrated_spectrum(draw, 0.0, grid.frequencies[-1], include_dc=True)


def _cos_table(grid: FourierGrid) -> np.ndarray:
    # cos(2 pi f_j * k dt) = cos(2 pi j k / N); rows = lags, cols = bins
    k = np.arange(grid.n)[:, None]
    j = np.arange(grid.nbins)[None, :]
    return np.cos(2 * np.pi * ((j * k) % grid.n) / grid.n)


def autocovariance_from_sigma2(sigma2, grid: FourierGrid) -> np.ndarray:
    """Autocovariance for one draw (1-D) or many draws (rows of a 2-D array)."""
    weights = np.asarray(sigma2, dtype=float) * (grid.kappas / 2)
    return weights @ _cos_table(grid).T / (grid.n * grid.dt)


def autocovariance(draw: SpectrumDraw) -> AutocovarianceFn:
    """``gamma(tau) = 1/(N dt) sum_j sigma_j^2 (kappa_j/2) cos(2 pi f_j tau)``."""
    g = autocovariance_from_sigma2(draw.sigma2, draw.grid)
    g.setflags(write=False)
    return AutocovarianceFn(g, draw.grid.dt)


def covariance_matrix(draw: SpectrumDraw) -> np.ndarray:
    """Symmetric circulant covariance ``C[m, n] = gamma(((n - m) mod N) dt)``."""
    g = autocovariance(draw).gamma
    n = g.size
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return g[idx]


def autocovariance_moments(prior: SpectrumPrior) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Per-lag mean and variance of ``gamma`` under independent bin distributions.

    Either output is None when some bin lacks the corresponding moment.
    """
    grid = prior.grid
    cos = _cos_table(grid)
    scale = 1.0 / (grid.n * grid.dt)
    means = prior.means()
    variances = prior.variances()
    mean = None if means is None else scale * (cos @ (means * grid.kappas / 2))
    var = None if variances is None else scale**2 * (cos**2 @ (variances * grid.kappas**2 / 4))
    return mean, var


def elicit_from_moments(mean_sigma2: float, var_sigma2: float) -> InvChiSqParams:
    if not (mean_sigma2 > 0 and var_sigma2 > 0):
        raise ValueError("prior mean and variance must both be positive")
    nu = 4 + 2 * mean_sigma2**2 / var_sigma2
    return InvChiSqParams(nu, (nu - 2) / nu * mean_sigma2)


def _weight_sums(grid: FourierGrid, j1: int, j2: int) -> tuple[float, float]:
    k = grid.kappas[j1 : j2 + 1]
    return float(np.sum(k / 2)), float(np.sum(k**2 / 4))


def band_prior_params(grid: FourierGrid, j1: int, j2: int, mean: float, var: float) -> InvChiSqParams:
    """Constant ``(nu, s2)`` over bins ``j1..j2`` giving band power moments ``(mean, var)``.

    With ``K1 = sum kappa/2`` and ``K2 = sum kappa^2/4`` over the band, the
    constant-parameter variation coefficient is ``sqrt(2/(nu-4)) sqrt(K2)/K1``,
    so ``nu = 4 + 2 (K2/K1^2) mean^2/var``; this reduces to
    ``4 + 2/(j2-j1+1) mean^2/var`` on interior bands.  The scale follows from
    ``mean = df K1 nu/(nu-2) s2``.
    """
    if not (mean > 0 and var > 0):
        raise ValueError("band power moments must be positive")
    k1, k2 = _weight_sums(grid, j1, j2)
    nu = 4 + 2 * (k2 / k1**2) * mean**2 / var
    s2 = mean * (nu - 2) / nu / (grid.df * k1)
    return InvChiSqParams(nu, s2)


def white_variation_coefficient(nu: float, n: int) -> float:
    """Full-band variation coefficient of a constant prior, even ``n``."""
    return float(np.sqrt(2 / (nu - 4)) * np.sqrt((n - 1) / 2) / (n / 2))


def elicit_white_prior(target: WhitePriorTarget, grid: FourierGrid) -> SpectrumPrior:
    """Constant prior whose full-band power has mean ``var_expectation`` and
    variation coefficient ``variation_coeff``."""
    j2 = grid.nbins - 1
    params = band_prior_params(
        grid, 0, j2, target.var_expectation, (target.variation_coeff * target.var_expectation) ** 2
    )
    return SpectrumPrior.white(params, grid)


def white_prior_from_nu(var_expectation: float, nu: float, grid: FourierGrid) -> SpectrumPrior:
    """Constant prior with chosen ``nu > 2`` and full-band expected power ``var_expectation``.

    For even ``N`` this is ``s2 = 2 dt (nu-2)/nu * var_expectation``.
    """
    if nu <= 2:
        raise ValueError(f"expected power is infinite unless nu > 2, got nu={nu}")
    if var_expectation <= 0:
        raise ValueError("expected power must be positive")
    k1, _ = _weight_sums(grid, 0, grid.nbins - 1)
    s2 = var_expectation * (nu - 2) / nu / (grid.df * k1)
    return SpectrumPrior.white(InvChiSqParams(nu, s2), grid)


@dataclass(frozen=True)
class Band:
    """Target power moments for the frequency band ``(f1, f2]``."""

    f1: float
    f2: float
    mean: float
    var: float


def elicit_band_prior(bands: Iterable[Band | tuple], grid: FourierGrid) -> SpectrumPrior:
    """Piecewise-constant prior from per-band power moments.

    Bands must be contiguous and cover ``[0, f_{N/2}]``; the first band's lower
    edge at 0 includes the DC bin.
    """
    bands = [b if isinstance(b, Band) else Band(*b) for b in bands]
    if not bands:
        raise ValueError("no bands given")
    bands.sort(key=lambda b: b.f1)
    nu = np.full(grid.nbins, np.nan)
    s2 = np.full(grid.nbins, np.nan)
    expected_j1 = 0
    for i, band in enumerate(bands):
        if band.f2 <= band.f1:
            raise ValueError(f"band ({band.f1}, {band.f2}] is empty")
        j1, j2 = grid.band_indices(band.f1, band.f2, include_dc=(i == 0))
        if j1 != expected_j1:
            kind = "overlap" if j1 < expected_j1 else "gap"
            raise ValueError(f"bands {kind} at bin {min(j1, expected_j1)}")
        p = band_prior_params(grid, j1, j2, band.mean, band.var)
        nu[j1 : j2 + 1] = p.nu
        s2[j1 : j2 + 1] = p.s2
        expected_j1 = j2 + 1
    if expected_j1 != grid.nbins:
        raise ValueError(f"bands leave bins {expected_j1}..{grid.nbins - 1} uncovered")
    return SpectrumPrior(nu, s2, grid)


def integrated_spectrum_moments(
    prior: SpectrumPrior, f1: float, f2: float, include_dc: bool = False
) -> tuple[float | None, float | None, float | None]:
    """Prior mean, variance and variation coefficient of the band power.

    Returns None for any moment some bin in the band does not have.
    """
    grid = prior.grid
    sl = _band_sum(grid, f1, f2, include_dc)
    nu, s2, k = prior.nu[sl], prior.s2[sl], grid.kappas[sl]
    mean = var = cv = None
    if np.all(nu > 2):
        mean = float(grid.df * np.sum(k / 2 * nu / (nu - 2) * s2))
    if np.all(nu > 4):
        var = float(grid.df**2 * np.sum(k**2 / 4 * 2 * nu**2 / ((nu - 2) ** 2 * (nu - 4)) * s2**2))
        cv = float(np.sqrt(var) / mean)
    return mean, var, cv
