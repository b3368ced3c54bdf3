"""Sampling: inverse-chi-squared draws, random-walk Metropolis, Gibbs for white noise,
and Monte Carlo propagation of spectrum posteriors to autocovariances.

Every sampler takes an explicit seed (or Generator); there is no global RNG
state.  Chains first run an adaptive pre-phase that tunes per-parameter
proposal scales towards 20-40% acceptance; the scales are then frozen for
the recorded chain.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .fourier_core import FourierCoefficients, FourierGrid, TimeSeries
from .spectrum_model import (
    InvChiSqParams,
    SpectrumDraw,
    SpectrumPrior,
    autocovariance_from_sigma2,
    posterior_update,
)
from .signal_noise import ChirpParams

__all__ = [
    "ChainConfig",
    "PosteriorSample",
    "Chain",
    "ChirpPrior",
    "AutocovarianceSummary",
    "derive_seeds",
    "sample_inv_chisq",
    "sample_spectrum",
    "conditional_noise_draw",
    "metropolis",
    "gibbs_white_noise",
    "marginal_signal_sampler",
    "fixed_spectrum_sampler",
    "monte_carlo_autocovariance",
    "chirp_model",
    "find_start",
    "interval_contains",
    "CHIRP_NAMES",
]

CHIRP_NAMES = ("f", "fdot", "a", "phi")
TWO_PI = 2 * math.pi

_ADAPT_BATCH = 100
_TARGET_ACCEPT = (0.2, 0.4)


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 100_000
    burn_in: int = 0
    thinning: int = 10
    seed: int = 0
    proposal_scales: tuple[float, ...] | None = None
    adapt_iterations: int = 5_000

    def __post_init__(self):
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must be nonnegative and below iterations")
        if self.thinning <= 0:
            raise ValueError("thinning must be positive")
        if self.adapt_iterations < 0:
            raise ValueError("adapt_iterations must be nonnegative")
        if self.proposal_scales is not None:
            scales = tuple(float(s) for s in self.proposal_scales)
            if any(s < 0 or not math.isfinite(s) for s in scales):
                raise ValueError("proposal scales must be finite and nonnegative")
            object.__setattr__(self, "proposal_scales", scales)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["proposal_scales"] is not None:
            d["proposal_scales"] = list(d["proposal_scales"])
        return d


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Independent child seeds: ``SeedSequence(master_seed).spawn(count)``, one 63-bit word each."""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]


@dataclass(frozen=True)
class PosteriorSample:
    signal: ChirpParams | None
    noise: SpectrumDraw | None
    log_target: float


@dataclass
class Chain:
    """Retained samples of a run plus its bookkeeping."""

    names: tuple[str, ...]
    params: np.ndarray
    log_target: np.ndarray
    iteration: np.ndarray
    acceptance_rate: float
    n_nonfinite: int
    proposal_scales: np.ndarray
    config: ChainConfig
    periodic: tuple[str, ...] = ()
    noise: np.ndarray | None = None
    noise_grid: FourierGrid | None = None

    def __len__(self):
        return self.log_target.size

    def column(self, name: str) -> np.ndarray:
        return self.params[:, self.names.index(name)]

    def samples(self) -> Iterator[PosteriorSample]:
        chirp = self.names == CHIRP_NAMES
        for i in range(len(self)):
            signal = ChirpParams.from_array(self.params[i]) if chirp else None
            noise = None
            if self.noise is not None and self.noise.shape[1] == self.noise_grid.nbins:
                noise = SpectrumDraw(self.noise[i], self.noise_grid)
            elif self.noise is not None:
                noise = SpectrumDraw(np.full(self.noise_grid.nbins, self.noise[i, 0]), self.noise_grid)
            yield PosteriorSample(signal, noise, float(self.log_target[i]))

    def summary(self, level: float = 0.95) -> dict[str, dict[str, float]]:
        """Mean, sd and central credible interval per parameter.

        Periodic parameters are summarized after unwrapping around their
        circular mean, then reported modulo the period.
        """
        lo, hi = (1 - level) / 2, (1 + level) / 2
        out = {}
        for k, name in enumerate(self.names):
            x = self.params[:, k]
            if name in self.periodic:
                centre = _circular_mean(x)
                x = centre + _wrap_centered(x - centre)
            out[name] = {
                "mean": float(np.mean(x)),
                "sd": float(np.std(x, ddof=1)) if x.size > 1 else 0.0,
                "lower": float(np.quantile(x, lo)),
                "upper": float(np.quantile(x, hi)),
            }
        return out


def _circular_mean(x) -> float:
    return float(np.arctan2(np.mean(np.sin(x)), np.mean(np.cos(x))) % TWO_PI)


def _wrap_centered(d):
    return (d + math.pi) % TWO_PI - math.pi


def interval_contains(summary: Mapping[str, float], value: float, periodic: bool = False) -> bool:
    lo, hi = summary["lower"], summary["upper"]
    if periodic:
        centre = summary["mean"]
        value = centre + _wrap_centered(value - centre)
    return lo <= value <= hi


def sample_inv_chisq(params: InvChiSqParams, rng, size=None):
    """``nu s2 / X`` with ``X ~ chi^2_nu``."""
    params._require_proper("sampling")
    rng = np.random.default_rng(rng)
    return params.nu * params.s2 / rng.chisquare(params.nu, size=size)


def sample_spectrum(prior: SpectrumPrior, rng, size: int | None = None) -> np.ndarray:
    """Independent per-bin draws; shape ``(nbins,)`` or ``(size, nbins)``."""
    if not prior.proper:
        raise ValueError("cannot sample from an improper spectrum distribution")
    rng = np.random.default_rng(rng)
    shape = prior.nu.shape if size is None else (size,) + prior.nu.shape
    return prior.nu * prior.s2 / rng.chisquare(prior.nu, size=shape)


def conditional_noise_draw(prior: SpectrumPrior, residual: FourierCoefficients, rng) -> SpectrumDraw:
    """One draw of the spectrum from its conjugate posterior given residuals."""
    post = posterior_update(prior, residual)
    return SpectrumDraw(sample_spectrum(post, rng), prior.grid)


class _Proposal:
    """Diagonal Gaussian random walk, ``scales = base * factor``, with periodic coordinates."""

    def __init__(self, scales, periodic_mask):
        self.base = np.array(scales, dtype=float)
        self.factor = 1.0
        self.periodic = np.asarray(periodic_mask, dtype=bool)
        self.scales = self.base.copy()
        self._rebased = False

    def propose(self, x, z):
        y = x + self.scales * z
        if self.periodic.any():
            y[self.periodic] %= TWO_PI
        return y

    def tune(self, accept_rate: float, history: np.ndarray | None = None):
        """Adjust the common factor towards the target acceptance band.

        With ``history`` (pre-phase samples) the per-parameter base scales
        are reset to ``2.38/sqrt(d)`` times the observed spread; parameters
        with zero scale stay fixed.
        """
        lo, hi = _TARGET_ACCEPT
        if accept_rate < lo:
            self.factor *= 0.5 if accept_rate < lo / 2 else 0.75
        elif accept_rate > hi:
            self.factor *= 2.0 if accept_rate > (1 + hi) / 2 else 1.3
        if history is not None and len(history) > 200:
            centred = history - np.median(history, axis=0)
            if self.periodic.any():
                centred[:, self.periodic] = _wrap_centered(centred[:, self.periodic])
            sd = np.std(centred, axis=0)
            active = (self.base > 0) & (sd > 0)
            d = max(int(np.count_nonzero(self.base)), 1)
            if active.any():
                new = self.base.copy()
                new[active] = 2.38 / math.sqrt(d) * sd[active]
                # the first reset replaces the initial guesses, so restart the factor
                if not self._rebased:
                    self.factor = 1.0
                    self._rebased = True
                self.base = new
        self.scales = self.base * self.factor


def _default_scales(init) -> np.ndarray:
    return np.maximum(np.abs(np.asarray(init, dtype=float)) * 0.01, 1e-3)


def _metropolis_core(log_target, x0, lp0, config: ChainConfig, proposal: _Proposal, rng,
                     after_step: Callable | None = None):
    """Shared loop: adaptive pre-phase, then frozen chain.

    ``after_step(x, lp, rng)`` may perform an extra Gibbs update and returns
    the (possibly changed) log target at ``x`` plus an auxiliary record.
    """
    d = x0.size
    x, lp = x0.copy(), lp0
    aux = None
    if after_step is not None:
        lp, aux = after_step(x, rng)

    # adaptive pre-phase; discarded
    n_adapt = config.adapt_iterations
    history = []
    batch_acc = 0
    for i in range(n_adapt):
        y = proposal.propose(x, rng.standard_normal(d))
        lpy = log_target(y)
        if math.isfinite(lpy) and (lpy >= lp or math.log(rng.random()) < lpy - lp):
            x, lp = y, lpy
            batch_acc += 1
        if after_step is not None:
            lp, aux = after_step(x, rng)
        history.append(x.copy())
        if (i + 1) % _ADAPT_BATCH == 0:
            use = np.asarray(history[len(history) // 2:]) if i + 1 >= n_adapt // 2 else None
            proposal.tune(batch_acc / _ADAPT_BATCH, use)
            batch_acc = 0

    n = config.iterations
    keep = np.arange(config.burn_in, n, config.thinning)
    params = np.empty((keep.size, d))
    lps = np.empty(keep.size)
    auxes = [None] * keep.size
    accepted = nonfinite = 0
    k = 0
    z_block = rng.standard_normal((n, d))
    u_block = rng.random(n)
    for i in range(n):
        y = proposal.propose(x, z_block[i])
        lpy = log_target(y)
        if not math.isfinite(lpy):
            nonfinite += 1
        elif lpy >= lp or math.log(u_block[i]) < lpy - lp:
            x, lp = y, lpy
            accepted += 1
        if after_step is not None:
            lp, aux = after_step(x, rng)
        if k < keep.size and i == keep[k]:
            params[k] = x
            lps[k] = lp
            auxes[k] = aux
            k += 1
    return params, lps, keep, accepted / n, nonfinite, auxes


def metropolis(log_target: Callable[[np.ndarray], float], init, config: ChainConfig,
               names: Sequence[str] | None = None, periodic: Sequence[str] = (),
               rng=None) -> Chain:
    """Random-walk Metropolis with per-parameter Gaussian proposals.

    Proposals for ``periodic`` parameters are wrapped to ``[0, 2 pi)``.
    A non-finite log target at a proposal counts as a rejection.
    """
    x0 = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    d = x0.size
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(d))
    if len(names) != d:
        raise ValueError("names and init differ in length")
    lp0 = float(log_target(x0))
    if not math.isfinite(lp0):
        raise ValueError(f"log target is not finite at the initial point ({lp0})")
    scales = config.proposal_scales if config.proposal_scales is not None else _default_scales(x0)
    if len(scales) != d:
        raise ValueError("proposal_scales and init differ in length")
    mask = np.array([n in periodic for n in names])
    proposal = _Proposal(scales, mask)
    rng = np.random.default_rng(config.seed if rng is None else rng)
    params, lps, keep, acc, nonfinite, _ = _metropolis_core(log_target, x0, lp0, config, proposal, rng)
    return Chain(names, params, lps, keep, acc, nonfinite, proposal.scales.copy(), config,
                 periodic=tuple(periodic))


# --- chirp signal models ---------------------------------------------------


def chirp_model(theta, t) -> np.ndarray:
    f, fdot, a, phi = theta
    return a * np.sin(TWO_PI * (f + fdot * t) * t + phi)


@dataclass(frozen=True)
class ChirpPrior:
    """Uniform ``f``, ``a`` and ``phi``; normal ``fdot``."""

    f_range: tuple[float, float] = (1.0, 50.0)
    fdot_mean: float = 0.0
    fdot_sd: float = 5.0
    a_range: tuple[float, float] = (0.0, 10.0)

    def log_density(self, theta) -> float:
        f, fdot, a, phi = theta
        if not (self.f_range[0] <= f <= self.f_range[1] and self.a_range[0] <= a <= self.a_range[1]):
            return -math.inf
        z = (fdot - self.fdot_mean) / self.fdot_sd
        return -0.5 * z * z

    def contains(self, theta) -> bool:
        return math.isfinite(self.log_density(theta))


class _ResidualPower:
    """Per-bin ``a_j^2 + b_j^2`` of ``data - model(theta)``."""

    def __init__(self, data: TimeSeries, model=chirp_model):
        self.y = np.asarray(data.samples)
        self.t = data.times
        self.model = model
        g = data.grid
        self.grid = g
        self.kappas = g.kappas.astype(float)
        self.factor = g.kappas**2 * g.dt / g.n

    def __call__(self, theta) -> np.ndarray:
        r = self.y - self.model(theta, self.t)
        xf = np.fft.rfft(r)
        return self.factor * (xf.real**2 + xf.imag**2)


def _fixed(names, fixed: Mapping[str, float] | None):
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(names)
    if unknown:
        raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
    return fixed


def _initial_point(init, fixed, names):
    x0 = np.asarray(init.as_array() if isinstance(init, ChirpParams) else init, dtype=float).copy()
    for name, value in fixed.items():
        x0[names.index(name)] = value
    return x0


def _initial_scales(config, x0, names, fixed):
    if config.proposal_scales is not None:
        scales = np.array(config.proposal_scales, dtype=float)
    else:
        scales = np.array([0.05, 0.1, 0.05, 0.05])
    for name in fixed:
        scales[names.index(name)] = 0.0
    return scales


def find_start(data: TimeSeries, log_target: Callable, prior: ChirpPrior,
               f_step: float = 0.25, fdot_step: float = 0.5, fdot_span: float = 3.0) -> np.ndarray:
    """Grid search for a chirp starting point.

    For each ``(f, fdot)`` on a grid over the prior (``fdot`` within
    ``fdot_span`` prior sds), amplitude and phase come from ordinary least
    squares on the sine/cosine basis; the candidate maximizing
    ``log_target`` is returned.
    """
    t = data.times
    y = np.asarray(data.samples)
    fs = np.arange(prior.f_range[0], prior.f_range[1] + 1e-12, f_step)
    half = fdot_span * prior.fdot_sd
    fdots = np.arange(prior.fdot_mean - half, prior.fdot_mean + half + 1e-12, fdot_step)
    best, best_lp = None, -math.inf
    for fdot in fdots:
        theta = TWO_PI * (fs[:, None] + fdot * t[None, :]) * t[None, :]
        s, c = np.sin(theta), np.cos(theta)
        ss, cc, sc = (s * s).sum(1), (c * c).sum(1), (s * c).sum(1)
        sy, cy = s @ y, c @ y
        det = ss * cc - sc**2
        with np.errstate(divide="ignore", invalid="ignore"):
            coef_s = (cc * sy - sc * cy) / det
            coef_c = (ss * cy - sc * sy) / det
        amp = np.clip(np.hypot(coef_s, coef_c), prior.a_range[0], prior.a_range[1])
        phase = np.arctan2(coef_c, coef_s) % TWO_PI
        for i, f in enumerate(fs):
            if not np.isfinite(det[i]) or det[i] <= 0:
                continue
            cand = np.array([f, fdot, amp[i], phase[i]])
            lp = log_target(cand)
            if lp > best_lp:
                best, best_lp = cand, lp
    if best is None:
        raise RuntimeError("grid search found no admissible starting point")
    return best


def _resolve_init(init, data, target, prior):
    if init is None:
        return find_start(data, target, prior)
    return init


def marginal_signal_sampler(data: TimeSeries, prior: SpectrumPrior, config: ChainConfig,
                            signal_prior: ChirpPrior = ChirpPrior(), init=None,
                            fixed: Mapping[str, float] | None = None,
                            noise_draws: bool = False) -> Chain:
    """Chirp parameters under the spectrum-marginalized Student-t likelihood.

    With ``noise_draws`` every retained sample is augmented with a spectrum
    draw from its conditional posterior given the implied residuals.
    """
    if data.grid != prior.grid:
        raise ValueError("data and prior are on different Fourier grids")
    if not prior.proper:
        raise ValueError("the marginal sampler needs a proper spectrum prior")
    power = _ResidualPower(data)
    half = (prior.nu + power.kappas) / 2
    inv_nus2 = 1.0 / (prior.nu * prior.s2)

    def target(theta):
        lpp = signal_prior.log_density(theta)
        if lpp == -math.inf:
            return lpp
        return lpp - float(np.dot(half, np.log1p(power(theta) * inv_nus2)))

    fixed = _fixed(CHIRP_NAMES, fixed)
    x0 = _initial_point(_resolve_init(init, data, target, signal_prior), fixed, CHIRP_NAMES)
    seeds = np.random.SeedSequence(config.seed).spawn(2)
    chain = _signal_chain(target, x0, config, fixed, np.random.default_rng(seeds[0]))
    if noise_draws:
        rng = np.random.default_rng(seeds[1])
        post_nu = prior.nu + power.kappas
        draws = np.empty((len(chain), prior.grid.nbins))
        for i, theta in enumerate(chain.params):
            s2 = (prior.nu * prior.s2 + power(theta)) / post_nu
            draws[i] = post_nu * s2 / rng.chisquare(post_nu)
        chain.noise, chain.noise_grid = draws, prior.grid
    return chain


def fixed_spectrum_sampler(data: TimeSeries, spectrum: SpectrumDraw, config: ChainConfig,
                           signal_prior: ChirpPrior = ChirpPrior(), init=None,
                           fixed: Mapping[str, float] | None = None) -> Chain:
    """Chirp parameters under the known-spectrum normal likelihood."""
    if data.grid != spectrum.grid:
        raise ValueError("data and spectrum are on different Fourier grids")
    power = _ResidualPower(data)
    inv2 = 0.5 / spectrum.sigma2

    def target(theta):
        lpp = signal_prior.log_density(theta)
        if lpp == -math.inf:
            return lpp
        return lpp - float(np.dot(inv2, power(theta)))

    fixed = _fixed(CHIRP_NAMES, fixed)
    x0 = _initial_point(_resolve_init(init, data, target, signal_prior), fixed, CHIRP_NAMES)
    return _signal_chain(target, x0, config, fixed, np.random.default_rng(config.seed))


def _signal_chain(target, x0, config, fixed, rng, after_step=None) -> Chain:
    lp0 = target(x0)
    if not math.isfinite(lp0):
        raise ValueError(f"log target is not finite at the initial point {x0}")
    proposal = _Proposal(_initial_scales(config, x0, CHIRP_NAMES, fixed),
                         [n == "phi" for n in CHIRP_NAMES])
    params, lps, keep, acc, nonfinite, auxes = _metropolis_core(
        target, x0, lp0, config, proposal, rng, after_step)
    chain = Chain(CHIRP_NAMES, params, lps, keep, acc, nonfinite, proposal.scales.copy(), config,
                  periodic=("phi",))
    if after_step is not None:
        chain.noise = np.asarray(auxes, dtype=float).reshape(-1, 1)
    return chain


def gibbs_white_noise(data: TimeSeries, noise_prior: InvChiSqParams, config: ChainConfig,
                      signal_prior: ChirpPrior = ChirpPrior(), init=None,
                      fixed: Mapping[str, float] | None = None) -> Chain:
    """Signal parameters and one common bin variance ``sigma^2`` (white noise).

    Alternates a Metropolis step on the signal given ``sigma^2`` with an exact
    draw ``sigma^2 ~ Inv-chi^2(nu + N, (nu s2 + sum_j (a_j^2 + b_j^2)) / (nu + N))``.
    The retained ``sigma^2`` values are stored in ``chain.noise[:, 0]``.
    """
    noise_prior._require_proper("the white-noise Gibbs sampler")
    grid = data.grid
    power = _ResidualPower(data)
    n = grid.n
    nu_post = noise_prior.nu + n
    nus2 = noise_prior.nu * noise_prior.s2
    state = {"sigma2": None}

    def target(theta):
        lpp = signal_prior.log_density(theta)
        if lpp == -math.inf:
            return lpp
        return lpp - 0.5 * float(np.sum(power(theta))) / state["sigma2"]

    def gibbs_step(theta, rng):
        ss = nus2 + float(np.sum(power(theta)))
        state["sigma2"] = ss / rng.chisquare(nu_post)
        return target(theta), state["sigma2"]

    fixed = _fixed(CHIRP_NAMES, fixed)
    if init is None:
        # grid search at the prior scale of sigma^2
        state["sigma2"] = noise_prior.s2
        init = find_start(data, target, signal_prior)
    x0 = _initial_point(init, fixed, CHIRP_NAMES)
    rng = np.random.default_rng(config.seed)
    state["sigma2"] = (nus2 + float(np.sum(power(x0)))) / nu_post
    chain = _signal_chain(target, x0, config, fixed, rng, after_step=gibbs_step)
    chain.noise_grid = grid
    return chain


# --- Monte Carlo autocovariance ------------------------------------------


DEFAULT_LEVELS = (0.025, 0.25, 0.5, 0.75, 0.975)


@dataclass(frozen=True)
class AutocovarianceSummary:
    lags: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    levels: tuple[float, ...]
    quantiles: np.ndarray  # (len(levels), n_lags)
    draws: int
    integrated_power: np.ndarray = field(repr=False, default=None)

    @property
    def sd(self) -> np.ndarray:
        return np.sqrt(self.var)

    @property
    def standard_error(self) -> np.ndarray:
        return np.sqrt(self.var / self.draws)


def monte_carlo_autocovariance(posterior: SpectrumPrior, draws: int, rng,
                               levels: Sequence[float] = DEFAULT_LEVELS,
                               keep_draws: bool = False) -> AutocovarianceSummary:
    """Empirical per-lag distribution of ``gamma`` under spectrum draws."""
    if draws <= 0:
        raise ValueError("need a positive number of draws")
    if not posterior.proper:
        raise ValueError("cannot sample autocovariances from an improper spectrum posterior")
    grid = posterior.grid
    rng = np.random.default_rng(rng)
    sigma2 = sample_spectrum(posterior, rng, size=draws)
    gamma = autocovariance_from_sigma2(sigma2, grid)
    # full-band integrated power, identical to the lag-0 autocovariance
    power = grid.df * sigma2 @ (grid.kappas / 2)
    return AutocovarianceSummary(
        lags=np.arange(grid.n) * grid.dt,
        mean=gamma.mean(axis=0),
        var=gamma.var(axis=0, ddof=1) if draws > 1 else np.zeros(grid.n),
        levels=tuple(levels),
        quantiles=np.quantile(gamma, levels, axis=0),
        draws=draws,
        integrated_power=power if keep_draws else None,
    )
