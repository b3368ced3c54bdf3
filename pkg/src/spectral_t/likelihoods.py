"""Fourier-domain likelihoods: normal (Whittle), known spectrum, Student-t marginal, Jeffreys marginal.

Every result is a :class:`LogLikelihood` carrying a ``normalized`` flag.
Normalized values include all constants; proportional values drop terms that
do not depend on the data-model parameters being varied.  Values with
different flags refuse to be added or compared.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fourier_core import FourierCoefficients
from .spectrum_model import SpectrumDraw, SpectrumPrior

__all__ = [
    "LogLikelihood",
    "log_normal_likelihood",
    "log_known_spectrum_likelihood",
    "log_studentt_marginal",
    "log_jeffreys_marginal",
    "log_mixed_marginal",
    "studentt_terms",
]

_LOG_2PI = math.log(2 * math.pi)


@functools.total_ordering
@dataclass(frozen=True)
class LogLikelihood:
    value: float
    normalized: bool

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v) or v == math.inf:
            raise ValueError(f"invalid log-likelihood {v}")
        object.__setattr__(self, "value", v)

    def _check(self, other):
        if not isinstance(other, LogLikelihood):
            return NotImplemented
        if other.normalized != self.normalized:
            raise TypeError("cannot combine normalized and proportional log-likelihoods")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return LogLikelihood(self.value + other.value, self.normalized)

    def __sub__(self, other) -> float:
        """Log ratio; only meaningful between values of the same kind."""
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self.value - other.value

    def __lt__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self.value < other.value

    def __eq__(self, other):
        if not isinstance(other, LogLikelihood):
            return NotImplemented
        return self.normalized == other.normalized and self.value == other.value

    def __hash__(self):
        return hash((self.value, self.normalized))

    def __float__(self):
        return self.value


def _check_grids(fc: FourierCoefficients, grid):
    if fc.grid != grid:
        raise ValueError("data and spectrum are on different Fourier grids")


def _sigma2(draw: SpectrumDraw) -> np.ndarray:
    s = draw.sigma2
    if np.any(s <= 0):
        raise ValueError("spectrum variances must be positive")
    return s


def log_normal_likelihood(fc: FourierCoefficients, draw: SpectrumDraw, normalized: bool = True) -> LogLikelihood:
    """``-N/2 log 2pi - sum_j [kappa_j log sigma_j + (a_j^2 + b_j^2) / (2 sigma_j^2)]``.

    The proportional form drops only the ``-N/2 log 2pi`` constant.
    """
    _check_grids(fc, draw.grid)
    s2 = _sigma2(draw)
    k = fc.kappas
    value = -np.sum(k * 0.5 * np.log(s2) + fc.power / (2 * s2))
    if normalized:
        value -= fc.grid.n / 2 * _LOG_2PI
    return LogLikelihood(value, normalized)


def log_known_spectrum_likelihood(fc: FourierCoefficients, draw: SpectrumDraw) -> LogLikelihood:
    """``-sum_j (a_j^2 + b_j^2) / (2 sigma_j^2)``; always proportional."""
    _check_grids(fc, draw.grid)
    return LogLikelihood(-np.sum(fc.power / (2 * _sigma2(draw))), False)


def studentt_terms(power: np.ndarray, nu: np.ndarray, s2: np.ndarray, kappas: np.ndarray,
                   normalized: bool = False) -> np.ndarray:
    """Per-bin log marginal terms for proper bins.

    Proportional: ``-(nu + kappa)/2 * log1p(power / (nu s2))``.  Normalized adds
    ``-kappa/2 log(pi nu s2) + lgamma((nu+kappa)/2) - lgamma(nu/2)``, which is
    the log of ``(2pi)^(-kappa/2) (nu s2/2)^(nu/2) Gamma((nu+kappa)/2) /
    ((nu s2 + power)/2)^((nu+kappa)/2) / Gamma(nu/2)`` rearranged.
    """
    half = (nu + kappas) / 2
    out = -half * np.log1p(power / (nu * s2))
    if normalized:
        out = out - kappas / 2 * (np.log(np.pi * nu * s2)) + gammaln(half) - gammaln(nu / 2)
    return out


def log_studentt_marginal(fc: FourierCoefficients, prior: SpectrumPrior, normalized: bool = False) -> LogLikelihood:
    """Spectrum-marginalized likelihood under independent ``Inv-chi^2`` bin priors."""
    _check_grids(fc, prior.grid)
    if not prior.proper:
        j = int(np.flatnonzero(prior.improper)[0])
        raise ValueError(f"bin {j} has an improper prior; use log_mixed_marginal")
    terms = studentt_terms(fc.power, prior.nu, prior.s2, fc.kappas, normalized)
    return LogLikelihood(np.sum(terms), normalized)


def _jeffreys_terms(power: np.ndarray, kappas: np.ndarray) -> np.ndarray:
    zero = np.flatnonzero(power == 0)
    if zero.size:
        raise ZeroDivisionError(f"zero power at bin {int(zero[0])}: Jeffreys marginal is singular")
    return -kappas / 2 * np.log(power)


def log_jeffreys_marginal(fc: FourierCoefficients) -> LogLikelihood:
    """``-sum_j (kappa_j/2) log(a_j^2 + b_j^2)`` up to a constant.

    A bin with zero power gives ``-inf``.
    """
    try:
        terms = _jeffreys_terms(fc.power, fc.kappas)
    except ZeroDivisionError:
        return LogLikelihood(-math.inf, False)
    return LogLikelihood(np.sum(terms), False)


def log_mixed_marginal(fc: FourierCoefficients, prior: SpectrumPrior, normalized: bool = False) -> LogLikelihood:
    """Student-t terms for proper bins plus Jeffreys terms for ``nu_j = 0`` bins.

    Any Jeffreys bin makes the result improper, so it is then always
    proportional regardless of ``normalized``.
    """
    _check_grids(fc, prior.grid)
    nu = prior.nu
    if np.any(nu < 0):
        j = int(np.flatnonzero(nu < 0)[0])
        raise ValueError(f"bin {j}: no marginal likelihood for improper prior with nu={nu[j]} < 0")
    jeff = nu == 0
    proper = ~jeff
    if np.any(jeff):
        normalized = False
    total = 0.0
    if np.any(proper):
        total += np.sum(studentt_terms(fc.power[proper], nu[proper], prior.s2[proper],
                                       fc.kappas[proper], normalized))
    if np.any(jeff):
        try:
            total += np.sum(_jeffreys_terms(fc.power[jeff], fc.kappas[jeff]))
        except ZeroDivisionError:
            return LogLikelihood(-math.inf, False)
    return LogLikelihood(total, normalized)
