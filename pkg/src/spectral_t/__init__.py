"""Bayesian spectral inference with a conjugate inverse-chi-squared spectrum prior."""

__version__ = "0.1.0"
