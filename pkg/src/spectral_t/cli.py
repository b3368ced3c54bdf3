"""Command line front end.

Subcommands: ``simulate-noise``, ``elicit``, ``noise-posterior``, ``mcmc`` and
``autocov``.  Exit status is 0 on success, 2 on usage errors and 1 on runtime
errors; diagnostics go to standard error only.

Presets ``paper-3.1`` (AR(1) noise, white prior with nu = 3 and expected
variance 2.5) and ``paper-3.2`` (the same noise plus a chirp at SNR 15) fill
in any flag that is not given explicitly.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from . import io as fio
from .fourier_core import FourierGrid, TimeSeries, to_coefficients
from .inference import (
    CHIRP_NAMES,
    ChainConfig,
    ChirpPrior,
    DEFAULT_LEVELS,
    fixed_spectrum_sampler,
    gibbs_white_noise,
    marginal_signal_sampler,
    monte_carlo_autocovariance,
)
from .signal_noise import (
    Ar1Config,
    ChirpParams,
    ar1_true_spectrum,
    chirp,
    generate_ar1,
    scale_to_snr,
)
from .spectrum_model import (
    Band,
    InvChiSqParams,
    SpectrumPrior,
    WhitePriorTarget,
    elicit_band_prior,
    elicit_white_prior,
    inv_chisq_log_density,
    posterior_update,
    white_prior_from_nu,
)

# true chirp for the signal example; the SNR fixes the amplitude
REFERENCE_CHIRP = {"f": 20.0, "fdot": 5.0, "phi": 2.0}

_NOISE = {"n": 100, "dt": 0.01, "ar_coeff": 0.75, "half_width": math.sqrt(3.0)}
PRESETS = {
    "paper-3.1": {**_NOISE, "white": True, "target_var": 2.5, "nu": 3.0},
    "paper-3.2": {
        **_NOISE,
        "white": True,
        "target_var": 2.5,
        "nu": 3.0,
        "chirp": [REFERENCE_CHIRP["f"], REFERENCE_CHIRP["fdot"], REFERENCE_CHIRP["phi"]],
        "snr": 15.0,
        "iters": 100_000,
        "model": "chirp",
        "noise_mode": "marginal-t",
    },
}

DEFAULTS = {
    "n": 100,
    "dt": 0.01,
    "ar_coeff": 0.75,
    "half_width": math.sqrt(3.0),
    "iters": 100_000,
    "burn_in": 0,
    "thin": 10,
    "adapt": 5_000,
    "model": "chirp",
    "noise_mode": "marginal-t",
    "grid_points": 200,
}


class UsageError(Exception):
    pass


def _apply_defaults(args: argparse.Namespace, keys: Sequence[str]) -> None:
    preset = PRESETS.get(getattr(args, "preset", None) or "", {})
    for key in keys:
        if getattr(args, key, None) is None:
            if key in preset:
                setattr(args, key, preset[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])


def _config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "argv")}


def _finish(args, outputs, seed=None):
    argv = ["spectral-t", *sys.argv[1:]] if args.argv is None else args.argv
    fio.write_manifest(outputs, argv, _config(args), seed)


# --- simulate-noise -------------------------------------------------------


def cmd_simulate_noise(args) -> int:
    _apply_defaults(args, ["n", "dt", "ar_coeff", "half_width", "chirp", "snr"])
    config = Ar1Config(args.ar_coeff, args.half_width, args.n, args.dt)
    noise = generate_ar1(config, args.seed)
    samples = noise.samples
    true_spectrum = ar1_true_spectrum(config)
    if args.chirp is not None:
        f, fdot, phi = args.chirp
        params = ChirpParams(f, fdot, 1.0 if args.amplitude is None else args.amplitude, phi)
        if args.amplitude is None:
            params = scale_to_snr(params, true_spectrum, 15.0 if args.snr is None else args.snr)
        samples = samples + chirp(params, noise.times)
        args.injected = {"f": params.f, "fdot": params.fdot, "a": params.a, "phi": params.phi}
    ts = TimeSeries(samples, config.dt)
    fio.write_output(args.out, fio.series_csv(ts))
    outputs = [args.out]
    if args.spectrum_out:
        fio.atomic_write_text(args.spectrum_out, fio.spectrum_csv(true_spectrum))
        outputs.append(args.spectrum_out)
    _finish(args, outputs, args.seed)
    return 0


# --- elicit ---------------------------------------------------------------


def cmd_elicit(args) -> int:
    # a preset only supplies the white-prior settings the user did not override
    keys = ["n", "dt"]
    if not (args.jeffreys or args.bands):
        keys += ["white", "target_var"] + ([] if args.cv is not None else ["nu"])
    _apply_defaults(args, keys)
    grid = FourierGrid(args.n, args.dt)
    modes = sum(bool(x) for x in (args.white, args.jeffreys, args.bands))
    if modes != 1:
        raise UsageError("choose exactly one of --white, --jeffreys, --bands")
    if args.white:
        if args.target_var is None:
            raise UsageError("--white needs --target-var")
        if (args.nu is None) == (args.cv is None):
            raise UsageError("--white needs exactly one of --nu and --cv")
        if args.nu is not None:
            prior = white_prior_from_nu(args.target_var, args.nu, grid)
        else:
            prior = elicit_white_prior(WhitePriorTarget(args.target_var, args.cv), grid)
    else:
        if any(v is not None for v in (args.target_var, args.nu, args.cv)):
            raise UsageError("--target-var/--nu/--cv only apply to --white")
        if args.jeffreys:
            prior = SpectrumPrior.jeffreys(grid)
        else:
            header, rows = fio.read_csv(args.bands)
            if header != ["f1", "f2", "mean", "var"]:
                raise ValueError(f"{args.bands}: expected header 'f1,f2,mean,var'")
            prior = elicit_band_prior([Band(*r) for r in rows], grid)
    fio.write_output(args.out, fio.json_text(_prior_report(prior)))
    _finish(args, [args.out])
    return 0


def _prior_report(prior: SpectrumPrior, **extra) -> dict:
    d = fio.prior_dict(prior, **extra)
    for b in d["bins"]:
        nu, s2 = b["nu"], b["s2"]
        b["mean_exists"] = nu > 2
        b["mean"] = nu * s2 / (nu - 2) if nu > 2 else None
    return d


# --- noise-posterior ------------------------------------------------------


def cmd_noise_posterior(args) -> int:
    _apply_defaults(args, ["grid_points"])
    data = fio.read_series(args.input)
    prior = fio.read_prior(args.prior)
    if prior.grid != data.grid:
        raise ValueError("prior grid does not match the data (n or dt differ)")
    post = posterior_update(prior, to_coefficients(data))
    fio.write_output(args.out, fio.json_text(_prior_report(post)))
    outputs = [args.out]
    if args.density_out:
        fio.atomic_write_text(args.density_out, density_grid_csv(post, args.grid_points))
        outputs.append(args.density_out)
    _finish(args, outputs)
    return 0


def density_grid_csv(post: SpectrumPrior, points: int) -> str:
    """Per-bin posterior densities on log-spaced sigma^2 grids between the 0.5% and 99.5% quantiles."""
    lo = post.quantiles(0.005)
    hi = post.quantiles(0.995)
    rows = []
    for j in range(post.grid.nbins):
        x = np.geomspace(lo[j], hi[j], points)
        logd = inv_chisq_log_density(post[j], x)
        for xi, di in zip(x, np.exp(logd)):
            rows.append((j, post.grid.frequencies[j], xi, di))
    return fio.csv_text(["j", "frequency", "sigma2", "density"], rows)


# --- mcmc -----------------------------------------------------------------


def cmd_mcmc(args) -> int:
    _apply_defaults(args, ["iters", "burn_in", "thin", "adapt", "model", "noise_mode"])
    if args.model != "chirp":
        raise UsageError(f"unknown model {args.model!r}")
    if args.noise_mode == "fixed-spectrum" and not args.spectrum:
        raise UsageError("--noise-mode fixed-spectrum needs --spectrum FILE")
    if args.noise_mode != "fixed-spectrum" and args.spectrum:
        raise UsageError("--spectrum only applies to --noise-mode fixed-spectrum")
    data = fio.read_series(args.input)
    config = ChainConfig(iterations=args.iters, burn_in=args.burn_in, thinning=args.thin,
                         seed=args.seed, adapt_iterations=args.adapt)
    signal_prior = ChirpPrior(f_range=(args.f_min, args.f_max), fdot_sd=args.fdot_sd,
                              a_range=(0.0, args.a_max))
    init = None if args.init is None else ChirpParams(*args.init).as_array()
    if args.noise_mode == "marginal-t":
        prior = fio.read_prior(args.prior)
        chain = marginal_signal_sampler(data, prior, config, signal_prior, init=init,
                                        noise_draws=args.noise_draws)
        noise_cols = [f"sigma2_{j}" for j in range(prior.grid.nbins)] if args.noise_draws else []
    elif args.noise_mode == "fixed-spectrum":
        spectrum = fio.read_spectrum(args.spectrum, data.grid)
        chain = fixed_spectrum_sampler(data, spectrum, config, signal_prior, init=init)
        noise_cols = []
    elif args.noise_mode == "white-unknown":
        chain = gibbs_white_noise(data, _white_params(args), config, signal_prior, init=init)
        noise_cols = ["sigma2"]
    else:
        raise UsageError(f"unknown noise mode {args.noise_mode!r}")

    header = ["iter", *CHIRP_NAMES, "log_target", *noise_cols]
    noise = chain.noise if noise_cols else np.empty((len(chain), 0))
    rows = (
        [int(it), *p, lp, *nz]
        for it, p, lp, nz in zip(chain.iteration, chain.params, chain.log_target, noise)
    )
    fio.write_output(args.out, fio.csv_text(header, rows))
    summary = {
        "model": args.model,
        "noise_mode": args.noise_mode,
        "level": 0.95,
        "samples": len(chain),
        "acceptance_rate": chain.acceptance_rate,
        "nonfinite_proposals": chain.n_nonfinite,
        "proposal_scales": dict(zip(CHIRP_NAMES, map(float, chain.proposal_scales))),
        "chain_config": config.as_dict(),
        "parameters": chain.summary(0.95),
    }
    outputs = [args.out]
    if args.summary:
        fio.atomic_write_text(args.summary, fio.json_text(summary))
        outputs.append(args.summary)
    _finish(args, outputs, args.seed)
    return 0


def _white_params(args) -> InvChiSqParams:
    if args.white_nu is not None or args.white_s2 is not None:
        if args.white_nu is None or args.white_s2 is None:
            raise UsageError("give both --white-nu and --white-s2")
        return InvChiSqParams(args.white_nu, args.white_s2)
    if not args.prior:
        raise UsageError("white-unknown needs --prior (constant) or --white-nu/--white-s2")
    prior = fio.read_prior(args.prior)
    if np.ptp(prior.nu) != 0 or np.ptp(prior.s2) != 0:
        raise UsageError("white-unknown needs a constant prior; pass --white-nu/--white-s2")
    return prior[0]


# --- autocov --------------------------------------------------------------


def cmd_autocov(args) -> int:
    if args.draws <= 0:
        raise UsageError("--draws must be positive")
    post = fio.read_prior(args.posterior)
    if not post.proper:
        bad = np.flatnonzero(post.improper)
        raise ValueError(
            f"posterior is improper at bins {bad.tolist()}; autocovariance draws need nu > 0 everywhere"
        )
    summary = monte_carlo_autocovariance(post, args.draws, args.seed, keep_draws=True)
    qcols = [f"q{lvl:g}" for lvl in summary.levels]
    rows = (
        [lag, m, sd, *q]
        for lag, m, sd, q in zip(summary.lags, summary.mean, summary.sd, summary.quantiles.T)
    )
    fio.write_output(args.out, fio.csv_text(["lag", "mean", "sd", *qcols], rows))
    outputs = [args.out]
    if args.variance_out:
        p = summary.integrated_power
        report = {
            "draws": args.draws,
            "mean": float(p.mean()),
            "sd": float(p.std(ddof=1)) if p.size > 1 else 0.0,
            "quantiles": {f"{lvl:g}": float(q) for lvl, q in zip(summary.levels, np.quantile(p, summary.levels))},
        }
        fio.atomic_write_text(args.variance_out, fio.json_text(report))
        outputs.append(args.variance_out)
    _finish(args, outputs, args.seed)
    return 0


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectral-t", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_grid(sp):
        sp.add_argument("--n", type=int, help="sample count (default 100)")
        sp.add_argument("--dt", type=float, help="sampling interval in seconds (default 0.01)")

    def add_preset(sp):
        sp.add_argument("--preset", choices=sorted(PRESETS))

    sp = sub.add_parser("simulate-noise", help="simulate AR(1) noise, optionally with a chirp")
    add_preset(sp)
    add_grid(sp)
    sp.add_argument("--ar-coeff", type=float)
    sp.add_argument("--half-width", type=float, help="innovation half width (default sqrt(3))")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--chirp", type=float, nargs=3, metavar=("F", "FDOT", "PHI"),
                    help="inject a chirp with these parameters")
    sp.add_argument("--snr", type=float, help="scale the chirp amplitude to this SNR (default 15)")
    sp.add_argument("--amplitude", type=float, help="explicit chirp amplitude instead of --snr")
    sp.add_argument("--spectrum-out", help="also write the true noise spectrum (j,frequency,sigma2)")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_simulate_noise)

    sp = sub.add_parser("elicit", help="build a spectrum prior")
    add_preset(sp)
    add_grid(sp)
    sp.add_argument("--white", action="store_true", default=None)
    sp.add_argument("--jeffreys", action="store_true")
    sp.add_argument("--bands", help="CSV with columns f1,f2,mean,var")
    sp.add_argument("--target-var", type=float, help="prior expected variance of the series")
    sp.add_argument("--nu", type=float, help="degrees of freedom per bin")
    sp.add_argument("--cv", type=float, help="variation coefficient of the total power")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_elicit)

    sp = sub.add_parser("noise-posterior", help="conjugate spectrum posterior for noise-only data")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--prior", required=True)
    sp.add_argument("--out", default="-")
    sp.add_argument("--density-out", help="CSV of per-bin posterior densities for plotting")
    sp.add_argument("--grid-points", type=int)
    sp.set_defaults(func=cmd_noise_posterior)

    sp = sub.add_parser("mcmc", help="sample chirp parameters under one of three noise models")
    add_preset(sp)
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--prior", help="spectrum prior JSON (marginal-t, white-unknown)")
    sp.add_argument("--model", choices=["chirp"])
    sp.add_argument("--noise-mode", choices=["marginal-t", "fixed-spectrum", "white-unknown"])
    sp.add_argument("--spectrum", help="known spectrum CSV for fixed-spectrum mode")
    sp.add_argument("--white-nu", type=float)
    sp.add_argument("--white-s2", type=float)
    sp.add_argument("--iters", type=int)
    sp.add_argument("--burn-in", type=int)
    sp.add_argument("--thin", type=int)
    sp.add_argument("--adapt", type=int, help="adaptive pre-phase length")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--init", type=float, nargs=4, metavar=("F", "FDOT", "A", "PHI"))
    sp.add_argument("--noise-draws", action="store_true",
                    help="augment marginal-t samples with spectrum draws")
    sp.add_argument("--f-min", type=float, default=1.0)
    sp.add_argument("--f-max", type=float, default=50.0)
    sp.add_argument("--a-max", type=float, default=10.0)
    sp.add_argument("--fdot-sd", type=float, default=5.0)
    sp.add_argument("--out", required=True, help="chain CSV")
    sp.add_argument("--summary", help="summary JSON")
    sp.set_defaults(func=cmd_mcmc)

    sp = sub.add_parser("autocov", help="Monte Carlo autocovariance posterior")
    sp.add_argument("--posterior", required=True)
    sp.add_argument("--draws", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", default="-")
    sp.add_argument("--variance-out", help="JSON summary of the variance (lag 0 / total power)")
    sp.set_defaults(func=cmd_autocov)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = None if argv is None else ["spectral-t", *argv]
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spectral-t {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"spectral-t {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
