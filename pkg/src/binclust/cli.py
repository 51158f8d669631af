"""Command-line interface: ``binclust simulate|select|fit|evaluate|bench``.

Every JSON document written by a subcommand carries the library version and
the configuration that produced it. Worker count and output locations are
left out of that record, so identical runs give byte-identical JSON whatever
``--jobs`` is.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .bench import MODES, BenchConfig, run_bench
from .binning import build_scheme, discretize
from .data import DataError, Dataset, load_csv, read_labels, write_csv, write_labels
from .lcm import DegenerateComponent
from .metrics import ari, sensitivity, specificity
from .postfit import bin_densities, hard_partition, kernel_refine
from .selection import DEFAULT_RESTARTS, BinsConfig, PenaltyRule, fit_k, recompute_criterion, select_full, select_k_only
from .simulate import NOISE_CONVENTION, NOISES, KasaharaDesign, ShiftDesign, generate, tau_for_error

JOBS_ENV = "BINCLUST_JOBS"


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _int_list(text: str) -> list[int]:
    text = text.strip()
    return [int(tok) for tok in text.split(",") if tok.strip()] if text else []


def _dump(doc: dict, path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _envelope(command: str, config: dict, result: dict) -> dict:
    return {"version": __version__, "command": command, "config": config, "result": result}


def _add_bins(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("binning")
    g.add_argument("--bins", type=int, default=None, help="fixed bin count per continuous variable")
    g.add_argument("--bins-rate", type=int, default=6, help="use B = round(n ** (1/rate)) (default 6)")
    g.add_argument("--bins-mode", choices=("quantile", "equal-width"), default="quantile")


def _add_em(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("estimation")
    g.add_argument("--penalty", default="bic", help="bic, aic or c=<float> (default bic)")
    g.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--init", choices=("random", "rows"), default="random")
    g.add_argument("--max-iter", type=int, default=500)
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--jobs", type=int, default=None, help=f"worker processes (default ${JOBS_ENV} or 1)")


def _bins_config(args) -> BinsConfig:
    return BinsConfig(args.bins, args.bins_rate, args.bins_mode)


def _em_kwargs(args) -> dict:
    return {"init": args.init, "max_iter": args.max_iter, "tol": args.tol}


def _jobs(args) -> int:
    return args.jobs if args.jobs is not None else _default_jobs()


def _load(args) -> Dataset:
    return load_csv(args.data, args.kinds)


def _est_config(args) -> dict:
    return {
        "data": str(args.data),
        "kinds": args.kinds,
        "bins": _bins_config(args).to_dict(),
        "penalty": str(PenaltyRule.parse(args.penalty)),
        "restarts": args.restarts,
        "seed": args.seed,
        **_em_kwargs(args),
    }


def cmd_simulate(args) -> int:
    if args.design == "kasahara":
        design = KasaharaDesign(args.n)
    else:
        tau = args.tau if args.tau is not None else tau_for_error(args.noise, args.error, method=args.tau_method)
        design = ShiftDesign(args.n, J=args.J, noise=args.noise, tau=tau)
    dataset, z, omega = generate(design, args.seed)
    write_csv(dataset, args.out)
    if args.truth:
        write_labels(z, args.truth, "component")
    meta = design.describe()
    meta["omega"] = list(omega)
    config = {"design": args.design, "n": args.n, "seed": args.seed}
    if args.design == "shift":
        config.update(J=args.J, noise=args.noise, error=args.error, tau=args.tau, tau_method=args.tau_method)
    _dump(_envelope("simulate", config, meta), args.meta)
    return 0


def cmd_select(args) -> int:
    dataset = _load(args)
    rule = PenaltyRule.parse(args.penalty)
    select = select_k_only if args.fixed_omega else select_full
    res = select(
        dataset,
        args.kmax,
        rule,
        _bins_config(args),
        restarts=args.restarts,
        seed=args.seed,
        jobs=_jobs(args),
        **_em_kwargs(args),
    )
    config = {**_est_config(args), "kmax": args.kmax, "fixed_omega": args.fixed_omega}
    result = res.to_dict()
    result["best"]["omega_names"] = [dataset.names[j] for j in res.best.omega]
    _dump(_envelope("select", config, result), args.out)
    if args.labels:
        write_labels(hard_partition(res.best.posterior), args.labels)
    print(res.summary(), file=sys.stderr)
    return 0


def cmd_fit(args) -> int:
    dataset = _load(args)
    rule = PenaltyRule.parse(args.penalty)
    scheme = build_scheme(dataset, _bins_config(args).resolve(dataset.n), args.bins_mode)
    data = discretize(dataset, scheme)
    omega = _int_list(args.omega) if args.omega is not None else None
    if omega is not None:
        bad = [j for j in omega if not 0 <= j < dataset.J]
        if bad:
            raise DataError(f"--omega indices {bad} outside 0..{dataset.J - 1}")
        if args.k == 1 and omega:
            raise DataError("K = 1 has no relevant variables; pass an empty --omega")
    fit = fit_k(
        data, args.k, rule, restarts=args.restarts, seed=args.seed, fixed_omega=omega, jobs=_jobs(args),
        **_em_kwargs(args),
    )
    if fit is None:
        raise DegenerateComponent(f"every restart degenerated for K={args.k}")
    result = {
        "fit": fit.to_dict(),
        "recomputed_criterion": recompute_criterion(fit, data),
        "scheme": scheme.to_dict(),
        "omega_names": [dataset.names[j] for j in fit.omega],
    }
    posterior = fit.posterior
    if args.refine:
        dens, posterior = kernel_refine(fit, dataset, scheme, grid_size=args.grid, sweeps=args.sweeps)
    else:
        dens = bin_densities(fit, scheme)
    result["densities"] = dens.to_dict(dataset.names)
    config = {
        **_est_config(args),
        "k": args.k,
        "omega": omega,
        "refine": args.refine,
        "grid": args.grid,
        "sweeps": args.sweeps,
    }
    _dump(_envelope("fit", config, result), args.out)
    if args.labels:
        write_labels(hard_partition(posterior), args.labels)
    return 0


def cmd_evaluate(args) -> int:
    a = read_labels(args.partition)
    b = read_labels(args.truth)
    result = {"ari": ari(a, b), "n": int(a.size)}
    if args.omega is not None or args.omega_true is not None:
        if args.omega is None or args.omega_true is None or args.J is None:
            raise DataError("variable scores need --omega, --omega-true and --J")
        est, true = _int_list(args.omega), _int_list(args.omega_true)
        result["sensitivity"] = sensitivity(est, true)
        result["specificity"] = specificity(est, true, args.J)
    config = {"partition": str(args.partition), "truth": str(args.truth), "omega": args.omega,
              "omega_true": args.omega_true, "J": args.J}
    _dump(_envelope("evaluate", config, result), args.out)
    return 0


def cmd_bench(args) -> int:
    config = BenchConfig(
        design=args.design,
        n=args.n,
        J=args.J,
        noise=args.noise,
        error=args.error,
        tau=args.tau,
        mode=args.mode,
        kmax=args.kmax,
        penalty=args.penalty,
        bins=args.bins,
        bins_rate=args.bins_rate,
        bins_mode=args.bins_mode,
        restarts=args.restarts,
        init=args.init,
        seed=args.seed,
    )
    report = run_bench(config, args.replicates, jobs=_jobs(args), cache_dir=args.cache)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(report.format(), file=sys.stderr)
    failed = report.replicates - len(report.ok)
    if failed:
        print(f"{failed} replicate(s) failed; see 'error' fields", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binclust",
        description="Clustering and variable selection for non-parametric mixtures via binned latent class models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset from a simulation design")
    p.add_argument("--design", choices=("shift", "kasahara"), default="shift")
    p.add_argument("--noise", choices=NOISES, default="gaussian", help="; ".join(f"{k}: {v}" for k, v in NOISE_CONVENTION.items()))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--J", type=int, default=20)
    p.add_argument("--error", type=float, default=0.05, help="target Bayes error for the shift size")
    p.add_argument("--tau", type=float, default=None, help="shift size (overrides --error)")
    p.add_argument("--tau-method", choices=("lookup", "numeric"), default="lookup")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="data CSV")
    p.add_argument("--truth", help="true component labels CSV")
    p.add_argument("--meta", default=None, help="design metadata JSON (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="choose K and the relevant variables")
    p.add_argument("data")
    p.add_argument("--kinds", default=None, help="per-column kinds, e.g. c,c,k3 (default: inferred)")
    p.add_argument("--kmax", type=int, default=5)
    p.add_argument("--fixed-omega", action="store_true", help="treat every variable as relevant")
    _add_bins(p)
    _add_em(p)
    p.add_argument("--out", default=None, help="result JSON (default stdout)")
    p.add_argument("--labels", default=None, help="write the MAP partition CSV")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("fit", help="fit one model with a given K")
    p.add_argument("data")
    p.add_argument("--kinds", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--omega", default=None, help="0-based relevant column indices, e.g. 0,1,2 (default: selected)")
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=False,
                   help="kernel refinement of the component densities")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--sweeps", type=int, default=50)
    _add_bins(p)
    _add_em(p)
    p.add_argument("--out", default=None)
    p.add_argument("--labels", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="compare a partition with the truth")
    p.add_argument("--partition", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--omega", default=None, help="selected 0-based variable indices")
    p.add_argument("--omega-true", default=None)
    p.add_argument("--J", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="replicated simulation benchmark")
    p.add_argument("--design", choices=("shift", "kasahara"), default="shift")
    p.add_argument("--noise", choices=NOISES, default="gaussian")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--J", type=int, default=20)
    p.add_argument("--error", type=float, default=0.05)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--replicates", type=int, default=50)
    p.add_argument("--cache", default=None, help="directory for per-replicate results")
    _add_bins(p)
    _add_em(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (DataError, ValueError, DegenerateComponent, OSError) as exc:
        print(f"binclust {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
