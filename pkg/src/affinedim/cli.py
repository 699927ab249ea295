"""Command-line interface.

Verbs: analyze, lyapunov, furstenberg, dimension, ssc, iterate, example.
Systems are given either as a JSON file path or as builtin:NAME (with the
builtin parameter flags).  Every verb prints a deterministic JSON record to
stdout; verbs with file artifacts (reports, clouds, figures) write them
under --out-dir.  Exit status is 0 whenever the analysis completes,
whatever the verdicts; nonzero only on errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import report as report_mod
from .furstenberg import correlation_dimension, sample_chain, stationarity_test
from .lyapunov import analyze_spectrum
from .rng import SEED_ENV_VAR, resolve_seed
from .selfaffine import measure_dimension_estimate, sample_measure, ssc_certify
from .verifier import (VerifyOptions, builtin, dump_spec, iterate_spec, load_spec,
                       spec_record, verify)

DEFAULT_ANALYZE_DIR = "affinedim_out"


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help=f"master seed (default: ${SEED_ENV_VAR} or 0)")
    p.add_argument("--samples", type=int, default=None,
                   help="sample count for the verb's main estimator")
    p.add_argument("--burnin", type=int, default=None,
                   help="direction-chain burn-in steps")
    p.add_argument("--depth", type=int, default=None,
                   help="word depth (sampling) or maximum depth (separation)")
    p.add_argument("--tol", type=float, default=None,
                   help="tolerance override (exponent clustering)")
    p.add_argument("--out-dir", default=None, help="directory for file artifacts")
    p.add_argument("--threads", type=int, default=1,
                   help="worker bound; results never depend on it")


def _builtin_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scale", type=float, default=None,
                   help="scalar applied to builtin matrices (spatial use)")
    p.add_argument("--spread", type=float, default=1.0,
                   help="translation spread for scaled builtins")
    p.add_argument("--e", type=float, default=None, help="builtin e24: parameter E")
    p.add_argument("--l", type=float, default=None, help="builtin e24: parameter L")
    p.add_argument("--ns", default=None,
                   help="builtin cf: comma-separated positive integers")


def _resolve_spec(src: str, args):
    if src.startswith("builtin:"):
        return _make_builtin(src.split(":", 1)[1], args)
    return load_spec(src)


def _make_builtin(name: str, args):
    kwargs = {}
    if getattr(args, "scale", None) is not None:
        kwargs["scale"] = args.scale
    if getattr(args, "spread", None) not in (None, 1.0):
        kwargs["spread"] = args.spread
    if getattr(args, "e", None) is not None:
        kwargs["E"] = args.e
    if getattr(args, "l", None) is not None:
        kwargs["L"] = args.l
    if getattr(args, "ns", None):
        kwargs["ns"] = tuple(int(x) for x in str(args.ns).split(","))
    return builtin(name, **kwargs)


def _check_threads(args) -> None:
    if args.threads < 1:
        raise ValueError("--threads must be a positive integer")


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(report_mod._clean(record), indent=2,
                                allow_nan=False) + "\n")


def _cmd_analyze(args) -> int:
    spec = _resolve_spec(args.spec, args)
    opt_kwargs = {"seed": args.seed}
    if args.samples is not None:
        opt_kwargs["n_chain"] = args.samples
        opt_kwargs["n_measure"] = args.samples
    if args.burnin is not None:
        opt_kwargs["burn_in"] = args.burnin
    if args.depth is not None:
        opt_kwargs["ssc_max_depth"] = args.depth
    if args.tol is not None:
        opt_kwargs["tol_cluster"] = args.tol
    vr = verify(spec, VerifyOptions(**opt_kwargs))
    out_dir = args.out_dir or DEFAULT_ANALYZE_DIR
    paths = report_mod.write_report(vr, out_dir, figures=not args.no_figures)
    sys.stdout.write(report_mod.summary_text(vr))
    sys.stdout.write("artifacts:\n")
    for key, path in paths.items():
        sys.stdout.write(f"  {key}: {path}\n")
    return 0


def _cmd_lyapunov(args) -> int:
    spec = _resolve_spec(args.spec, args)
    seed = resolve_seed(args.seed)
    rep = analyze_spectrum(spec, args.samples or 50_000, seed,
                           tol_cluster=args.tol)
    _emit(rep.to_record())
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, "lyapunov.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(report_mod._clean(rep.to_record()), fh, indent=2)
            fh.write("\n")
    return 0


def _cmd_furstenberg(args) -> int:
    spec = _resolve_spec(args.spec, args)
    seed = resolve_seed(args.seed)
    if args.m is not None:
        m = args.m
    else:
        m = analyze_spectrum(spec, 20_000, seed).m
        if m >= spec.d:
            raise ValueError("spectrum is conformal at tolerance (m = d); "
                             "pass --m to force a direction-chain dimension")
    cloud = sample_chain(spec, m, burn_in=args.burnin or 1_000,
                         n=args.samples or 10_000, seed=seed)
    stat = stationarity_test(cloud, spec, seed=seed)
    record = {"m": m, "n": len(cloud), "stationarity": stat.to_record(),
              "correlation_dimension": None, "diagnostics": None}
    diag = None
    if len(cloud) >= 1_000:
        est, diag = correlation_dimension(cloud)
        record["correlation_dimension"] = est
        record["diagnostics"] = diag.to_record()
    _emit(record)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        cloud.save_csv(os.path.join(args.out_dir, "furstenberg_cloud.csv"))
        from . import figures as figmod
        if diag is not None:
            figmod.fig_corr_fit(diag, os.path.join(args.out_dir, "furstenberg_corr.png"),
                                "direction-measure correlation fit")
        figmod.fig_direction_cloud(cloud, os.path.join(args.out_dir, "direction_cloud.png"))
    return 0


def _cmd_dimension(args) -> int:
    spec = _resolve_spec(args.spec, args)
    seed = resolve_seed(args.seed)
    cloud = sample_measure(spec, args.samples or 20_000, depth=args.depth, seed=seed)
    est, diag = measure_dimension_estimate(cloud)
    record = {"n": len(cloud), "depth": cloud.depth,
              "correlation_dimension": est, "diagnostics": diag.to_record()}
    _emit(record)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        cloud.save_csv(os.path.join(args.out_dir, "measure_cloud.csv"))
        from . import figures as figmod
        figmod.fig_corr_fit(diag, os.path.join(args.out_dir, "measure_corr.png"),
                            "measure correlation fit")
        figmod.fig_measure_cloud(cloud, os.path.join(args.out_dir, "attractor.png"))
    return 0


def _cmd_ssc(args) -> int:
    spec = _resolve_spec(args.spec, args)
    res = ssc_certify(spec, max_depth=args.depth or 6)
    from .selfaffine import det_sum
    _emit({"ssc": res.to_record(), "det_sum": det_sum(spec)})
    return 0


def _cmd_iterate(args) -> int:
    spec = _resolve_spec(args.spec, args)
    spec2 = iterate_spec(spec, args.n)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, f"{spec2.name or 'iterated'}.json")
        dump_spec(spec2, path)
        sys.stdout.write(path + "\n")
    else:
        _emit(spec_record(spec2))
    return 0


def _cmd_example(args) -> int:
    spec = _make_builtin(args.name, args)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, f"{spec.name or args.name}.json")
        dump_spec(spec, path)
        sys.stdout.write(path + "\n")
    else:
        _emit(spec_record(spec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affinedim",
        description="Self-affine system analysis: Lyapunov spectra, stationary "
                    "direction measures, separation certificates, and the "
                    "projection-dimension criterion.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add(name, func, help_text, spec_arg=True):
        p = sub.add_parser(name, help=help_text)
        if spec_arg:
            p.add_argument("spec", help="spec JSON path or builtin:NAME")
        _common_flags(p)
        _builtin_flags(p)
        p.set_defaults(func=func)
        return p

    p = add("analyze", _cmd_analyze, "full pipeline with report, clouds, figures")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    add("lyapunov", _cmd_lyapunov, "exponent spectrum and dimension quantities")

    p = add("furstenberg", _cmd_furstenberg, "direction chain, stationarity, dimension")
    p.add_argument("--m", type=int, default=None, help="subspace dimension override")

    add("dimension", _cmd_dimension, "measure sampling and dimension estimate")
    add("ssc", _cmd_ssc, "separation certificate")

    p = add("iterate", _cmd_iterate, "compose the system with itself n times")
    p.add_argument("--n", type=int, required=True, help="iteration count")

    p = sub.add_parser("example", help="emit a builtin system as spec JSON")
    p.add_argument("name", help="one of e23, e24, cf, corners, flagship")
    _common_flags(p)
    _builtin_flags(p)
    p.set_defaults(func=_cmd_example)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_threads(args)
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
