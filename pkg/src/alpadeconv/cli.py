"""Command-line interface.

Exit codes: 0 success (including a run that stopped at its iteration cap),
2 bad arguments, 3 numerical failure, 4 I/O failure. Outputs go to ``--out``,
else to $ALPA_OUTPUT_DIR/<command>, else ./alpa_out/<command>.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .alpa import H_INITS, NORMALIZATIONS, SOLVE_PATHS, AlpaConfig, run_alpa
from .convolution import riesz_report
from .costs import PenaltyParams
from .errors import (
    BoundInapplicable,
    DegenerateExcitation,
    InvalidArgument,
    IOFailure,
    NumericalFailure,
)
from .experiments import METHODS, BenchConfig, format_table, run_bench, summarize
from .init_bounds import FORMS, BoundedNoise, BoundInputs, GaussianNoise, monte_carlo_validate
from .io import (
    default_output_dir,
    dump_json,
    load_json,
    read_instance,
    read_manifest,
    read_signal,
    write_csv,
    write_instance,
    write_manifest,
    write_signal,
)
from .metrics import aligned_error
from .synth import (
    PRESETS,
    AwgnSigma,
    AwgnSnr,
    DecayingCosines,
    GpG,
    Impulses,
    NoNoise,
    Periodic,
    SynthSpec,
    UserFilter,
    make_instance,
    SEC4_ALPHAS,
    SEC4_OMEGAS,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("alpadeconv")


class UsageError(InvalidArgument):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _grid(text):
    """'a:b:n' (n points, inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:stop:count")
        return list(np.linspace(float(parts[0]), float(parts[1]), int(parts[2])))
    return _floats(text)


def _noise(text):
    """'none', 'snr:<dB>' or 'sigma:<value>'."""
    if text == "none":
        return ("none", None)
    kind, _, value = text.partition(":")
    if kind not in ("snr", "sigma") or not value:
        raise argparse.ArgumentTypeError("noise must be none, snr:<dB> or sigma:<value>")
    return (kind, float(value))


def _outdir(args, command):
    out = Path(args.out) if args.out else default_output_dir() / command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _portable_argv(argv):
    """argv without --out, so that a replay into another directory yields the same manifest."""
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        out.append(a)
    return out


# -- synth --------------------------------------------------------------------

def _spec_from_args(args):
    if args.spec:
        spec = SynthSpec.from_dict(load_json(args.spec))
    elif args.preset:
        spec = PRESETS[args.preset]()
    else:
        if args.impulses:
            length = args.length or (max(args.impulses) + 1)
            exc = Impulses(tuple(args.impulses), length, tuple(args.amplitudes) if args.amplitudes else None)
        elif args.periodic:
            if len(args.periodic) != 2:
                raise UsageError("--periodic takes T,K")
            exc = Periodic(args.periodic[0], args.periodic[1],
                           tuple(args.amplitudes) if args.amplitudes else None)
        elif args.gpg:
            if len(args.gpg) != 3:
                raise UsageError("--gpg takes p,sigma_e,length")
            exc = GpG(args.gpg[0], args.gpg[1], int(args.gpg[2]), args.seed)
        else:
            raise UsageError("give --preset, --spec, --impulses, --periodic or --gpg")
        if args.filter_file:
            filt = UserFilter(tuple(read_signal(args.filter_file)))
        else:
            filt = DecayingCosines(tuple(args.alphas or SEC4_ALPHAS), tuple(args.omegas or SEC4_OMEGAS),
                                   args.filter_len)
        spec = SynthSpec(exc, filt)
    if args.noise is not None:
        kind, value = args.noise
        noise = {"none": lambda: NoNoise(), "snr": lambda: AwgnSnr(value, args.seed),
                 "sigma": lambda: AwgnSigma(value, args.seed)}[kind]()
        spec = spec.with_noise(noise)
    return spec


def cmd_synth(args, argv):
    spec = _spec_from_args(args)
    inst = make_instance(spec)
    out = _outdir(args, "synth")
    files = write_instance(out, spec, inst)
    seeds = [getattr(spec.noise, "seed", 0), getattr(spec.excitation, "seed", 0)]
    write_manifest(out, "synth", _portable_argv(argv), spec.to_dict(), seeds, files.values())
    print(f"wrote instance to {out} (M={inst.e_true.size}, L={inst.h_true.size}, N={inst.y.size}, "
          f"SNR={inst.snr_actual_db:.3f} dB)")
    return EXIT_OK


# -- deconvolve ---------------------------------------------------------------

def _load_observation(path):
    """Return (y, instance or None)."""
    p = Path(path)
    if p.is_dir() or p.name == "instance.json":
        _, inst = read_instance(p)
        return inst.y, inst
    return read_signal(p), None


def _alpa_config_from_args(args, filter_len):
    if args.config:
        d = load_json(args.config)
        d.setdefault("filter_len", filter_len)
        return AlpaConfig.from_dict(d)
    h_user = None
    if args.h_init == "user":
        if not args.h_user:
            raise UsageError("--h-init user needs --h-user FILE")
        h_user = tuple(read_signal(args.h_user))
    return AlpaConfig(
        filter_len=filter_len,
        penalty=PenaltyParams(p=args.p, delta=args.delta, epsilon=args.epsilon),
        inner_iters=args.inner_iters,
        inner_tol=args.inner_tol,
        max_outer=args.max_outer,
        outer_tol=args.outer_tol,
        normalization=args.normalization,
        beta=args.beta,
        solve_path=args.solve_path,
        h_init=args.h_init,
        seed=args.seed,
        lp_order=args.lp_order,
        h_user=h_user,
    )


def _write_trace(path, trace):
    rows = [(r.k, r.costs.f_exact, r.costs.f_eps, r.relative_change) for r in trace]
    write_csv(path, ["k", "F", "F_eps", "rel_change"], rows)


def cmd_deconvolve(args, argv):
    y, inst = _load_observation(args.input)
    filter_len = args.filter_len or (inst.h_true.size if inst is not None else None)
    if not filter_len:
        raise UsageError("--filter-len is required for a bare signal file")
    cfg = _alpa_config_from_args(args, filter_len)
    out = _outdir(args, "deconvolve")
    manifest_args = (out, "deconvolve", _portable_argv(argv), cfg.to_dict(), [cfg.seed])
    try:
        res = run_alpa(y, cfg)
    except NumericalFailure as exc:
        if exc.trace is not None and len(exc.trace):
            _write_trace(out / "trace.csv", exc.trace)
            write_manifest(*manifest_args, [out / "trace.csv"])
        raise
    artifacts = [write_signal(out / "h_opt", res.h, "h_opt"), write_signal(out / "e_opt", res.e, "e_opt")]
    _write_trace(out / "trace.csv", res.trace)
    artifacts.append(out / "trace.csv")
    summary = {"termination": res.termination, "iterations": res.iterations,
               "F": float(res.trace[-1].costs.f_exact), "F_eps": float(res.trace[-1].costs.f_eps)}
    if inst is not None:
        k = int(np.count_nonzero(inst.e_true))
        summary["excitation"] = aligned_error(inst.e_true, res.e, True, k, 1).as_dict()
        summary["filter"] = aligned_error(inst.h_true, res.h, True).as_dict()
    dump_json(summary, out / "result.json")
    artifacts.append(out / "result.json")
    write_manifest(*manifest_args, artifacts)
    if res.termination == "max_iters":
        print(f"warning: stopped at max_outer={cfg.max_outer} before reaching outer_tol", file=sys.stderr)
    print(f"{res.termination} after {res.iterations} outer iterations; F_eps={summary['F_eps']:.6g}; "
          f"outputs in {out}")
    return EXIT_OK


# -- bounds -------------------------------------------------------------------

def cmd_bounds(args, argv):
    _, inst = read_instance(args.instance)
    h_star = inst.h_true / np.linalg.norm(inst.h_true)
    M = inst.e_true.size
    noise = GaussianNoise(args.sigma) if args.noise == "gaussian" else BoundedNoise(args.a)
    probe = BoundInputs(h_star, h_star, inst.e_true, args.delta, noise)
    dh_norm = args.dh_norm if args.dh_norm is not None else args.dh_fraction * probe.max_dh_norm()
    direction = np.random.default_rng(args.seed).standard_normal(h_star.size)
    h_tilde = h_star + dh_norm * direction / np.linalg.norm(direction)
    inp = BoundInputs(h_star, h_tilde, inst.e_true, args.delta, noise)
    xi = args.xi if args.xi else list(np.linspace(0.0, 1.0, 21))
    table = monte_carlo_validate(inp, xi, args.trials, args.seed, args.form)
    out = _outdir(args, "bounds")
    table.to_csv(out / "bounds.csv")
    config = {"instance": str(args.instance), "noise": args.noise, "sigma": noise.sigma,
              "a": getattr(noise, "a", None), "delta": args.delta, "dh_norm": dh_norm,
              "trials": args.trials, "form": args.form, "xi": [float(v) for v in xi],
              "kappa_q": inp.kappa_q, "c_delta_h": inp.c_delta_h, "M": M}
    write_manifest(out, "bounds", _portable_argv(argv), config, [args.seed], [out / "bounds.csv"])
    print(f"kappa_q={inp.kappa_q:.4g}  C_dh={inp.c_delta_h:.4g}  per-draw bound violations="
          f"{table.eq17_violations}/{table.trials}")
    return EXIT_OK


# -- bench --------------------------------------------------------------------

def cmd_bench(args, argv):
    d = load_json(args.scenario) if args.scenario else {}
    for key in ("sigmas", "trials", "seed", "methods", "lasso_delta", "jobs"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    cfg = BenchConfig.from_dict(d)
    rows, timings = run_bench(cfg)
    out = _outdir(args, "bench")
    trial_cols = ["sigma", "trial", "method", "delta", "iterations", "e_mse_db", "e_mae_db", "h_mse_db",
                  "h_mae_db", "y_mse_db", "sparsity", "residual", "support_hits"]
    write_csv(out / "bench_trials.csv", trial_cols, [[r[c] for c in trial_cols] for r in rows])
    summary = summarize(rows)
    sum_cols = ["sigma", "method", "trials", "e_mse_db", "e_mae_db", "h_mse_db", "h_mae_db", "y_mse_db",
                "sparsity", "residual", "support_hits"]
    write_csv(out / "bench_summary.csv", sum_cols, [[r[c] for c in sum_cols] for r in summary])
    # wall times vary run to run, so they live in their own file
    timed = summarize(rows, timings)
    write_csv(out / "bench_timing.csv", ["sigma", "method", "seconds"],
              [[r["sigma"], r["method"], r["seconds"]] for r in timed])
    (out / "bench_table.txt").write_text(format_table(summary) + "\n")
    write_manifest(out, "bench", _portable_argv(argv), cfg.to_dict(), [cfg.seed],
                   [out / f for f in ("bench_trials.csv", "bench_summary.csv", "bench_timing.csv",
                                      "bench_table.txt")])
    print(format_table(timed))
    return EXIT_OK


# -- riesz --------------------------------------------------------------------

def cmd_riesz(args, argv):
    kernel = read_signal(args.kernel)
    rep = riesz_report(kernel, args.input_len, args.eta)
    text = json.dumps(rep.as_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = _outdir(args, "riesz")
        dump_json(rep.as_dict(), out / "riesz.json")
        write_manifest(out, "riesz", _portable_argv(argv),
                       {"kernel": str(args.kernel), "input_len": args.input_len, "eta": args.eta}, [],
                       [out / "riesz.json"])
    return EXIT_OK


# -- replay -------------------------------------------------------------------

def cmd_replay(args, argv):
    manifest = read_manifest(args.manifest)
    if not args.out:
        raise UsageError("replay needs --out for the fresh output directory")
    return main(list(manifest["argv"]) + ["--out", args.out])


# -- parser -------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="alpadeconv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("synth", help="generate a synthetic instance")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--spec", help="JSON spec file")
    src.add_argument("--impulses", type=_ints, help="spike indices, e.g. 10,62,85")
    src.add_argument("--periodic", type=_ints, help="T,K")
    src.add_argument("--gpg", type=_floats, help="p,sigma_e,length")
    p.add_argument("--length", type=int, help="excitation length for --impulses")
    p.add_argument("--amplitudes", type=_floats)
    p.add_argument("--filter-len", type=int, default=100)
    p.add_argument("--alphas", type=_floats)
    p.add_argument("--omegas", type=_floats)
    p.add_argument("--filter-file", help="user filter signal file")
    p.add_argument("--noise", type=_noise, help="none | snr:<dB> | sigma:<value>")
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("deconvolve", help="run ALPA on an observation")
    p.add_argument("input", help="signal file (.bin/.wav/.csv) or instance directory")
    p.add_argument("--filter-len", type=int)
    p.add_argument("--config", help="JSON AlpaConfig (overrides the solver flags)")
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--inner-iters", type=int, default=10)
    p.add_argument("--inner-tol", type=float, default=1e-8)
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--outer-tol", type=float, default=1e-6)
    p.add_argument("--normalization", choices=NORMALIZATIONS, default="unit_norm_projection")
    p.add_argument("--beta", type=float)
    p.add_argument("--solve-path", choices=SOLVE_PATHS, default="auto")
    p.add_argument("--h-init", choices=H_INITS, default="unit_impulse")
    p.add_argument("--h-user", help="initial filter file for --h-init user")
    p.add_argument("--lp-order", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=cmd_deconvolve)

    p = sub.add_parser("bounds", help="Monte-Carlo check of the initialization error bounds")
    p.add_argument("instance", help="instance directory or instance.json")
    p.add_argument("--noise", choices=("gaussian", "uniform"), default="gaussian")
    p.add_argument("--sigma", type=float, default=0.01, help="Gaussian noise std")
    p.add_argument("--a", type=float, default=0.01, help="uniform noise half-width")
    p.add_argument("--delta", type=float, default=0.0)
    dh = p.add_mutually_exclusive_group()
    dh.add_argument("--dh-norm", type=float, help="||h* - h~||")
    dh.add_argument("--dh-fraction", type=float, default=0.1,
                    help="||h* - h~|| as a fraction of 1/(2 sqrt(M) kappa_q)")
    p.add_argument("--xi", type=_grid, help="xi grid: comma list or start:stop:count")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--form", choices=FORMS, default="derived")
    p.add_argument("--seed", type=int, default=0)
    add_out(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bench", help="compare ALPA with the baselines over noise levels")
    p.add_argument("--scenario", help="JSON scenario (BenchConfig fields)")
    p.add_argument("--sigmas", type=_floats)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", type=lambda s: [m.strip() for m in s.split(",")],
                   help=f"subset of {','.join(METHODS)}")
    p.add_argument("--lasso-delta", choices=("rule", "matched"))
    p.add_argument("--jobs", type=int)
    add_out(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("riesz", help="Riesz bounds of a kernel's convolution operator")
    p.add_argument("kernel", help="kernel signal file")
    p.add_argument("--input-len", type=int, required=True)
    p.add_argument("--eta", type=float, default=0.5)
    add_out(p)
    p.set_defaults(func=cmd_riesz)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", help="manifest.json or its directory")
    add_out(p)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv[argv.index(args.command):] if args.command in argv else argv)
    except (NumericalFailure, DegenerateExcitation) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidArgument, BoundInapplicable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IOFailure, OSError) as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
