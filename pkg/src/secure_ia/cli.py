"""
Command-line front end: ``secure-ia {feasible,converge,sweep}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Values come from (lowest to highest priority) built-in defaults, a
``--preset``, a ``--config`` file section, and explicit flags.
"""

import argparse
import configparser
import logging
import os
import re
import sys

import numpy as np

from .channel import SystemConfig, snr_to_power
from .harness import (ExperimentSpec, ScalingMismatch, run_convergence,
                      run_ne_sweep, run_snr_sweep, write_aggregates,
                      write_csv, write_gnuplot_script, write_improvements)
from .ia import SCHEMES, IAOptions, wslm_feasible, zfws_feasible
from .numerics import DimensionError

logger = logging.getLogger("secure_ia")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

PRESETS = {
    "9x9-6-3": dict(K=3, M=9, N=9, Ne=6, d=3),
    "9x9-9-3": dict(K=3, M=9, N=9, Ne=9, d=3),
    "15x15-9-3": dict(K=3, M=15, N=15, Ne=9, d=3),
    "15x15-18-3": dict(K=3, M=15, N=15, Ne=18, d=3),
    "6x6-4-2": dict(K=3, M=6, N=6, Ne=4, d=2),
    "9x9-ne-3": dict(K=3, M=9, N=9, Ne=3, d=3, mode="ne",
                     ne=list(range(3, 15)), snr_min=30.0, snr_max=30.0),
    "15x15-ne-3": dict(K=3, M=15, N=15, Ne=3, d=3, mode="ne",
                       ne=list(range(3, 34, 3)), snr_min=30.0,
                       snr_max=30.0),
}
ALIASES = {"9963": "9x9-6-3", "9993": "9x9-9-3", "151593": "15x15-9-3",
           "1515183": "15x15-18-3", "6642": "6x6-4-2", "993": "9x9-ne-3",
           "15153": "15x15-ne-3"}

DEFAULTS = dict(K=None, M=None, N=None, Ne=None, d=None, scheme=None,
                snr=30.0, snr_min=0.0, snr_max=50.0, snr_step=5.0, ne=None,
                trials=200, seed=0, kappa_max=500, eps_leakage=1e-10,
                eps_delta=1e-14, sigma2=1.0, out=None, jobs=None,
                mode="snr", validate_scaling=False)
CONFIG_KEYS = set(DEFAULTS) | {"preset"}


class UsageError(Exception):
    pass


def resolve_preset(name):
    """Dimensions (and sweep defaults) for a named or encoded system.

    Accepts the names in ``PRESETS``, their compact aliases, any
    ``MxN-Ne-d`` or ``MxN-Ne-d-K`` string, and four-digit codes ``MNEd``
    with single-digit fields.
    """
    key = ALIASES.get(name, name)
    if key in PRESETS:
        return dict(PRESETS[key])
    m = re.fullmatch(r"(\d+)x(\d+)-(\d+)-(\d+)(?:-(\d+))?", name)
    if m:
        M, N, Ne, d, K = m.groups()
        return dict(K=int(K or 3), M=int(M), N=int(N), Ne=int(Ne), d=int(d))
    if re.fullmatch(r"\d{4}", name):
        M, N, Ne, d = (int(c) for c in name)
        return dict(K=3, M=M, N=N, Ne=Ne, d=d)
    raise UsageError(f"unknown preset {name!r}; known: "
                     f"{', '.join(sorted(PRESETS))}")


def parse_int_list(text):
    """``"3,6,9"`` or ``"3..9"`` (inclusive) or a mix of both."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty list {text!r}")
    return out


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key in ("K", "M", "N", "Ne", "d", "trials", "seed", "kappa_max",
                   "jobs"):
            return int(value)
        if key in ("snr", "snr_min", "snr_max", "snr_step", "eps_leakage",
                   "eps_delta", "sigma2"):
            return float(value)
        if key == "ne":
            return value if isinstance(value, list) else parse_int_list(value)
        if key == "validate_scaling":
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("1", "true", "yes", "on"):
                return True
            if str(value).lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {value!r}") from None
    return value


def read_config(path, section=None):
    """Flat ``key = value`` settings from one section of an INI-style file."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    sections = parser.sections()
    if not sections:
        raise UsageError(f"config {path} has no [section]")
    name = section or sections[0]
    if name not in parser:
        raise UsageError(f"config {path} has no section [{name}]")
    values = {}
    for key, raw in parser[name].items():
        norm = key.replace("-", "_")
        if norm not in CONFIG_KEYS:
            raise UsageError(f"unknown key {key!r} in [{name}] of {path}")
        values[norm] = raw
    return values


def merge_settings(args):
    """Combine defaults, preset, config file and flags into one dict."""
    settings = dict(DEFAULTS)
    file_values = {}
    if args.config:
        file_values = read_config(args.config, args.experiment)
    preset = args.preset or file_values.get("preset")
    if preset:
        settings.update(resolve_preset(preset))
    for key, value in file_values.items():
        if key != "preset":
            settings[key] = _coerce(key, value)
    for key in CONFIG_KEYS - {"preset"}:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = _coerce(key, value)
    return settings


def build_config(s, Pt=1.0):
    missing = [k for k in ("K", "M", "N", "Ne", "d") if s.get(k) is None]
    if missing:
        raise UsageError(f"missing system dimensions: {', '.join(missing)} "
                         f"(give --preset or the flags)")
    try:
        return SystemConfig(K=s["K"], M=s["M"], N=s["N"], Ne=s["Ne"],
                            d=s["d"], Pt=Pt, sigma2=s["sigma2"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_opts(s, init_seed=0):
    try:
        return IAOptions(kappa_max=s["kappa_max"],
                         eps_leakage=s["eps_leakage"],
                         eps_delta=s["eps_delta"], init_seed=init_seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _snr_grid(s):
    if s["snr_step"] <= 0:
        raise UsageError("--snr-step must be positive")
    if s["snr_max"] < s["snr_min"]:
        raise UsageError("--snr-max must be >= --snr-min")
    n = int(np.floor((s["snr_max"] - s["snr_min"]) / s["snr_step"] + 1e-9))
    return tuple(float(s["snr_min"] + i * s["snr_step"]) for i in range(n + 1))


def _schemes(s, default):
    raw = s.get("scheme")
    if raw is None:
        return default
    names = tuple(x.strip() for x in str(raw).split(",") if x.strip())
    bad = [x for x in names if x not in SCHEMES]
    if bad or not names:
        raise UsageError(f"unknown scheme(s) {bad}; choose from "
                         f"{', '.join(SCHEMES)}")
    return names


def _yn(flag):
    return "true" if flag else "false"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------
def cmd_feasible(s, out=None):
    out = out or sys.stdout
    cfg = build_config(s)
    K, M, N, Ne, d = cfg.K, cfg.M, cfg.N, cfg.Ne, cfg.d
    w_ok, Nv, Neq = wslm_feasible(cfg)
    z_ok, ant, sub = zfws_feasible(cfg)
    lhs = K * (M + N) - (K * K + 1) * d
    rhs = Ne * (K - 1)
    print(f"system            {cfg.label}", file=out)
    print(f"Nv                {Nv}", file=out)
    print(f"Neq               {Neq}  (interference {K * (K - 1) * d * d}, "
          f"eavesdropper {K * (Ne - d) * d})", file=out)
    print(f"K(M+N)-(K^2+1)d   {lhs} >= Ne(K-1) = {rhs}: {_yn(lhs >= rhs)}",
          file=out)
    print(f"Ne >= d           {_yn(Ne >= d)}", file=out)
    print(f"M-d >= Ne         {M - d} >= {Ne}: {_yn(ant)}", file=out)
    print(f"N >= Kd           {N} >= {K * d}: {_yn(sub)}", file=out)
    print(f"wslm={_yn(w_ok)} zfws={_yn(z_ok)}", file=out)
    return EXIT_OK


def cmd_converge(s, out=None):
    out = out or sys.stdout
    schemes = _schemes(s, None)
    if not schemes or len(schemes) != 1:
        raise UsageError("converge needs exactly one --scheme")
    scheme = schemes[0]
    cfg = build_config(s, Pt=snr_to_power(s["snr"], s["sigma2"]))
    opts = build_opts(s, init_seed=s["seed"])
    path = s["out"] or f"converge_{scheme}.csv"
    try:
        trace = run_convergence(cfg, scheme, opts, seed=s["seed"])
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iteration,leakage\n")
            for i, J in enumerate(trace.leakage):
                fh.write(f"{i},{J!r}\n")
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{scheme} on {cfg.label} at {s['snr']:g} dB: "
          f"termination={trace.termination} iterations={trace.iterations} "
          f"final_leakage={trace.final:.3e}", file=out)
    print(f"trace written to {path}", file=out)
    return EXIT_OK


def cmd_sweep(s, out=None):
    out = out or sys.stdout
    mode = s["mode"]
    if mode not in ("snr", "ne"):
        raise UsageError(f"--mode must be snr or ne, got {mode!r}")
    cfg = build_config(s)
    ne_points = None
    if s["ne"] is not None:
        ne_points = tuple(s["ne"])
    if mode == "ne" and ne_points is None:
        raise UsageError("--mode ne needs --ne")
    if mode == "ne" and s["snr_min"] == DEFAULTS["snr_min"] and \
            s["snr_max"] == DEFAULTS["snr_max"]:
        snr_points = (float(s["snr"]),)
    else:
        snr_points = _snr_grid(s)
    if ne_points is not None and any(n < 1 for n in ne_points):
        raise UsageError("Ne values must be >= 1")
    try:
        spec = ExperimentSpec(
            config=cfg, schemes=_schemes(s, SCHEMES), snr_points=snr_points,
            ne_points=ne_points, trials=s["trials"], master_seed=s["seed"],
            opts=build_opts(s), validate_scaling=bool(s["validate_scaling"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    outdir = s["out"] or "results"
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {outdir}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        if mode == "snr":
            result = run_snr_sweep(spec, jobs=s["jobs"])
        else:
            result = run_ne_sweep(spec, jobs=s["jobs"])
    except ScalingMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    raw = os.path.join(outdir, "raw.csv")
    agg = os.path.join(outdir, "aggregate.csv")
    imp = os.path.join(outdir, "improvement.csv")
    try:
        write_csv(result, raw)
        write_aggregates(result, agg)
        if mode == "ne":
            write_improvements(result, imp)
        write_gnuplot_script(os.path.join(outdir, "plot.gp"), agg, mode,
                             imp if mode == "ne" else None)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    system = (cfg.label if ne_points is None
              else f"({cfg.M}x{cfg.N},Ne,{cfg.d})^{cfg.K}")
    print(f"{mode} sweep on {system}, {spec.trials} trials, "
          f"seed {spec.master_seed}", file=out)
    print(f"{'scheme':<13}{'snr_db':>7}{'ne':>5}{'mean_ssr':>11}"
          f"{'std_ssr':>10}{'n':>6}", file=out)
    for a in result.aggregates():
        print(f"{a['scheme']:<13}{a['snr_db']:>7g}{a['ne']:>5}"
              f"{a['mean_ssr']:>11.3f}{a['std_ssr']:>10.3f}{a['n']:>6}",
              file=out)
    if mode == "ne":
        print("", file=out)
        print(f"{'scheme':<13}{'ne':>5}{'snr_db':>7}{'improvement':>13}"
              f"{'wslm_ok':>9}{'zfws_ok':>9}", file=out)
        for r in result.improvements:
            print(f"{r['scheme']:<13}{r['ne']:>5}{r['snr_db']:>7g}"
                  f"{r['mean_improvement']:>13.3f}"
                  f"{_yn(r['wslm_feasible']):>9}{_yn(r['zfws_feasible']):>9}",
                  file=out)
    if result.max_scaling_angle is not None:
        print(f"scaling validation: max precoder angle "
              f"{result.max_scaling_angle:.2e} rad", file=out)
    print(f"results written to {outdir}", file=out)
    return EXIT_OK


COMMANDS = {"feasible": cmd_feasible, "converge": cmd_converge,
            "sweep": cmd_sweep}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("system")
    for flag in ("--K", "--M", "--N", "--Ne", "--d"):
        g.add_argument(flag, type=int, dest=flag[2:])
    g.add_argument("--sigma2", type=float)
    g.add_argument("--preset", help="named system, e.g. 9x9-6-3 or 9963")
    g.add_argument("--config", help="INI-style key = value file")
    g.add_argument("--experiment", help="section of --config to use")

    run = argparse.ArgumentParser(add_help=False)
    r = run.add_argument_group("run")
    r.add_argument("--scheme", help="conventional, wslm, zfws "
                   "(comma list for sweep)")
    r.add_argument("--seed", type=int)
    r.add_argument("--kappa-max", type=int, dest="kappa_max")
    r.add_argument("--eps-leakage", type=float, dest="eps_leakage")
    r.add_argument("--eps-delta", type=float, dest="eps_delta")
    r.add_argument("--snr", type=float, help="single SNR point in dB")
    r.add_argument("--out")

    parser = argparse.ArgumentParser(
        prog="secure-ia",
        description="Interference alignment for secure multiuser MIMO.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("feasible", parents=[common],
                   help="properness of the wslm and zfws designs")
    sub.add_parser("converge", parents=[common, run],
                   help="leakage trace of one run")
    sw = sub.add_parser("sweep", parents=[common, run],
                        help="Monte-Carlo SSR sweeps")
    sw.add_argument("--mode", choices=("snr", "ne"))
    sw.add_argument("--snr-min", type=float, dest="snr_min")
    sw.add_argument("--snr-max", type=float, dest="snr_max")
    sw.add_argument("--snr-step", type=float, dest="snr_step")
    sw.add_argument("--ne", help="Ne values, e.g. 3,6,9 or 3..9")
    sw.add_argument("--trials", type=int)
    sw.add_argument("--jobs", type=int)
    sw.add_argument("--validate-scaling", action="store_true",
                    dest="validate_scaling")
    return parser


def _setup_logging():
    level = os.environ.get("SECURE_IA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        settings = merge_settings(args)
        return COMMANDS[args.command](settings)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
