"""
Seeded Monte-Carlo drivers for the convergence, SNR and Ne experiments.

Every trial draws one channel realization from
``trial_seed(master_seed, trial)`` and runs every scheme on that same
realization, so scheme differences are paired. Alignment is computed once
per trial at ``REFERENCE_POWER * sigma2``; the solutions of all three
schemes depend on the transmit power only through the uniform
``sqrt(Pt/d)`` precoder scale, so they are rescaled for each SNR point.
``validate_scaling`` re-runs the alignment at every SNR point to confirm.
"""

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .channel import draw_channels, snr_to_power, trial_seed
from .ia import SCHEMES, IAOptions, run_scheme, wslm_feasible, zfws_feasible
from .metrics import secrecy_report, ssr_improvement
from .numerics import DimensionError, principal_angles

logger = logging.getLogger(__name__)

REFERENCE_POWER = 1.0
SCALING_TOL = 1e-8

RAW_HEADER = ("scheme", "K", "M", "N", "Ne", "d", "snr_db", "trial", "seed",
              "ssr", "iterations", "final_leakage", "wslm_feasible",
              "zfws_feasible")
AGGREGATE_HEADER = ("scheme", "snr_db", "ne", "mean_ssr", "std_ssr", "n")
IMPROVEMENT_HEADER = ("scheme", "ne", "snr_db", "mean_improvement",
                      "std_improvement", "n", "wslm_feasible",
                      "zfws_feasible")


class ScalingMismatch(RuntimeError):
    """Rescaled precoders disagree with a run at the target power."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines a sweep, including its randomness.

    `config` is a template: its ``Pt`` is ignored (set per SNR point) and
    its ``Ne`` is replaced by each entry of `ne_points` when given.
    """
    config: object
    schemes: tuple = SCHEMES
    snr_points: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0,
                         45.0, 50.0)
    ne_points: tuple = None
    trials: int = 200
    master_seed: int = 0
    opts: IAOptions = IAOptions()
    validate_scaling: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_points:
            raise ValueError("snr_points must not be empty")
        if not self.schemes:
            raise ValueError("schemes must not be empty")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ValueError(f"unknown schemes: {bad}")
        if self.ne_points is not None and not self.ne_points:
            raise ValueError("ne_points, when given, must not be empty")


@dataclass(frozen=True)
class Row:
    scheme: str
    K: int
    M: int
    N: int
    Ne: int
    d: int
    snr_db: float
    trial: int
    seed: int
    ssr: float
    iterations: int
    final_leakage: float
    wslm_feasible: bool
    zfws_feasible: bool

    def sort_key(self):
        return (SCHEMES.index(self.scheme), self.Ne, self.snr_db, self.trial)


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    improvements: list = None
    max_scaling_angle: float = None

    def aggregates(self):
        """Mean and sample std (n-1 divisor) of SSR per (scheme, snr, ne)."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r.scheme, r.snr_db, r.Ne), []).append(r.ssr)
        out = []
        for (scheme, snr, ne), vals in groups.items():
            v = np.array(vals)
            std = float(np.std(v, ddof=1)) if v.size > 1 else math.nan
            out.append({"scheme": scheme, "snr_db": snr, "ne": ne,
                        "mean_ssr": float(np.mean(v)), "std_ssr": std,
                        "n": int(v.size)})
        out.sort(key=lambda a: (SCHEMES.index(a["scheme"]), a["ne"],
                                a["snr_db"]))
        return out

    def ssr(self, scheme, snr_db, ne=None):
        """SSR values of one cell in trial order."""
        rows = [r for r in self.rows if r.scheme == scheme
                and r.snr_db == snr_db and (ne is None or r.Ne == ne)]
        return np.array([r.ssr for r in sorted(rows, key=lambda r: r.trial)])


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------
def run_convergence(config, scheme, opts=IAOptions(), seed=0):
    """Leakage trace of `scheme` on the channel drawn from `seed`."""
    channels = draw_channels(config, seed)
    _, trace = run_scheme(scheme, channels, config, opts)
    return trace


def precoder_angle(sol_a, sol_b):
    """Largest principal angle between matching precoder subspaces."""
    return max(float(np.max(principal_angles(Fa, Fb)))
               for Fa, Fb in zip(sol_a.F, sol_b.F))


def scaling_check(config, scheme, opts, seed, powers=(1.0, 1000.0)):
    """
    Run `scheme` on one channel draw at two powers and compare precoders.

    The stopping thresholds are scaled with the power so both runs take the
    same path. Returns the largest principal angle between corresponding
    precoder subspaces.
    """
    channels = draw_channels(config, seed)
    p0, p1 = powers
    sol0, _ = run_scheme(scheme, channels, config.with_power(p0),
                         opts.scaled(p0 / REFERENCE_POWER))
    sol1, _ = run_scheme(scheme, channels, config.with_power(p1),
                         opts.scaled(p1 / REFERENCE_POWER))
    return precoder_angle(sol0, sol1)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------
def _trial_rows(spec, ne, trial):
    """All rows of one (Ne, trial) work unit, plus the worst scaling angle."""
    template = spec.config if ne is None else spec.config.with_ne(ne)
    p_ref = REFERENCE_POWER * template.sigma2
    cfg = template.with_power(p_ref)
    seed = trial_seed(spec.master_seed, trial)
    channels = draw_channels(cfg, seed)
    opts = IAOptions(kappa_max=spec.opts.kappa_max,
                     eps_leakage=spec.opts.eps_leakage,
                     eps_delta=spec.opts.eps_delta, init_seed=seed,
                     stagnation_window=spec.opts.stagnation_window)
    w_ok = wslm_feasible(cfg)[0]
    z_ok = zfws_feasible(cfg)[0]
    rows = []
    worst = 0.0
    for scheme in spec.schemes:
        try:
            sol, trace = run_scheme(scheme, channels, cfg, opts)
        except DimensionError as exc:
            logger.warning("skipping %s on %s: %s", scheme, cfg.label, exc)
            continue
        for snr in spec.snr_points:
            Pt = snr_to_power(snr, cfg.sigma2)
            ratio = Pt / p_ref
            cfg_s = cfg.with_power(Pt)
            sol_s = sol.scaled(math.sqrt(ratio))
            if spec.validate_scaling:
                direct, _ = run_scheme(scheme, channels, cfg_s,
                                       opts.scaled(ratio))
                worst = max(worst, precoder_angle(sol_s, direct))
            rows.append(Row(
                scheme=scheme, K=cfg.K, M=cfg.M, N=cfg.N, Ne=cfg.Ne, d=cfg.d,
                snr_db=float(snr), trial=trial, seed=seed,
                ssr=secrecy_report(channels, sol_s, cfg_s).ssr,
                iterations=trace.iterations,
                final_leakage=trace.final * ratio,
                wslm_feasible=w_ok, zfws_feasible=z_ok))
    return rows, worst


def _trial_rows_star(args):
    return _trial_rows(*args)


def _run_units(spec, units, jobs):
    if jobs is None:
        jobs = os.cpu_count() or 1
    work = [(spec, ne, t) for ne, t in units]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_trial_rows_star, work))
    else:
        results = [_trial_rows(*w) for w in work]
    rows = [r for rs, _ in results for r in rs]
    rows.sort(key=Row.sort_key)
    worst = max((w for _, w in results), default=0.0)
    result = SweepResult(rows=rows)
    if spec.validate_scaling:
        result.max_scaling_angle = worst
        if worst > SCALING_TOL:
            raise ScalingMismatch(
                f"rescaled precoders deviate from direct runs by "
                f"{worst:.3e} rad (> {SCALING_TOL:.0e})")
    return result


def run_snr_sweep(spec, jobs=1):
    """Average SSR versus SNR for every scheme, with paired trials."""
    nes = [None] if spec.ne_points is None else list(spec.ne_points)
    units = [(ne, t) for ne in nes for t in range(spec.trials)]
    return _run_units(spec, units, jobs)


def run_ne_sweep(spec, jobs=1):
    """
    SSR improvement over conventional IA versus eavesdropper antennas.

    Conventional IA is always run as the baseline. The improvement of each
    scheme is averaged over trials where both it and the baseline ran;
    the baseline's self-comparison is included and is exactly zero.
    """
    if spec.ne_points is None:
        raise ValueError("an Ne sweep needs ne_points")
    if "conventional" not in spec.schemes:
        spec = replace(spec, schemes=("conventional",) + tuple(spec.schemes))
    units = [(ne, t) for ne in spec.ne_points for t in range(spec.trials)]
    result = _run_units(spec, units, jobs)
    cells = {}
    for r in result.rows:
        cells.setdefault((r.scheme, r.Ne, r.snr_db), {})[r.trial] = r
    improvements = []
    for scheme in spec.schemes:
        for ne in spec.ne_points:
            for snr in spec.snr_points:
                mine = cells.get((scheme, ne, float(snr)), {})
                base = cells.get(("conventional", ne, float(snr)), {})
                trials = sorted(set(mine) & set(base))
                if not trials:
                    continue
                a = [mine[t].ssr for t in trials]
                b = [base[t].ssr for t in trials]
                diffs = np.subtract(a, b)
                ref = mine[trials[0]]
                improvements.append({
                    "scheme": scheme, "ne": ne, "snr_db": float(snr),
                    "mean_improvement": ssr_improvement(a, b),
                    "std_improvement": (float(np.std(diffs, ddof=1))
                                        if len(trials) > 1 else math.nan),
                    "n": len(trials),
                    "wslm_feasible": ref.wslm_feasible,
                    "zfws_feasible": ref.zfws_feasible})
    result.improvements = improvements
    return result


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------
def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path, header, records):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for rec in records:
                w.writerow([_fmt(rec[h]) for h in header])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_csv(result, path):
    """Raw per-trial rows, sorted by (scheme, Ne, SNR, trial)."""
    names = [f.name for f in fields(Row)]
    rows = sorted(result.rows, key=Row.sort_key)
    _write(path, RAW_HEADER,
           ({n: getattr(r, n) for n in names} for r in rows))


def write_aggregates(result, path):
    _write(path, AGGREGATE_HEADER, result.aggregates())


def write_improvements(result, path):
    _write(path, IMPROVEMENT_HEADER, result.improvements or [])


def read_csv(path):
    """Parse a raw CSV written by :func:`write_csv` back into rows."""
    conv = {"scheme": str, "K": int, "M": int, "N": int, "Ne": int, "d": int,
            "snr_db": float, "trial": int, "seed": int, "ssr": float,
            "iterations": int, "final_leakage": float,
            "wslm_feasible": lambda s: s == "true",
            "zfws_feasible": lambda s: s == "true"}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RAW_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return SweepResult(rows=[Row(**{k: conv[k](v) for k, v in rec.items()})
                                 for rec in reader])


def write_gnuplot_script(path, aggregate_csv, mode="snr", improvement_csv=None):
    """Emit a gnuplot script plotting the aggregate (or improvement) file."""
    lines = ["set datafile separator ','", "set key top left", "set grid",
             "set terminal pngcairo size 800,600",
             f"set output '{os.path.splitext(os.path.basename(path))[0]}.png'"]
    if mode == "ne" and improvement_csv is not None:
        src = os.path.basename(improvement_csv)
        lines += ["set xlabel 'Eavesdropper antennas Ne'",
                  "set ylabel 'Average SSR improvement (bits/s/Hz)'"]
        plots = [f"'{src}' using 2:(strcol(1) eq '{s}' ? $4 : 1/0) "
                 f"with linespoints title '{s}'" for s in SCHEMES
                 if s != "conventional"]
    else:
        src = os.path.basename(aggregate_csv)
        lines += ["set xlabel 'SNR (dB)'",
                  "set ylabel 'Average SSR (bits/s/Hz)'"]
        plots = [f"'{src}' using 2:(strcol(1) eq '{s}' ? $4 : 1/0) "
                 f"with linespoints title '{s}'" for s in SCHEMES]
    lines.append("plot " + ", \\\n     ".join(plots))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
