"""Command-line entry point ``bhnoma``.

Subcommands:
  optimize  run one scheduler on a scenario and write a JSON run report
  outage    analytic / asymptotic / empirical outage sweep over SNR (CSV)
  compare   mean objective per scheduler across a demand sweep (CSV)
  pavg      interference-state weights for one overlap fraction (CSV)

``bhnoma --check FILE`` validates a report or CSV written by this tool.
Exit codes: 0 success, 1 input error, 2 infeasible instance.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (CSI_MODES, VARIANTS, OutageParams, asymptotic_outage, outage, p_avg_overlap,
                        sinr_threshold)
from .baselines import SCHEDULERS, run_scheduler
from .errors import BHNomaError
from .montecarlo import simulate_outage_sweep
from .report import check_report
from .scenario import REUSE_ALIASES, ScenarioConfig, default_scenario_path, load_scenario

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2

SCHEMAS = {
    "outage": ["rho_db", "variant", "user", "csi", "kappa", "analytic", "asymptotic", "empirical", "trials"],
    "compare": ["demand_mbps", "scheduler", "mean_objective", "std_error", "seeds", "rank"],
    "pavg": ["state", "weight", "half_width", "inr"],
}


class InputError(Exception):
    """Bad command-line input; reported with exit code 1."""


# ---------------------------------------------------------------------------
# helpers


def default_seed() -> int:
    raw = os.environ.get("BHNOMA_SEED")
    if raw is None:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"BHNOMA_SEED must be an integer, got {raw!r}") from None


def parse_range(text: str, name: str) -> np.ndarray:
    """``a:b:step`` inclusive of b (within half a step)."""
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"{name}: expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise InputError(f"{name}: empty range {text!r}")
    n = int(np.floor((b - a) / step + 0.5)) + 1
    return np.round(a + step * np.arange(n), 12)


def parse_pair(text: str, name: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise InputError(f"{name}: expected two comma-separated numbers, got {text!r}") from None
    return x, y


def _scenario(path) -> ScenarioConfig:
    return load_scenario(path or default_scenario_path())


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def header(kind: str, scenario_hash: str, seed: int, extra: str = "") -> str:
    line = f"# bhnoma {__version__} kind={kind} scenario={scenario_hash} seed={seed}"
    return line + (f" {extra}" if extra else "") + "\n"


def write_csv(kind: str, rows, scenario_hash: str, seed: int, extra: str = "", trailer=()) -> str:
    buf = io.StringIO()
    buf.write(header(kind, scenario_hash, seed, extra))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCHEMAS[kind])
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_optimize(args) -> int:
    cfg = _scenario(args.scenario)
    if args.reuse:
        cfg = cfg.replace(reuse_mode=args.reuse)
    if args.seed is not None:
        seed = args.seed
    else:
        seed = default_seed() if "BHNOMA_SEED" in os.environ else cfg.master_seed
    report = run_scheduler(args.scheduler, cfg, seed=seed)
    emit(report.to_json(with_clock=args.timing), args.out)
    if not report.feasible:
        print(f"bhnoma: {len(report.infeasible_users)} users below the minimum rate", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_outage(args) -> int:
    grid = parse_range(args.snr_range, "--snr-range")
    cfg = _scenario(args.scenario)
    a_n, a_m = parse_pair(args.power, "--power")
    R_n, R_m = parse_pair(args.rates, "--rates")
    if args.trials < 0:
        raise InputError("--trials must be >= 0")
    seed = args.seed if args.seed is not None else default_seed()
    base = OutageParams(rho=1.0, a_n=a_n, a_m=a_m, eps_n=float(sinr_threshold(R_n)),
                        eps_m=float(sinr_threshold(R_m)), omega=args.omega, chi=args.chi,
                        K=args.carriers, kappa=args.kappa).for_variant(args.variant, args.carriers)
    weights = p_avg_overlap(cfg, args.kappa, args.pavg_trials, seed, inr=args.inr)
    users = ["n", "m"] if args.user == "both" else [args.user]
    batch = None
    if args.trials > 0:
        batch = simulate_outage_sweep(base, grid, args.csi, args.trials, seed, cfg=cfg, inr=args.inr,
                                      workers=args.workers)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for user in users:
            for i, g in enumerate(grid):
                p = base.with_(rho=10.0 ** (g / 10.0))
                an = outage(p, user, args.csi, weights, raw_theorem=args.raw_theorem)
                asy = asymptotic_outage(p, user, args.csi, weights)
                emp = "" if batch is None else (batch.p_n if user == "n" else batch.p_m)[i]
                rows.append([float(g), args.variant, user, args.csi, args.kappa, an, asy, emp, args.trials])
    extra = f"K={base.K} a={a_n},{a_m} R={R_n},{R_m} omega={args.omega} inr={args.inr}"
    emit(write_csv("outage", rows, cfg.digest(), seed, extra), args.out)
    return EXIT_OK


def _objective_job(job):
    name, cfg, seed = job
    return run_scheduler(name, cfg, seed=seed, validate=True).objective


def cmd_compare(args) -> int:
    cfg = _scenario(args.scenario or default_scenario_path().with_name("scaled12.scn"))
    levels = parse_range(args.demand_sweep, "--demand-sweep")
    if args.seeds < 1:
        raise InputError("--seeds must be >= 1")
    names = args.schedulers.split(",") if args.schedulers else list(SCHEDULERS)
    bad = [n for n in names if n not in SCHEDULERS]
    if bad:
        raise InputError(f"--schedulers: unknown {bad}; choose from {SCHEDULERS}")
    base = args.seed if args.seed is not None else default_seed()
    seeds = [base + i for i in range(args.seeds)]
    jobs = []
    for mean in levels:
        m = mean * 1e6
        level_cfg = cfg.replace(demand_range=(0.25 * m, 1.75 * m))
        jobs += [(n, level_cfg, s) for n in names for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            values = list(pool.map(_objective_job, jobs, chunksize=4))
    else:
        values = [_objective_job(j) for j in jobs]
    values = np.array(values).reshape(len(levels), len(names), len(seeds))
    rows, trailer = [], []
    for li, mean in enumerate(levels):
        means = values[li].mean(axis=1)
        se = values[li].std(axis=1, ddof=1) / np.sqrt(len(seeds)) if len(seeds) > 1 else np.zeros(len(names))
        order = np.lexsort((np.arange(len(names)), means))
        rank = np.empty(len(names), dtype=int)
        rank[order] = np.arange(1, len(names) + 1)
        for j, n in enumerate(names):
            rows.append([float(mean), n, float(means[j]), float(se[j]), len(seeds), int(rank[j])])
        trailer.append(f"ordering demand={float(mean):g}: " + " < ".join(names[k] for k in order))
    emit(write_csv("compare", rows, cfg.digest(), base, f"seeds={len(seeds)}", trailer), args.out)
    return EXIT_OK


def cmd_pavg(args) -> int:
    cfg = _scenario(args.scenario)
    seed = args.seed if args.seed is not None else default_seed()
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    if not 0.0 <= args.kappa <= 1.0:
        raise InputError("--kappa must lie in [0, 1]")
    w = p_avg_overlap(cfg, args.kappa, args.trials, seed, inr=args.inr)
    rows = [[s, float(w.weights[s]), float(w.half_width[s]), float(w.inr[s])] for s in range(len(w.weights))]
    extra = f"kappa={args.kappa} trials={args.trials}"
    trailer = [f"sum={float(w.weights.sum())!r}"]
    emit(write_csv("pavg", rows, cfg.digest(), seed, extra, trailer), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# schema check


def check_file(path) -> list[str]:
    """Problems found in a file written by this tool; empty when valid."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return [f"cannot read {path}: {exc.strerror}"]
    if text.lstrip().startswith("{"):
        try:
            return check_report(json.loads(text))
        except json.JSONDecodeError as exc:
            return [f"invalid JSON: {exc}"]
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# bhnoma "):
        return ["missing '# bhnoma' header line"]
    meta = dict(tok.split("=", 1) for tok in lines[0][2:].split() if "=" in tok)
    problems = [f"header lacks {k}" for k in ("kind", "scenario", "seed") if k not in meta]
    kind = meta.get("kind")
    if kind not in SCHEMAS:
        return problems + [f"unknown kind {kind!r}"]
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    rows = list(csv.reader(body))
    if not rows or rows[0] != SCHEMAS[kind]:
        return problems + [f"columns differ from {SCHEMAS[kind]}"]
    numeric = {"outage": {"rho_db", "kappa", "analytic", "asymptotic", "trials"},
               "compare": {"demand_mbps", "mean_objective", "std_error", "seeds", "rank"},
               "pavg": {"state", "weight", "half_width", "inr"}}[kind]
    for i, row in enumerate(rows[1:], 2):
        if len(row) != len(SCHEMAS[kind]):
            problems.append(f"row {i}: {len(row)} fields")
            continue
        for col, val in zip(SCHEMAS[kind], row):
            if col in numeric or (col == "empirical" and val):
                try:
                    float(val)
                except ValueError:
                    problems.append(f"row {i}: {col}={val!r} is not a number")
    if kind == "pavg":
        total = sum(float(r[1]) for r in rows[1:])
        if abs(total - 1.0) > 1e-12:
            problems.append(f"weights sum to {total!r}")
    return problems


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bhnoma", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bhnoma {__version__}")
    p.add_argument("--check", metavar="FILE", help="validate a report or CSV and exit")
    sub = p.add_subparsers(dest="command")

    o = sub.add_parser("optimize", help="run one scheduler and write a run report")
    o.add_argument("--scenario", help="scenario file (default: packaged reference scenario)")
    o.add_argument("--scheduler", choices=SCHEDULERS, default="unoma")
    o.add_argument("--reuse", choices=sorted(REUSE_ALIASES))
    o.add_argument("--seed", type=int)
    o.add_argument("--out", help="output path (default stdout)")
    o.add_argument("--timing", action="store_true", help="include wall-clock time in the report")
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("outage", help="outage probability sweep over SNR")
    s.add_argument("--snr-range", default="0:40:2", help="a:b:step in dB")
    s.add_argument("--variant", choices=VARIANTS, default="cd")
    s.add_argument("--csi", choices=CSI_MODES, default="ipcsi")
    s.add_argument("--user", choices=["n", "m", "both"], default="n")
    s.add_argument("--kappa", type=float, default=0.2)
    s.add_argument("--trials", type=int, default=0, help="Monte Carlo trials; 0 for analytic only")
    s.add_argument("--pavg-trials", type=int, default=100_000)
    s.add_argument("--seed", type=int)
    s.add_argument("--carriers", type=int, default=4, help="K for the cd variant")
    s.add_argument("--power", default="0.26,0.74", help="a_n,a_m")
    s.add_argument("--rates", default="1,1.5", help="R_n,R_m in BPCU")
    s.add_argument("--omega", type=float, default=0.1)
    s.add_argument("--chi", type=float, default=1.0)
    s.add_argument("--inr", type=float, default=1.0, help="interference-to-noise ratio when interfered")
    s.add_argument("--raw-theorem", action="store_true", help="analytic column from the survival-only forms")
    s.add_argument("--scenario")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_outage)

    c = sub.add_parser("compare", help="mean objective per scheduler across demand levels")
    c.add_argument("--scenario", help="scenario file (default: packaged 12-beam instance)")
    c.add_argument("--demand-sweep", default="300:600:50", help="lo:hi:step of the mean demand in Mbps")
    c.add_argument("--seeds", type=int, default=10)
    c.add_argument("--seed", type=int, help="first seed")
    c.add_argument("--schedulers", help=f"comma list from {','.join(SCHEDULERS)}")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("pavg", help="interference-state weights")
    a.add_argument("--kappa", type=float, default=0.2)
    a.add_argument("--trials", type=int, default=100_000)
    a.add_argument("--seed", type=int)
    a.add_argument("--inr", type=float, default=1.0)
    a.add_argument("--scenario")
    a.add_argument("--out")
    a.set_defaults(func=cmd_pavg)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.check:
            problems = check_file(args.check)
            for line in problems:
                print(f"bhnoma: {args.check}: {line}", file=sys.stderr)
            if not problems:
                print(f"{args.check}: ok")
            return EXIT_OK if not problems else EXIT_INPUT
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_INPUT
        return args.func(args)
    except (InputError, BHNomaError, ValueError) as exc:
        print(f"bhnoma: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
