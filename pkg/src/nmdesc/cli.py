"""Command-line front end.

Subcommands:

* gen    -- write a synthetic problem instance to a text file
* run    -- run one solver from a config file, emit a trace CSV
* bench  -- run several solvers over trials, emit E(t) CSV + SVG
* diag   -- classify a trace's index sets, emit K-set CSV + SVG
* rates  -- fit a decay rate to a trace's objective gaps

Configs are flat ``key = value`` text with ``[section]`` headers. The env
var NMDESC_SEED overrides any configured seed. Exit codes: 0 success,
2 usage or config error, 3 solver failure, 4 I/O failure.
"""

import argparse
import concurrent.futures
import csv
import math
import os
import sys
from dataclasses import fields, replace

import numpy as np

from . import palm, pg, problems
from .diagnostics import (
    average_curves,
    classify_ksets,
    condition_partial_sums,
    evolution_curve,
    fit_rate,
    rate_fit_tail,
    verify_H1,
    verify_H2,
)
from .linalg import RngStream, gaussian_fill, spectral_norm
from .nls import BacktrackCapError
from .svgplot import write_line_plot
from .trace import (
    COLUMNS,
    TRACE_VERSION,
    TraceParseError,
    TraceRecord,
    read_trace_csv,
    with_kset_flags,
    write_trace_csv,
)

PG_SOLVERS = ("pgenls", "pgnls", "pgels", "pgls")
PALM_SOLVERS = ("palmenls", "palmnls", "palmels", "palmls")
BASELINES = ("fista", "refista", "palm", "palme")
ALL_SOLVERS = PG_SOLVERS + PALM_SOLVERS + BASELINES


class UsageError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


# -- config parsing --------------------------------------------------------------

def parse_config(text):
    """Flat key=value sections. Lines starting with # are comments."""
    sections = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected key = value")
        if current is None:
            raise UsageError(f"config line {n}: key outside any [section]")
        key, _, value = line.partition("=")
        sections[current][key.strip()] = value.strip()
    return sections


def _coerce(value, kind):
    if kind is int:
        return int(value)
    if kind is float:
        if value.lower() in ("inf", "infinity"):
            return math.inf
        return float(value)
    return value


_INT_FIELDS = {"m", "max_backtracks", "max_iters"}
_STR_FIELDS = {"beta_rule"}


def _solver_config(cls, options):
    cfg = cls()
    known = {f.name for f in fields(cls)}
    updates = {}
    for key, value in options.items():
        if key not in known:
            raise UsageError(f"unknown solver option {key!r}")
        if key in _INT_FIELDS:
            updates[key] = _coerce(value, int)
        elif key in _STR_FIELDS:
            updates[key] = value
        else:
            updates[key] = _coerce(value, float)
    return replace(cfg, **updates)


def effective_seed(configured):
    env = os.environ.get("NMDESC_SEED")
    if env is not None:
        return int(env)
    return int(configured)


# -- problem construction --------------------------------------------------------

def build_instance(section, seed):
    """Build or load an instance from a [problem] config section."""
    if "instance" in section:
        return problems.load_instance(section["instance"])
    kind = section.get("kind")
    if kind == "logreg":
        return problems.gen_logreg(
            n=int(section["n"]), p=int(section["p"]), s=int(section["s"]),
            seed=seed, lam=float(section.get("lam", 0.1)),
            mu=float(section.get("mu", 1e-10)),
        )
    if kind == "mc":
        r = section.get("r")
        return problems.gen_mc(
            n1=int(section["n1"]), n2=int(section["n2"]),
            r_star=int(section["rstar"]), num_samples=int(section["samples"]),
            sigma=float(section.get("sigma", 0.1)), seed=seed,
            r=None if r is None else int(r),
            lam=float(section.get("lam", 1.0)),
            mu=float(section.get("mu", 1e-10)),
        )
    raise UsageError("problem kind must be 'logreg' or 'mc' (or give instance=PATH)")


def default_start(instance, seed):
    """Deterministic starting point for an instance: zeros for the vector
    model, seeded Gaussian factors for the factor model."""
    if isinstance(instance, problems.LogRegInstance):
        return np.zeros(instance.p + 1)
    rng = RngStream(seed).spawn(1)
    u0 = gaussian_fill(rng, (instance.n1, instance.r)) / math.sqrt(instance.r)
    v0 = gaussian_fill(rng, (instance.n2, instance.r)) / math.sqrt(instance.r)
    return u0, v0


def solve(name, instance, options, seed, lam=None):
    """Dispatch one solver by name on an instance; returns a RunResult."""
    if name not in ALL_SOLVERS:
        raise UsageError(f"unknown solver {name!r}")
    start = default_start(instance, seed)
    if name in PG_SOLVERS + ("fista", "refista"):
        if not isinstance(instance, problems.LogRegInstance):
            raise UsageError(f"solver {name!r} needs a logreg instance")
        problem = problems.logreg_problem(instance, lam=lam)
        cfg = _solver_config(pg.PgConfig, options)
        if cfg.tau0 is None and "tau0" not in options:
            cfg = replace(cfg, tau0=10.0 / spectral_norm(instance.A_tilde, tol=1e-8))
        if name in PG_SOLVERS:
            cfg = pg.variant_config(name, cfg)
            return pg.pg_run(problem, start, cfg)
        if name == "fista":
            return pg.fista_run(problem, start, cfg)
        return pg.refista_run(problem, start, cfg)
    if not isinstance(instance, problems.McInstance):
        raise UsageError(f"solver {name!r} needs an mc instance")
    problem = problems.mc_problem(instance, lam=lam)
    cfg = _solver_config(palm.PalmConfig, options)
    u0, v0 = start
    if name in PALM_SOLVERS:
        cfg = palm.variant_config(name, cfg)
        return palm.palm_run(problem, u0, v0, cfg)
    return palm.palm_baseline_run(
        problem, u0, v0, cfg, extrapolate=(name == "palme")
    )


def result_summary(name, instance, result):
    lines = [
        f"solver: {name}",
        f"iterations: {result.records[-1].k}",
        f"final objective: {result.records[-1].objective:.10g}",
        f"stop reason: {result.reason}",
        f"wall time: {result.records[-1].time_s:.3f} s",
    ]
    if isinstance(instance, problems.LogRegInstance):
        metrics = problems.sparsity_metrics(
            x=result.x, skip_indices=(instance.p,)
        )
        lines.append(f"support size: {metrics['support']}")
    else:
        metrics = problems.sparsity_metrics(factors=result.x)
        lines.append(
            f"nonzero columns: U={metrics['cols_U']} V={metrics['cols_V']}"
        )
    return "\n".join(lines)


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args):
    if args.family == "logreg":
        instance = problems.gen_logreg(
            n=args.n, p=args.p, s=args.s, seed=args.seed,
            lam=args.lam, mu=args.mu,
        )
        problems.save_instance(args.out, instance)
        norm = spectral_norm(instance.A_tilde, tol=1e-8)
        print(
            f"logreg instance: n={instance.n} p={instance.p} s={instance.s} "
            f"seed={instance.seed} ||A~||={norm:.6g} -> {args.out}"
        )
    else:
        instance = problems.gen_mc(
            n1=args.n1, n2=args.n2, r_star=args.rstar,
            num_samples=args.samples, sigma=args.sigma, seed=args.seed,
            r=args.r, lam=args.lam, mu=args.mu,
        )
        problems.save_instance(args.out, instance)
        frac = instance.num_obs / (instance.n1 * instance.n2)
        print(
            f"mc instance: {instance.n1}x{instance.n2} rstar={instance.r_star} "
            f"r={instance.r} seed={instance.seed} |Omega|={instance.num_obs} "
            f"({frac:.3%} observed) -> {args.out}"
        )
    return 0


def cmd_run(args):
    with open(args.config) as f:
        cfg = parse_config(f.read())
    if "problem" not in cfg or "solver" not in cfg:
        raise UsageError("config needs [problem] and [solver] sections")
    seed = effective_seed(cfg["problem"].get("seed", 0))
    instance = build_instance(cfg["problem"], seed)
    solver_opts = dict(cfg["solver"])
    name = solver_opts.pop("name", None)
    if name is None:
        raise UsageError("[solver] section needs name=...")
    out = cfg.get("output", {}).get("trace", "trace.csv")
    _ensure_parent(out)
    try:
        result = solve(name, instance, solver_opts, seed)
    except BacktrackCapError as e:
        if getattr(e, "records", None):
            write_trace_csv(out, e.records, zero_times=args.replay)
            print(f"partial trace ({len(e.records)} rows) -> {out}", file=sys.stderr)
        raise SolverError(str(e)) from e
    write_trace_csv(out, result.records, zero_times=args.replay)
    print(result_summary(name, instance, result))
    print(f"trace ({len(result.records)} rows) -> {out}")
    return 0


def _bench_trial(cfg, solvers, solver_opts, base_seed, trial, lam):
    """Run every solver of one bench trial; returns name -> RunResult/None."""
    seed = base_seed + trial
    instance = build_instance(cfg["problem"], seed)
    out = {}
    for name in solvers:
        try:
            out[name] = solve(name, instance, solver_opts.get(name, {}), seed, lam=lam)
        except BacktrackCapError:
            out[name] = None
    return out


def cmd_bench(args):
    with open(args.config) as f:
        cfg = parse_config(f.read())
    if "problem" not in cfg or "bench" not in cfg:
        raise UsageError("config needs [problem] and [bench] sections")
    bench = cfg["bench"]
    solvers = [s.strip() for s in bench.get("solvers", "").split(",") if s.strip()]
    if len(solvers) < 2:
        raise UsageError("bench needs at least 2 solvers (solvers=a,b,...)")
    trials = int(bench.get("trials", 1))
    if trials < 1:
        raise UsageError("bench needs at least 1 trial")
    grid_points = int(bench.get("grid_points", 50))
    lam = bench.get("lam")
    lam = None if lam is None else float(lam)
    out_dir = bench.get("out_dir", "bench_out")
    os.makedirs(out_dir, exist_ok=True)
    base_seed = effective_seed(cfg["problem"].get("seed", 0))
    solver_opts = {
        name: dict(cfg.get(f"solver.{name}", {})) for name in solvers
    }

    jobs = max(1, args.jobs)
    results = [None] * trials
    if jobs == 1:
        for t in range(trials):
            results[t] = _bench_trial(cfg, solvers, solver_opts, base_seed, t, lam)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(
                    _bench_trial, cfg, solvers, solver_opts, base_seed, t, lam
                ): t
                for t in range(trials)
            }
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()

    # persist per-trial traces and drop variants that failed every trial
    alive = {name: 0 for name in solvers}
    for t, trial_results in enumerate(results):
        for name, result in trial_results.items():
            if result is None:
                continue
            alive[name] += 1
            write_trace_csv(
                os.path.join(out_dir, f"trace_{name}_trial{t}.csv"),
                result.records, zero_times=args.replay,
            )
    kept = [name for name in solvers if alive[name] > 0]
    for name in solvers:
        if alive[name] == 0:
            print(f"note: solver {name} failed all trials; excluded", file=sys.stderr)
    if len(kept) < 2:
        raise SolverError("fewer than 2 solvers produced any successful trial")

    # shared evaluation grid; replay mode uses the iteration count as a
    # deterministic stand-in for wall time
    def t_axis(records):
        if args.replay:
            return [float(r.k) for r in records]
        return [r.time_s for r in records]

    t_max = 0.0
    for trial_results in results:
        for name in kept:
            result = trial_results[name]
            if result is not None:
                t_max = max(t_max, t_axis(result.records)[-1])
    grid = np.linspace(0.0, t_max if t_max > 0 else 1.0, grid_points)

    per_trial = []
    for trial_results in results:
        traces = {}
        for name in kept:
            result = trial_results[name]
            if result is None:
                continue
            recs = result.records
            if args.replay:
                recs = [replace(r, time_s=float(r.k)) for r in recs]
            traces[name] = recs
        if len(traces) >= 2:
            per_trial.append(evolution_curve(traces, grid))
    if not per_trial:
        raise SolverError("no trial had 2 or more successful solvers")
    # average each solver over the trials where it appears
    curves = {}
    for name in kept:
        rows = [trial[name] for trial in per_trial if name in trial]
        if rows:
            curves[name] = average_curves([{name: r} for r in rows])[name]

    csv_path = os.path.join(out_dir, "bench_e.csv")
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t"] + list(curves))
        for i, t in enumerate(grid):
            w.writerow(
                [format(float(t), ".17g")]
                + [format(float(curves[name][i]), ".17g") for name in curves]
            )
    svg_path = os.path.join(out_dir, "bench_e.svg")
    write_line_plot(
        svg_path,
        {name: (grid, curves[name]) for name in curves},
        title="objective evolution",
        xlabel="iterations" if args.replay else "time (s)",
        ylabel="E(t)",
        logy=True,
    )
    print(f"E(t) over {len(per_trial)} trial(s), {len(curves)} solvers -> {csv_path}")
    print(f"plot -> {svg_path}")
    return 0


def _read_trace_flexible(path):
    """Trace parse that tolerates a missing witness column; returns
    (records, has_witness)."""
    try:
        return read_trace_csv(path), True
    except TraceParseError as e:
        if e.line != 2:
            raise
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    degraded = [c for c in COLUMNS if c != "witness_norm"]
    if len(rows) < 2 or rows[0][0] != TRACE_VERSION or rows[1] != degraded:
        raise TraceParseError("unexpected column header", 2)
    records = []
    for n, row in enumerate(rows[2:], start=3):
        if not row:
            continue
        if len(row) != len(degraded):
            raise TraceParseError(f"expected {len(degraded)} fields", n)
        vals = dict(zip(degraded, row))
        records.append(
            TraceRecord(
                k=int(vals["k"]), time_s=float(vals["time_s"]),
                objective=float(vals["objective"]),
                potential=float(vals["potential"]),
                step_norm=float(vals["step_norm"]), witness_norm=math.nan,
                beta=float(vals["beta"]), tau1=float(vals["tau1"]),
                tau2=float(vals["tau2"]), backtracks=int(vals["backtracks"]),
                ell=int(vals["ell"]), in_K1=bool(int(vals["in_K1"])),
                in_K2=bool(int(vals["in_K2"])), in_K31=bool(int(vals["in_K31"])),
            )
        )
    return records, False


def cmd_diag(args):
    records, has_witness = _read_trace_flexible(args.trace)
    if not has_witness:
        print("warning: no witness column; skipping the relative-error check",
              file=sys.stderr)
    if len(records) < 2:
        raise UsageError("trace has no accepted iterations to classify")
    h1 = verify_H1(records, a=args.a, m=args.m)
    status = "pass" if h1.passed else f"FAIL at k={h1.first_violation}"
    print(f"H1 (a={args.a:g}, m={args.m}): {status} over {h1.checked} steps")
    if has_witness and args.b is not None:
        h2 = verify_H2(records, b=args.b)
        status = "pass" if h2.passed else f"FAIL at k={h2.first_violation}"
        print(f"H2 (b={args.b:g}): {status}, max ratio {h2.max_ratio:.6g}")
    report = classify_ksets(records, a=args.a, theta=args.theta, m=args.m)
    sums = condition_partial_sums(records, report)
    n1 = sum(1 for f in report.flags.values() if f[0])
    n2 = sum(1 for f in report.flags.values() if f[1])
    n31 = sum(1 for f in report.flags.values() if f[2])
    print(
        f"K-sets (theta={args.theta:g}, omega* estimated {report.omega_star:.10g}): "
        f"|K1|={n1} |K2|={n2} |K31|={n31}"
    )
    prefix = args.out_prefix
    _ensure_parent(prefix + "_ksets.csv")
    write_trace_csv(prefix + "_ksets.csv", with_kset_flags(records, report))
    ks = np.arange(1, len(report.gaps) + 1)
    write_line_plot(
        prefix + "_partial_sums.svg",
        {
            "K1 partial sum": (ks, sums["k1_partial"]),
            "reference 3000/sqrt(k^2.1)": (ks, sums["reference"]),
        },
        title="partial sums",
        xlabel="k",
        ylabel="cumulative sqrt(gap)",
    )
    print(f"K-set CSV -> {prefix}_ksets.csv")
    print(f"partial-sum plot -> {prefix}_partial_sums.svg")
    return 0


def cmd_rates(args):
    records, _ = _read_trace_flexible(args.trace)
    tail = rate_fit_tail(records)
    fit = fit_rate(tail, mode=args.mode)
    if fit.mode == "linear":
        print(
            f"linear fit: rho={fit.rate:.6g} R^2={fit.r_squared:.4f} "
            f"({fit.points} tail points)"
        )
    else:
        print(
            f"sublinear fit: slope={fit.rate:.6g} theta={fit.theta:.6g} "
            f"R^2={fit.r_squared:.4f} ({fit.points} tail points)"
        )
    return 0


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


# -- entry point -----------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="nmdesc",
        description="nonmonotone line-search solvers and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a problem instance")
    fam = g.add_subparsers(dest="family", required=True)
    gl = fam.add_parser("logreg")
    gl.add_argument("--n", type=int, required=True)
    gl.add_argument("--p", type=int, required=True)
    gl.add_argument("--s", type=int, required=True)
    gl.add_argument("--seed", type=int, required=True)
    gl.add_argument("--lam", type=float, default=0.1)
    gl.add_argument("--mu", type=float, default=1e-10)
    gl.add_argument("--out", default="logreg_instance.txt")
    gm = fam.add_parser("mc")
    gm.add_argument("--n1", type=int, required=True)
    gm.add_argument("--n2", type=int, required=True)
    gm.add_argument("--rstar", type=int, required=True)
    gm.add_argument("--samples", type=int, required=True)
    gm.add_argument("--sigma", type=float, default=0.1)
    gm.add_argument("--seed", type=int, required=True)
    gm.add_argument("--r", type=int, default=None)
    gm.add_argument("--lam", type=float, default=1.0)
    gm.add_argument("--mu", type=float, default=1e-10)
    gm.add_argument("--out", default="mc_instance.txt")

    r = sub.add_parser("run", help="run one solver from a config file")
    r.add_argument("config")
    r.add_argument("--replay", action="store_true",
                   help="zero wall-time columns for byte-exact comparisons")

    b = sub.add_parser("bench", help="compare solvers, emit E(t) CSV and SVG")
    b.add_argument("config")
    b.add_argument("--replay", action="store_true")
    b.add_argument("--jobs", type=int, default=1,
                   help="max concurrent trials")

    d = sub.add_parser("diag", help="index-set diagnostics for a trace CSV")
    d.add_argument("trace")
    d.add_argument("--a", type=float, default=0.5e-5,
                   help="gap coefficient (default alpha/2 for alpha=1e-5)")
    d.add_argument("--theta", type=float, default=0.5)
    d.add_argument("--m", type=int, default=5)
    d.add_argument("--b", type=float, default=None,
                   help="relative-error constant; enables the H2 check")
    d.add_argument("--out-prefix", default="diag")

    ra = sub.add_parser("rates", help="fit a decay rate to a trace")
    ra.add_argument("trace")
    ra.add_argument("--mode", choices=("linear", "sublinear"), default="linear")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    handlers = {
        "gen": cmd_gen,
        "run": cmd_run,
        "bench": cmd_bench,
        "diag": cmd_diag,
        "rates": cmd_rates,
    }
    try:
        return handlers[args.command](args)
    except (UsageError, TraceParseError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SolverError, BacktrackCapError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
