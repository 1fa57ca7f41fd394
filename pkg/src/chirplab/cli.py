"""``chirplab`` command-line entry point.

Every command writes CSV/JSON only and records its resolved arguments in
``<out-dir>/<command>.config.json``.  Failures exit non-zero with a JSON
error object on stderr and remove any partially written outputs.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import analysis, chirp, clustering, lifelong
from .sopr import sopr as compute_sopr
from ._parallel import parallel_map
from .gridworld import load_variants, random_variant, variants_from_json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

RECOMMENDED_MIN_PAIRS = 100


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _emit_error("UsageError", message)
        sys.exit(2)


def _emit_error(kind, message):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


class Outputs:
    """Tracks files written by a command so a failure can remove them."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.written = []

    def path(self, explicit, default_name):
        p = explicit if explicit else os.path.join(self.out_dir, default_name)
        parent = os.path.dirname(p)
        if parent:
            os.makedirs(parent, exist_ok=True)
        self.written.append(p)
        return p

    def validate(self):
        missing = [p for p in self.written if not os.path.isfile(p) or os.path.getsize(p) == 0]
        if missing:
            raise CliError(f"outputs missing or empty: {missing}")

    def cleanup(self):
        for p in self.written:
            if os.path.exists(p):
                os.remove(p)


def _write_json(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def load_sampling_config(path, **defaults) -> chirp.SamplingConfig:
    """Read a sampling TOML; keys it omits fall back to ``defaults``."""
    data = {}
    if path:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    for k, v in defaults.items():
        data.setdefault(k, v)
    return chirp.SamplingConfig(**data)


# --- shared computations ---------------------------------------------------------------

def _pair_values(job):
    m_i, m_j = job
    return chirp.chirp_exact(m_i, m_j), compute_sopr(m_i, m_j).value


def sample_variant_pairs(n_pairs, seed):
    rng = np.random.default_rng(seed)
    return [(random_variant(rng), random_variant(rng)) for _ in range(n_pairs)]


def _pairs_json(pairs):
    variants, index = [], []
    for k, (a, b) in enumerate(pairs):
        variants += [a.to_dict(), b.to_dict()]
        index.append([2 * k, 2 * k + 1])
    return {"variants": variants, "pairs": index}


def _strategy(kind, k, task_to_policy=None):
    kind = lifelong.ReuseKind(kind)
    if kind is lifelong.ReuseKind.CPR:
        return lifelong.ReuseStrategy.cpr(task_to_policy)
    if kind is lifelong.ReuseKind.LPR:
        return lifelong.ReuseStrategy.lpr(k)
    return lifelong.ReuseStrategy.single()


def _parse_seeds(text):
    seeds = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


# --- commands --------------------------------------------------------------------------

def cmd_study_simplegrid(args, out):
    pairs = sample_variant_pairs(args.n_pairs, args.seed)
    values = parallel_map(_pair_values, pairs, args.workers)
    samples = [analysis.PairedSample(c, s, k) for k, (c, s) in enumerate(values)]

    _write_json(out.path(None, "pairs.json"), _pairs_json(pairs))
    analysis.write_pairs_csv(samples, out.path(None, "pairs.csv"))
    report = analysis.correlate(samples, args.permutations, args.seed).to_dict()
    report["small_sample"] = args.n_pairs < RECOMMENDED_MIN_PAIRS
    if report["small_sample"]:
        report["warning"] = (f"n={args.n_pairs} is below the recommended "
                             f"{RECOMMENDED_MIN_PAIRS} pairs")
    n_bins = min(args.bins, len(samples))
    if n_bins >= 5:
        bins = analysis.bin_equal_volume(samples, n_bins)
        curve = analysis.fit_calibration(bins)
        curve.save(out.path(None, "curve.json"))
        report["bins"] = [b._asdict() for b in bins]
    _write_json(out.path(None, "report.json"), report)
    return report


def cmd_estimator_study(args, out):
    if args.n_s > 1296:
        raise CliError("n_s cannot exceed the 1296 state-action pairs")
    schemes = [chirp.Scheme(s) for s in args.schemes.split(",")]
    pairs = sample_variant_pairs(args.n_pairs, args.seed)
    exact = [v[0] for v in parallel_map(_exact_only, pairs, args.workers)]
    rows, summary = [], {}
    for scheme in schemes:
        cfg = chirp.SamplingConfig(scheme, args.n_s, args.n_t, args.seed)
        jobs = [(a, b, dataclasses.replace(cfg, seed=chirp.pair_seed(args.seed, 2 * k, 2 * k + 1, 0)))
                for k, (a, b) in enumerate(pairs)]
        est = parallel_map(_estimate_only, jobs, args.workers)
        errs = np.array(est) - np.array(exact)
        rows += [[k, scheme.value, repr(exact[k]), repr(est[k]), repr(float(errs[k]))]
                 for k in range(len(pairs))]
        summary[scheme.value] = {"mean_error": float(errs.mean()),
                                 "std_error": float(errs.std(ddof=1)) if len(errs) > 1 else 0.0,
                                 "n": len(errs)}
    path = out.path(args.out, "errors.csv")
    with open(path, "w") as f:
        f.write("pair_id,scheme,exact,estimate,error\n")
        for r in rows:
            f.write(",".join(str(v) for v in r) + "\n")
        for name, s in summary.items():
            f.write(f"mean,{name},,,{s['mean_error']!r}\n")
            f.write(f"std,{name},,,{s['std_error']!r}\n")
    _write_json(out.path(None, "errors_summary.json"), summary)
    return summary


def _exact_only(job):
    return (chirp.chirp_exact(*job),)


def _estimate_only(job):
    return chirp.estimate_chirp(*job)


def _sopr_job(job):
    return compute_sopr(*job)


def cmd_sopr(args, out):
    with open(args.pairs) as f:
        data = json.load(f)
    variants = variants_from_json(data["variants"])
    index = [tuple(p) for p in data["pairs"]]
    results = parallel_map(_sopr_job, [(variants[i], variants[j]) for i, j in index], args.workers)
    path = out.path(args.out, "sopr.csv")
    with open(path, "w") as f:
        f.write("i,j,sopr,numerator,denominator\n")
        for (i, j), r in zip(index, results):
            f.write(f"{i},{j},{r.value!r},{r.numerator!r},{r.denominator!r}\n")
    return {"n": len(results)}


def cmd_chirp(args, out):
    mdps = load_variants(args.variants)
    if args.mode == "exact":
        d = chirp.distance_matrix(mdps, None, workers=args.workers)
    else:
        cfg = load_sampling_config(args.config, seed=args.seed)
        d = chirp.distance_matrix(mdps, cfg, args.repeats, workers=args.workers)
    d.to_csv(out.path(args.out, "matrix.csv"))
    return {"n": d.n}


def cmd_analyze(args, out):
    samples = analysis.read_pairs_csv(args.input)
    if args.action == "correlate":
        report = analysis.correlate(samples, args.permutations, args.seed).to_dict()
        _write_json(out.path(args.out, "report.json"), report)
        return report
    curve = analysis.fit_calibration(analysis.bin_equal_volume(samples, args.bins))
    curve.save(out.path(args.out, "curve.json"))
    return curve.to_dict()


def cmd_cluster(args, out):
    d = chirp.DistanceMatrix.from_csv(args.matrix)
    a = clustering.k_medoids(d, args.k, args.seed)
    a.save(out.path(args.out, "assignment.json"), d.mdp_ids)
    return a.to_dict(d.mdp_ids)


def _scenario_matrix(scenario, args):
    if getattr(args, "matrix", None):
        return chirp.DistanceMatrix.from_csv(args.matrix)
    cfg = load_sampling_config(args.sampling, seed=args.seed)
    return chirp.distance_matrix(scenario.tasks, cfg, args.repeats, workers=args.workers)


def cmd_lifelong(args, out):
    if args.action == "report":
        log = lifelong.RunLog.from_csv(args.input)
        report = lifelong.evaluate_success(log, args.window)
        _write_json(out.path(args.out, "report.json"), report)
        return report
    scenario = lifelong.Scenario.load(args.scenario)
    mapping = None
    if args.strategy == "cpr":
        mapping = lifelong.cpr_policy_map(_scenario_matrix(scenario, args), args.k, args.seed)
    log = lifelong.run_scenario(scenario, _strategy(args.strategy, args.k, mapping), args.seed)
    log.to_csv(out.path(args.out, "runlog.csv"))
    return {"episodes": len(log)}


def _run_job(job):
    scenario, strategy, seed = job
    log = lifelong.run_scenario(scenario, strategy, seed)
    return log


def cmd_pipeline_cpr(args, out):
    scenario = lifelong.Scenario.load(args.scenario)
    seeds = _parse_seeds(args.seeds)
    d = _scenario_matrix(scenario, args)
    d.to_csv(out.path(None, "matrix.csv"))
    assignment = clustering.k_medoids(d, args.k, args.seed)
    assignment.save(out.path(None, "assignment.json"), d.mdp_ids)

    strategies = {
        "cpr": lifelong.ReuseStrategy.cpr(assignment.policy_ids),
        "lpr": lifelong.ReuseStrategy.lpr(args.k),
        "single": lifelong.ReuseStrategy.single(),
    }
    jobs = [(scenario, st, s) for st in strategies.values() for s in seeds]
    logs = parallel_map(_run_job, jobs, args.workers)
    comparison = {"k": args.k, "window": scenario.eval_window, "seeds": seeds, "strategies": {}}
    for name, st in strategies.items():
        runs = []
        for s in seeds:
            log = logs.pop(0)
            log.to_csv(out.path(None, os.path.join("runlogs", f"{name}_seed{s}.csv")))
            rep = lifelong.evaluate_success(log, scenario.eval_window)
            runs.append({"seed": s, **rep["overall"]})
        rates = [r["rate"] for r in runs]
        comparison["strategies"][name] = {
            "mean_rate": float(np.mean(rates)),
            "task_to_policy": list(st.task_to_policy) if st.task_to_policy else None,
            "runs": runs,
        }
    _write_json(out.path(None, "comparison.json"), comparison)
    return {name: v["mean_rate"] for name, v in comparison["strategies"].items()}


COMMANDS = {
    "study-simplegrid": cmd_study_simplegrid,
    "estimator-study": cmd_estimator_study,
    "sopr": cmd_sopr,
    "chirp": cmd_chirp,
    "analyze": cmd_analyze,
    "cluster": cmd_cluster,
    "lifelong": cmd_lifelong,
    "pipeline-cpr": cmd_pipeline_cpr,
}


# --- parser -----------------------------------------------------------------------------

def _global_flags(p, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=default(0), help="base random seed")
    p.add_argument("--out-dir", default=default("."), help="directory for outputs")
    p.add_argument("--workers", type=int, default=default(1), help="worker processes")


def build_parser():
    parser = _Parser(prog="chirplab",
                     description="CHIRP and SOPR experiments on SimpleGrid gridworlds")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = add("study-simplegrid", "CHIRP vs SOPR over random variant pairs")
    p.add_argument("--n-pairs", type=int, default=1000)
    p.add_argument("--permutations", type=int, default=analysis.DEFAULT_PERMUTATIONS)
    p.add_argument("--bins", type=int, default=16)

    p = add("estimator-study", "sampled vs exact CHIRP errors")
    p.add_argument("--n-pairs", type=int, default=200)
    p.add_argument("--n-s", type=int, default=15)
    p.add_argument("--n-t", type=int, default=1)
    p.add_argument("--schemes", default="random,reward_shaped")
    p.add_argument("--out")

    p = add("sopr", "SOPR for listed variant pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out")

    p = add("chirp", "CHIRP distance matrix over variants")
    p.add_argument("mode", choices=["exact", "estimate"])
    p.add_argument("--variants", required=True)
    p.add_argument("--config", help="sampling TOML (estimate mode)")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out")

    p = add("analyze", "correlation report or calibration curve from pairs.csv")
    p.add_argument("action", choices=["correlate", "calibrate"])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--permutations", type=int, default=analysis.DEFAULT_PERMUTATIONS)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--out")

    p = add("cluster", "k-medoids over a distance matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")

    p = add("lifelong", "run or report an interleaved lifelong scenario")
    p.add_argument("action", choices=["run", "report"])
    p.add_argument("--scenario")
    p.add_argument("--strategy", choices=[k.value for k in lifelong.ReuseKind], default="cpr")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--matrix", help="precomputed CHIRP matrix for CPR")
    p.add_argument("--sampling", help="sampling TOML for the CPR matrix")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--in", dest="input")
    p.add_argument("--window", type=int, default=2000)
    p.add_argument("--out")

    p = sub.add_parser("replay", help="re-run a command from its persisted config")
    p.add_argument("config", help="a <command>.config.json written by an earlier run")

    p = add("pipeline-cpr", "matrix -> clustering -> CPR/LPR/single comparison")
    p.add_argument("--scenario", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seeds", default="0-9", help="e.g. 0-9 or 0,3,5")
    p.add_argument("--sampling", help="sampling TOML for the matrix")
    p.add_argument("--repeats", type=int, default=3)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        try:
            with open(args.config) as f:
                stored = json.load(f)["argv"]
        except (OSError, ValueError, KeyError) as exc:
            _emit_error(type(exc).__name__, f"cannot read config {args.config}: {exc}")
            return 1
        return main(stored)
    if args.command == "lifelong":
        need = "--scenario" if args.action == "run" else "--in"
        if (args.scenario if args.action == "run" else args.input) is None:
            parser.error(f"lifelong {args.action} requires {need}")

    os.makedirs(args.out_dir, exist_ok=True)
    out = Outputs(args.out_dir)
    try:
        result = COMMANDS[args.command](args, out)
        config = {"command": args.command, "argv": argv,
                  "args": {k: v for k, v in vars(args).items()}}
        _write_json(out.path(None, f"{args.command}.config.json"), config)
        out.validate()
    except Exception as exc:  # noqa: BLE001 - report every failure as JSON
        out.cleanup()
        _emit_error(type(exc).__name__, str(exc))
        return 1
    print(json.dumps(result, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
