"""``swnc`` command line: simulate, gen-trace, fit, bounds, report."""
import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (DelayBoundInput, EmpiricalDistribution, bound_curves,
                       classify_llc_urllc, delay_upper_bound, summarize)
from .channel import ChannelError, GEParams, fit_ge, ge_generate, ge_stationary
from .engine import METRICS, sweep
from .io import (ConfigError, dumps, experiences_json, fmt, load_config, manifest,
                 read_trace, summary_csv, trace_text, write_all)

log = logging.getLogger("swnc")

ANCHOR_EPS = 0.3


class CliError(Exception):
    pass


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def cmd_simulate(args):
    plan = load_config(args.config)
    workers = args.workers if args.workers is not None else plan.workers
    rows = sweep(plan.configs, workers=workers)
    failed = [r for r in rows if not r.ok]
    for r in failed:
        log.error("%s on %s: %s", r.config.scheme, r.config.mode, r.error)
    if failed:
        raise CliError(f"{len(failed)} of {len(rows)} runs failed; no report written")
    for r in rows:
        if r.datapoint.incomplete:
            log.warning("%s: %d experiences incomplete (trace exhausted); report is partial",
                        r.config.scheme, r.datapoint.incomplete)
    out = Path(args.out)
    summary, exps, man = out / "summary.csv", out / "experiences.json", out / "manifest.json"
    seeds = sorted({e.seed for r in rows for e in r.datapoint.experiences})
    inputs = [Path(args.config)] + ([plan.trace_path] if plan.trace_path else [])
    files = {
        summary: summary_csv(rows),
        exps: experiences_json(rows),
    }
    files[man] = manifest("simulate", plan.echo, seeds, inputs, [summary, exps])
    write_all(files)
    print(files[summary], end="")


def cmd_gen_trace(args):
    try:
        p = GEParams(args.s, args.q, args.eps_g, args.eps_b)
        ge_stationary(p)
    except ChannelError as exc:
        raise CliError(str(exc)) from None
    if args.slots <= 0:
        raise CliError("--slots must be positive")
    label = args.label or f"GE(s={args.s:g};q={args.q:g})"
    prof = ge_generate(p, args.slots, rtt_us=args.rtt_us, seed=args.seed,
                       slot_us=args.slot_us, label=label)
    out = Path(args.out)
    man = out.with_name(out.name + ".manifest.json")
    echo = {"s": args.s, "q": args.q, "eps_G": args.eps_g, "eps_B": args.eps_b,
            "slots": args.slots, "rtt_us": args.rtt_us, "slot_us": args.slot_us,
            "label": label}
    write_all({out: trace_text(prof),
               man: manifest("gen-trace", echo, [args.seed], [], [out])})


def fit_report(profile):
    p = fit_ge(profile)
    pi_g, pi_b, eps = ge_stationary(p)
    return {"s": p.s, "q": p.q, "eps_mean": eps, "pi_G": pi_g, "pi_B": pi_b,
            "mean_burst": p.mean_burst, "slots": len(profile), "label": profile.label}


def cmd_fit(args):
    try:
        report = fit_report(read_trace(args.trace))
    except ChannelError as exc:
        raise CliError(str(exc)) from None
    text = dumps(report)
    if args.out:
        out = Path(args.out)
        man = out.with_name(out.name + ".manifest.json")
        write_all({out: text, man: manifest("fit", {"trace": str(args.trace)}, [],
                                            [Path(args.trace)], [out])})
    print(text, end="")


def bounds_table(alphas, s, rtt, eps_hi, points, th=0.0):
    grid = np.linspace(0.0, eps_hi, points)
    if not np.isclose(grid, ANCHOR_EPS).any() and ANCHOR_EPS <= eps_hi:
        grid = np.sort(np.append(grid, ANCHOR_EPS))
    curves = bound_curves(alphas, grid, s, rtt, th=th)
    return [(a, e, v) for a in alphas for e, v in zip(grid, curves[a])]


def cmd_bounds(args):
    if not 0.0 < args.s < 1.0:
        raise CliError(f"--s must lie in (0, 1), got {args.s}")
    if not 0.0 <= args.eps_max < 1.0 or args.points < 2:
        raise CliError("--eps-max must be in [0, 1) and --points >= 2")
    if any(a < 0 for a in args.alphas):
        raise CliError("alphas must be non-negative")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("alpha", "x", "value"))
    for a, e, v in bounds_table(args.alphas, args.s, args.rtt, args.eps_max, args.points, args.th):
        w.writerow((f"{a:g}", fmt(e), "inf" if not np.isfinite(v) else fmt(v)))
    text = buf.getvalue()
    if args.out:
        out = Path(args.out)
        man = out.with_name(out.name + ".manifest.json")
        echo = {"s": args.s, "rtt": args.rtt, "alphas": args.alphas,
                "eps_max": args.eps_max, "points": args.points, "th": args.th}
        write_all({out: text, man: manifest("bounds", echo, [], [], [out])})
    else:
        print(text, end="")
    anchor = delay_upper_bound(DelayBoundInput.for_ge(ANCHOR_EPS, args.s, args.rtt, 3.0))
    log.info("anchor alpha=3 eps=%.1f: %.2f slots", ANCHOR_EPS, anchor)


def cmd_report(args):
    path = Path(args.experiences)
    try:
        recs = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError(f"experiences file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(recs, list) or not recs:
        raise CliError(f"{path}: expected a non-empty list of experience records")
    groups = {}
    for r in recs:
        groups.setdefault((r["mode"], r["algorithm"]), []).append(r)
    key = {"throughput": "normalized_throughput", "mean_delay": "mean_inorder_delay_slots",
           "max_delay": "max_inorder_delay_slots"}
    lines = [f"{'mode':<24} {'algorithm':<8} {'metric':<11} {'mean':>9} {'stdev':>9} "
             f"{'p99':>9} {'p99 ms':>8}  tags"]
    for (mode, alg), rs in groups.items():
        slot_us = rs[0].get("slot_us", 450)
        summ = {m: summarize([r[key[m]] for r in rs]) for m in METRICS}
        tags = ",".join(classify_llc_urllc(summ, slot_us)) or "-"
        for m in METRICS:
            s = summ[m]
            ms = "" if m == "throughput" else f"{s['p99'] * slot_us / 1000:.2f}"
            lines.append(f"{mode:<24} {alg:<8} {m:<11} {s['mean']:>9.3f} {s['stdev']:>9.3f} "
                         f"{s['p99']:>9.3f} {ms:>8}  {tags if m == 'max_delay' else ''}".rstrip())
    print("\n".join(lines))
    if args.cdf:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("mode", "algorithm", "metric", "x", "value"))
        for (mode, alg), rs in groups.items():
            for m in ("mean_delay", "max_delay"):
                xs, fs = EmpiricalDistribution([r[key[m]] for r in rs]).table()
                for x, f in zip(xs, fs):
                    w.writerow((mode, alg, m, fmt(x), fmt(f)))
        out = Path(args.cdf)
        man = out.with_name(out.name + ".manifest.json")
        write_all({out: buf.getvalue(),
                   man: manifest("report", {"experiences": str(path)}, [], [path], [out])})


def build_parser():
    ap = argparse.ArgumentParser(prog="swnc", description=__doc__)
    ap.add_argument("--version", action="version", version=f"swnc {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run every scheme in an INI config")
    p.add_argument("config")
    p.add_argument("-o", "--out", default="results", help="output directory")
    p.add_argument("-j", "--workers", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-trace", help="sample a Gilbert-Elliott trace")
    p.add_argument("--s", type=float, required=True, help="burst end probability")
    p.add_argument("--q", type=float, required=True, help="burst start probability")
    p.add_argument("--eps-g", type=float, default=0.0)
    p.add_argument("--eps-b", type=float, default=1.0)
    p.add_argument("--slots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rtt-us", type=int, default=7200)
    p.add_argument("--slot-us", type=int, default=450)
    p.add_argument("--label", default="")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("fit", help="fit GE parameters to a trace")
    p.add_argument("trace")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bounds", help="delay upper-bound curves")
    p.add_argument("--s", type=float, default=0.17)
    p.add_argument("--rtt", type=float, default=16)
    p.add_argument("--alphas", type=_floats, default=[0.0, 1.0, 2.0, 3.0])
    p.add_argument("--eps-max", type=float, default=0.4)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--th", type=float, default=0.0)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("report", help="summary table with LLC/URLLC tags")
    p.add_argument("experiences", help="experiences.json written by simulate")
    p.add_argument("--cdf", help="also write empirical delay CDF tables to this CSV")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="swnc: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (CliError, ConfigError, ChannelError) as exc:
        print(f"swnc: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"swnc: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
