"""Batch front door: parse specs and manifests, route to the engines, and
persist reproducible reports.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 infeasible computation. Reports are JSON written atomically (temp file
plus rename) and embed the full manifest and tool version; `--format csv`
writes a plot-ready projection instead. Logarithms are natural throughout.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, bounds, exact, mc, verify
from .errors import ConfigurationError, DomainError, InfeasibleError
from .sequences import (StepSequenceSpec, generate, read_sequence_file,
                        recurrence_event_window, write_sequence_file)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _manifest(command: str, inputs: dict, output_path: str | None) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "output_path": output_path,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "tool_version": __version__,
    }


def _g(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def emit_table(report: dict, fmt: str) -> str:
    """Project a report to the requested format; CSV uses 12 significant digits."""
    if fmt == "json":
        return json.dumps(report, indent=2, default=_json_default) + "\n"
    if fmt != "csv":
        raise ConfigurationError(f"unknown output format {fmt!r}")
    result = report.get("result", {})
    kind = result.get("kind", "")
    buf = io.StringIO()
    if kind == "fit":
        buf.write("n,q1,log_n,log_q1\n")
        for n, v in result.get("points", []):
            buf.write(f"{_g(n)},{_g(v)},{_g(math.log(n))},{_g(math.log(v))}\n")
        buf.write(f"slope,{_g(result['slope'])}\n")
        buf.write(f"intercept,{_g(result['intercept'])}\n")
        buf.write(f"r2,{_g(result['r_squared'])}\n")
    elif kind == "modular_dist":
        buf.write("residue,prob\n")
        for r, p in enumerate(result["probs"]):
            buf.write(f"{r},{_g(p)}\n")
    elif kind == "dist":
        buf.write("value,prob\n")
        for v, p in zip(result["support"], result["probs"]):
            buf.write(f"{v},{p if isinstance(p, str) else _g(p)}\n")
    elif kind == "mc_interval_hits":
        buf.write("event,hits,replicates,p_hat,wilson_lo,wilson_hi\n")
        for k, ev in result["per_event"].items():
            buf.write(f"{k},{ev['hits']},{ev['replicates']},{_g(ev['p_hat'])},"
                      f"{_g(ev['wilson_lo'])},{_g(ev['wilson_hi'])}\n")
    else:
        buf.write("key,value\n")
        for key, value in sorted(result.items()):
            if isinstance(value, (int, float, str, bool)):
                buf.write(f"{key},{_g(value)}\n")
    return buf.getvalue()


def _write_report(args, command: str, inputs: dict, result: dict) -> dict:
    report = {
        "tool_version": __version__,
        "manifest": _manifest(command, inputs, args.out),
        "result": result,
    }
    text = emit_table(report, args.format)
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return report


def _load_steps(args, n=None):
    if not args.seq:
        raise ConfigurationError("this command requires --seq")
    if not Path(args.seq).exists():
        raise ConfigurationError(f"sequence file not found: {args.seq}")
    return read_sequence_file(args.seq, n=n)


def cmd_gen(args) -> int:
    if not Path(args.spec).exists():
        raise ConfigurationError(f"spec file not found: {args.spec}")
    spec = StepSequenceSpec.from_dict(json.loads(Path(args.spec).read_text()))
    steps = generate(spec, args.n)
    if args.out:
        write_sequence_file(args.out, steps)
    else:
        for v in steps:
            print(v)
    return 0


def cmd_dist(args) -> int:
    steps = _load_steps(args, n=args.n)
    inputs = {"seq": args.seq, "n": args.n, "q": args.q, "mod": args.mod,
              "exact": bool(args.exact)}
    if args.mod:
        mod = exact.modular_walk_pmf(steps, args.mod)
        result = {"kind": "modular_dist", "modulus": mod.modulus,
                  "steps_applied": len(steps), "probs": mod.probs.tolist()}
        _write_report(args, "dist", inputs, result)
        return 0
    pmf = exact.walk_pmf(steps, exact=bool(args.exact))
    query = exact.concentration_q(pmf, args.q)
    probs = ([f"{p.numerator}/{p.denominator}" for p in pmf.probs]
             if pmf.exact else [float(p) for p in pmf.probs])
    result = {
        "kind": "dist",
        "steps_applied": pmf.steps_applied,
        "support": [int(v) for v in pmf.support],
        "probs": probs,
        "q": {"r": args.q,
              "value": (f"{query.result.numerator}/{query.result.denominator}"
                        if pmf.exact else float(query.result)),
              "argmax_x": query.argmax_x},
    }
    _write_report(args, "dist", inputs, result)
    return 0


def cmd_bounds(args) -> int:
    if args.exponent:
        query = bounds.anti_exponent_f(
            bounds.ExponentQuery(args.alpha, args.delta, args.gamma))
        inputs = {"alpha": args.alpha, "delta": args.delta, "gamma": args.gamma}
        result = {"kind": "exponent", "alpha": query.alpha, "delta": query.delta,
                  "gamma": query.gamma, "f_value": query.f_value,
                  "exponent": query.exponent, "branch": query.branch,
                  "branch_boundary": bounds.branch_boundary(args.alpha)}
        _write_report(args, "bounds", inputs, result)
        return 0
    if not args.check:
        raise ConfigurationError("bounds needs either --exponent or --check NAME")
    name = args.check.replace("_", "-")
    inputs = {"check": name, "seq": args.seq, "n": args.n, "m": args.m, "t": args.t}
    if name == "modular-elo":
        if not args.m:
            raise ConfigurationError("--check modular-elo requires --m")
        steps = _load_steps(args, n=args.n)
        compared = float(exact.modular_walk_pmf(steps, args.m).probs.max())
        cosine = bounds.cosine_product_bound(args.m, steps)
        report = bounds.make_report(
            "modular-elo", {"m": args.m, "n": len(steps), "cosine_bound": cosine},
            bounds.modular_elo_bound(args.m, len(steps)), compared)
    elif name == "elo":
        steps = _load_steps(args, n=args.n)
        c = min(steps)
        if c <= 0:
            raise ConfigurationError("elo check requires strictly positive steps")
        pmf = exact.walk_pmf(steps)
        compared = float(exact.concentration_q(pmf, 2 * c).result)
        report = bounds.make_report("elo", {"n": len(steps), "c": c},
                                    bounds.elo_bound(len(steps)), compared)
    elif name == "lower-anti":
        steps = _load_steps(args, n=args.n)
        variance = exact.summary_moments(steps).variance
        floor = bounds.lower_anti_floor(variance)
        q1 = float(exact.concentration_q(exact.walk_pmf(steps), 1.0).result)
        # a concentration (lower) bound: satisfied when floor <= exact Q1
        report = bounds.make_report("lower-anti",
                                    {"n": len(steps), "variance": float(variance),
                                     "floor": floor, "q1": q1}, q1, floor)
    elif name == "hoeffding":
        steps = _load_steps(args, n=args.n)
        l2 = exact.summary_moments(steps).l2_norm
        tail = float(exact.tail_prob(exact.walk_pmf(steps), args.t * l2))
        report = bounds.make_report("hoeffding",
                                    {"n": len(steps), "t": args.t, "l2_norm": l2},
                                    bounds.hoeffding_tail(l2, args.t), tail)
    else:
        raise ConfigurationError(f"unknown bound check {args.check!r}")
    result = {"kind": "bound", **report.to_dict()}
    _write_report(args, "bounds", inputs, result)
    return 0


def _load_manifest(path: str) -> mc.McRunManifest:
    if not Path(path).exists():
        raise ConfigurationError(f"manifest file not found: {path}")
    data = json.loads(Path(path).read_text())
    if "manifest" in data and "result" in data:  # replaying a persisted report
        data = data["result"].get("mc_manifest")
        if data is None:
            raise ConfigurationError(f"{path} is a report but not from an mc run")
    return mc.McRunManifest.from_dict(data)


def cmd_mc(args) -> int:
    manifest = _load_manifest(args.manifest)
    params = manifest.params
    if manifest.experiment == "interval_hits":
        if "windows" in params:
            windows = [tuple(w) for w in params["windows"]]
        elif "block_ks" in params:
            windows = [recurrence_event_window(int(k)) for k in params["block_ks"]]
        else:
            raise ConfigurationError(
                "interval_hits needs params.windows or params.block_ks")
        stats = mc.estimate_interval_hits(manifest, params.get("C", 0.0), windows,
                                          threads=args.threads)
        result = {
            "kind": "mc_interval_hits",
            "per_event": {str(k): vars(ev) for k, ev in stats.per_event.items()},
            "joint": {f"{j},{k}": c for (j, k), c in stats.joint.items()},
            "kochen_stone": mc.kochen_stone_estimate(stats, max(stats.per_event))
            if stats.per_event else {},
        }
    elif manifest.experiment == "q1_estimate":
        if "n" not in params:
            raise ConfigurationError("q1_estimate needs params.n")
        est = mc.estimate_q1(manifest, int(params["n"]), threads=args.threads)
        result = {"kind": "mc_q1", **vars(est)}
    elif manifest.experiment == "embed2d":
        k = int(params.get("k", 1))
        steps = np.asarray(generate(manifest.spec, manifest.horizon))
        mismatches = 0
        visits_total = 0
        for rep in range(manifest.replicates):
            trace = mc.block_pair_trace(manifest, rep, k, steps=steps)
            emb = mc.embed_2d(trace, k)
            zeros = int(np.count_nonzero(np.asarray(trace) == 0))
            visits_total += emb.visits_to_line
            if emb.visits_to_line != zeros:
                mismatches += 1
        result = {"kind": "mc_embed2d", "k": k, "traces": manifest.replicates,
                  "fidelity_mismatches": mismatches,
                  "mean_visits": visits_total / manifest.replicates}
    elif manifest.experiment == "coupling":
        d = float(params.get("d", 1.0))
        eps = float(params.get("epsilon", 0.1))
        episodes = wins = 0
        gap_ok = 0
        max_episodes = 0
        horizon = params.get("horizon")
        dps = int(params.get("dps", 60))
        for rep in range(manifest.replicates):
            pair = mc.simulate_coupling(manifest.spec, d, eps, manifest.master_seed,
                                        replicate=rep,
                                        horizon=int(horizon) if horizon else None,
                                        dps=dps)
            episodes += len(pair.episode_wins)
            wins += sum(pair.episode_wins)
            gap_ok += 0.0 <= pair.final_gap <= eps
            max_episodes = max(max_episodes, pair.episodes_used)
        result = {"kind": "mc_coupling", "d": d, "epsilon": eps,
                  "runs": manifest.replicates, "final_gap_in_range": gap_ok,
                  "episodes": episodes,
                  "per_episode_win_rate": wins / episodes if episodes else 1.0,
                  "max_episodes": max_episodes}
    else:
        raise ConfigurationError(f"unknown experiment {manifest.experiment!r}")
    result["mc_manifest"] = manifest.to_dict()
    result["generator"] = mc.GENERATOR_VERSION
    _write_report(args, "mc", {"manifest_path": args.manifest,
                               "manifest_body": manifest.to_dict(),
                               "threads": args.threads}, result)
    return 0


def _read_points(path: str):
    if not Path(path).exists():
        raise ConfigurationError(f"points file not found: {path}")
    points = []
    for idx, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.lower().startswith(("n,", "#")):
            continue
        parts = line.split(",")
        if len(parts) < 2:
            raise ConfigurationError(f"{path}:{idx}: expected 'n,value'")
        points.append((float(parts[0]), float(parts[1])))
    return points


def cmd_fit(args) -> int:
    points = _read_points(args.points)
    fit = mc.fit_exponent(points)
    result = {"kind": "fit", "points": points, "slope": fit.slope,
              "intercept": fit.intercept, "r_squared": fit.r_squared}
    _write_report(args, "fit", {"points": args.points}, result)
    return 0


def cmd_verify(args) -> int:
    knobs = {"seed": args.seed}
    if args.max_n is not None:
        knobs["max_n"] = args.max_n
    if args.cases is not None:
        knobs["cases"] = args.cases
    if args.max_m is not None:
        knobs["max_m"] = args.max_m
    res = verify.run_suite(args.suite, **knobs)
    result = {"kind": "verify", "suite": res.suite, "cases_run": res.cases_run,
              "failures": res.failures,
              "empirical_constants": res.empirical_constants}
    _write_report(args, "verify", {"suite": args.suite, **knobs}, result)
    return 0 if res.ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="report path (stdout when omitted)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for Monte Carlo sharding")
    common.add_argument("--seed", type=int, default=20240801, help="master seed")
    common.add_argument("--exact", action="store_true",
                        help="rational-probability mode for the exact engine")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report format (CSV is a lossy plotting projection)")

    parser = argparse.ArgumentParser(
        prog="rlab",
        description="Rademacher random walk laboratory: exact laws, bounds, "
                    "and reproducible Monte Carlo. Logs are natural (base e).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a step sequence")
    p.add_argument("--spec", required=True, help="JSON sequence spec file")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dist", parents=[common],
                       help="exact law of the walk and its concentration")
    p.add_argument("--seq", required=True,
                   help="sequence file (decimals per line, or a JSON spec)")
    p.add_argument("--n", type=int, default=None, help="prefix length")
    p.add_argument("--q", type=float, default=1.0, help="concentration window width")
    p.add_argument("--mod", type=int, default=None, help="residue distribution mod m")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("bounds", parents=[common], help="closed-form bound reports")
    p.add_argument("--check", help="elo | modular-elo | lower-anti | hoeffding")
    p.add_argument("--exponent", action="store_true",
                   help="evaluate the anti-concentration exponent formula")
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.01)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--seq")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo experiments")
    p.add_argument("--manifest", required=True,
                   help="manifest JSON (or a prior report, for replay)")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("fit", parents=[common], help="log-log exponent fit")
    p.add_argument("--points", required=True, help="CSV of n,value rows")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", parents=[common], help="inequality verification suites")
    p.add_argument("--suite", required=True, choices=sorted(verify.SUITES))
    p.add_argument("--max-n", dest="max_n", type=int, default=None)
    p.add_argument("--max-m", dest="max_m", type=int, default=None)
    p.add_argument("--cases", type=int, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"rlab: error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"rlab: infeasible: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
