"""Command line entry point.

Exit codes: 0 all checks passed, 1 a check failed, 2 bad config or input.
"""
from __future__ import annotations

import argparse
import json
import sys

from .body import body_from_dict
from .errors import ConeHullError, ConfigError
from .experiments import ExperimentConfig, run_polytope_experiment, run_volume_radius_check
from .sampling import sample_cone_boundary, sample_uniform
from .suite import SuiteConfig, run_verification_suite


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return d


def _cmd_verify(args) -> int:
    d = _load_json(args.config) if args.config else {}
    for key in ("seed", "sample_count", "workers"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    if args.out:
        d["output_json"] = args.out
    report = run_verification_suite(SuiteConfig.from_dict(d))
    s = report["summary"]
    for c in report["checks"]:
        if c["status"] != "PASS" or args.verbose:
            print(f"{c['status']:12s} {c['kind']:11s} {c['check']}")
    print(json.dumps(s, sort_keys=True))
    return 0 if s["pass"] else 1


def _cmd_experiment(args) -> int:
    d = _load_json(args.config)
    if args.workers is not None:
        d["workers"] = args.workers
    report = run_polytope_experiment(ExperimentConfig.from_dict(d))
    s = report.summary
    for t in s["trends"]:
        band = "n/a" if t["band"] is None else f"[{t['band'][0]:.4g}, {t['band'][1]:.4g}]"
        print(f"{'PASS' if t['pass'] else 'FAIL'} trend {t['metric']} body={t['body']} n={t['n']} slope band {band}")
    if report.config.get("output_csv") is None:
        sys.stdout.write(report.to_csv())
    return 0 if report.passed else 1


def _cmd_volume_radius(args) -> int:
    d = _load_json(args.config)
    d.setdefault("regime", "volume_radius")
    if args.workers is not None:
        d["workers"] = args.workers
    report = run_volume_radius_check(d)
    print(json.dumps({k: v for k, v in report.summary.items() if k != "cells"}, sort_keys=True))
    if report.config.get("output_csv") is None:
        sys.stdout.write(report.to_csv())
    return 0 if report.passed else 1


def _cmd_sample(args) -> int:
    try:
        spec = json.loads(args.body)
    except json.JSONDecodeError:
        spec = _load_json(args.body)
    try:
        body = body_from_dict(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad body description: {exc}") from exc
    fn = sample_cone_boundary if args.dist == "cone" else sample_uniform
    batch = fn(body, args.count, seed=args.seed, stream_id=args.stream)
    if args.out in (None, "-"):
        sys.stdout.write(batch.to_csv())
    else:
        batch.to_csv(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conehull", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("--config", help="suite config JSON (optional)")
    v.add_argument("--seed", type=int)
    v.add_argument("--sample-count", dest="sample_count", type=int)
    v.add_argument("--workers", type=int)
    v.add_argument("--out", help="write the JSON report here")
    v.add_argument("-v", "--verbose", action="store_true")
    v.set_defaults(func=_cmd_verify)

    e = sub.add_parser("experiment", help="random-polytope experiment")
    e.add_argument("--config", required=True)
    e.add_argument("--workers", type=int)
    e.set_defaults(func=_cmd_experiment)

    r = sub.add_parser("volume-radius", help="volume radius and coupling check")
    r.add_argument("--config", required=True)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=_cmd_volume_radius)

    s = sub.add_parser("sample", help="draw a sample batch as CSV")
    s.add_argument("--body", required=True, help="body description as JSON text or a path to a JSON file")
    s.add_argument("--dist", choices=("cone", "uniform"), default="cone")
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_sample)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConeHullError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
