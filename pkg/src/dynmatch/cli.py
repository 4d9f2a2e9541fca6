"""Command-line entry point ``dynmatch``."""
from __future__ import annotations

import argparse
import inspect
import sys
import time

import yaml

from . import __version__
from .algorithms import ENGINE_BACKED, get_algorithm
from .exceptions import BadParameters, DynMatchError
from .experiment import DETAIL_COLUMNS, SUMMARY_COLUMNS, run_experiment, write_tsv
from .generators import FAMILIES, generate
from .io import dumps, read_instance, write_instance
from .market import resolve_deadlines
from .oracle import competitive_ratio, offline_opt, verify_certificate


def _parse_param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key, yaml.safe_load(value)


def cmd_gen(args) -> int:
    params = dict(args.param)
    if args.seed is not None and "seed" in inspect.signature(FAMILIES[args.family]).parameters:
        params["seed"] = args.seed
    instance = generate(args.family, **params)
    if args.out:
        write_instance(instance, args.out)
    else:
        sys.stdout.write(dumps(instance))
    return 0


def _seeds(seed: int, reps: int) -> list[int]:
    return [seed + r for r in range(reps)]


def _extra(args) -> dict:
    if args.batch_rescue and not args.algo.startswith("batching"):
        raise BadParameters("--batch-rescue only applies to batching:k")
    return {"rescue": True} if args.batch_rescue else {}


def cmd_run(args) -> int:
    instance = read_instance(args.instance)
    fn = get_algorithm(args.algo)
    extra = _extra(args)
    rows = []
    values, opts = [], []
    for rep, seed in enumerate(_seeds(args.seed, args.reps)):
        deadlines = resolve_deadlines(instance, seed)
        opt = offline_opt(instance, deadlines)
        start = time.perf_counter()
        result = fn(instance, seed=seed, deadlines=deadlines, record_trace=False, **extra)
        elapsed = time.perf_counter() - start
        values.append(result.total_value)
        opts.append(opt.value)
        rows.append({"algorithm": args.algo, "setting": args.instance, "rep": rep, "seed": seed,
                     "value": result.total_value, "opt": opt.value, "opt_method": opt.method,
                     "matched_fraction": result.matched_fraction, "runtime_s": elapsed,
                     "audits_passed": result.passed})
    if args.out:
        write_tsv(rows, DETAIL_COLUMNS, args.out)
    est = competitive_ratio(values, opts)
    print(f"{args.algo}\truns={len(values)}\tmean_value={sum(values) / len(values):.6g}"
          f"\tratio={est.ratio:.6g}\tci=[{est.low:.4g}, {est.high:.4g}]")
    return 0


def cmd_verify(args) -> int:
    instance = read_instance(args.instance)
    fn = get_algorithm(args.algo)
    deadlines = resolve_deadlines(instance, args.seed)
    kwargs = {"check_every_step": True} if args.algo in ENGINE_BACKED else _extra(args)
    result = fn(instance, seed=args.seed, deadlines=deadlines, **kwargs)
    opt = offline_opt(instance, deadlines)
    records = list(result.audit)
    if "certificate" in result.info:
        # the duals bound the optimum of the graph the engine actually saw
        scope = result.info["certificate_scope"]
        scope_opt = offline_opt(scope, deadlines)
        rec = verify_certificate(scope, result.info["certificate"],
                                 scope_opt.value if scope_opt.exact else None, deadlines)
        records.append(rec._replace(name="weak_duality"))
    failed = 0
    for rec in records:
        status = "PASS" if rec.passed else "FAIL"
        failed += not rec.passed
        print(f"{status}\t{rec.name}\t{rec.detail}")
    print(f"value={result.total_value!r}\topt={opt.value!r}\tmethod={opt.method}")
    return 1 if failed else 0


def cmd_bench(args) -> int:
    report = run_experiment(args.config)
    for row in report.summary:
        print("\t".join(str(row[c]) for c in SUMMARY_COLUMNS))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynmatch", description="Online matching with deadlines.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an instance file")
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--param", action="append", default=[], type=_parse_param, metavar="KEY=VALUE")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run an algorithm over several seeds")
    p.add_argument("--algo", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--batch-rescue", action="store_true",
                   help="batching only: match a vertex that turns critical between batches")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run with every invariant audit; nonzero exit on failure")
    p.add_argument("--algo", required=True)
    p.add_argument("--instance", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-rescue", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DynMatchError, OSError) as exc:
        print(f"dynmatch: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
