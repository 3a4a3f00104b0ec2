"""Command-line interface: ``qmstp {solve,bench,generate,exact,stats}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .exact import DEFAULT_TREE_BOUND, TreeCountExceeded, exact_optimum
from .harness import RunConfig, format_table, load_reference, run_experiment, summarize_records
from .instance import FAMILIES, InstanceError, generate_family, load_instance, save_instance
from .tps import VARIANTS, StopCriterion


def _param(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key or not value:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key, value


def _stop(text: str) -> StopCriterion:
    try:
        return StopCriterion.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_instance_source(p: argparse.ArgumentParser, multiple: bool = False):
    if multiple:
        p.add_argument("--instance", action="append", default=[], help="instance file or directory (repeatable)")
    else:
        p.add_argument("--instance", help="instance file")
    p.add_argument("--family", choices=FAMILIES, help="generate the instance instead of loading one")
    p.add_argument("--n", type=int, help="vertex count for --family")
    p.add_argument("--gen-seed", type=int, default=0, help="generator seed for --family")
    p.add_argument("--density", type=float, help="edge density (cp family only)")
    p.add_argument("--cost-max", type=int, help="upper cost bound, 10 or 100 (cp family only)")


def _add_run_options(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="base seed; replica k uses seed+k")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--profile", choices=("general", "qap"), default="general")
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE",
                   help="override a parameter, e.g. p=0.5 or Ldir=5n:10n")
    p.add_argument("--stop", type=_stop, default=StopCriterion.stagnant(10, 50),
                   help="rounds:R | stagnant:S,CAP | target:F[,CAP] | time:SECONDS (default stagnant:10,50)")
    p.add_argument("--variant", choices=VARIANTS, default="v0")
    p.add_argument("--reference", help="best-known table: '<instance> <value>' per line")
    p.add_argument("--out", help="write result records (one JSON object per line) here")
    p.add_argument("--move-log", help="write directed-perturbation moves (JSON lines) here")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields from records")


def _config(args) -> RunConfig:
    return RunConfig(
        profile=args.profile,
        overrides=dict(args.param),
        stop=args.stop,
        replicas=args.replicas,
        base_seed=args.seed,
        variant=args.variant,
        workers=args.workers,
        move_log=bool(args.move_log),
    )


def _generated(args):
    if args.n is None:
        raise SystemExit("error: --family needs --n")
    inst = generate_family(args.family, args.n, args.gen_seed, density=args.density, cost_max=args.cost_max)
    return f"{args.family}-{args.n}-{args.gen_seed}", inst


def _instance_files(paths):
    for p in map(Path, paths):
        if p.is_dir():
            yield from sorted(q for q in p.iterdir() if q.is_file())
        else:
            yield p


def _emit(records, out):
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_moves(reports, path):
    with open(path, "w") as fh:
        for rep in reports:
            for res in rep.results:
                for entry in res.move_log or ():
                    fh.write(json.dumps(dict(instance=rep.instance, seed=res.seed, **entry)) + "\n")


def cmd_solve(args) -> int:
    if args.family:
        name, inst = _generated(args)
    elif args.instance:
        name, inst = Path(args.instance).stem, load_instance(args.instance)
    else:
        raise SystemExit("error: give --instance or --family")
    reference = load_reference(args.reference) if args.reference else None
    report = run_experiment(inst, name, _config(args), reference)
    _emit(report.records(timing=not args.no_timing), args.out)
    if args.move_log:
        _write_moves([report], args.move_log)
    if args.best_out and report.results:
        best = min(report.results, key=lambda r: (r.best_value, r.seed))
        Path(args.best_out).write_text(best.best_tree.to_text())
    return 3 if report.failures else 0


def cmd_bench(args) -> int:
    sources = [(p.stem, None, p) for p in _instance_files(args.instance)]
    if args.family:
        name, inst = _generated(args)
        sources.append((name, inst, None))
    reference = load_reference(args.reference) if args.reference else None
    config = _config(args)
    reports = []
    for name, inst, path in sources:
        inst = inst if inst is not None else load_instance(path)
        reports.append(run_experiment(inst, name, config, reference))
    records = [r for rep in reports for r in rep.records(timing=not args.no_timing)]
    if args.out:
        _emit(records, args.out)
    if args.move_log:
        _write_moves(reports, args.move_log)
    if reports:
        print(format_table(reports, args.group))
    return 3 if any(rep.failures for rep in reports) else 0


def cmd_generate(args) -> int:
    name, inst = _generated(args)
    save_instance(inst, args.out)
    print(json.dumps(dict(instance=name, **inst.summary()), sort_keys=True))
    return 0


def cmd_exact(args) -> int:
    inst = load_instance(args.instance)
    try:
        res = exact_optimum(inst, args.bound)
    except TreeCountExceeded as exc:
        print(f"error: {exc}; raise --bound to enumerate anyway", file=sys.stderr)
        return 2
    print(json.dumps({"optimum": res.value, "trees": res.count,
                      "edges": [[int(u) + 1, int(v) + 1] for u, v in inst.edges[list(res.edges)]]}))
    print(res.tree(inst).to_text(), end="")
    return 0


def cmd_stats(args) -> int:
    with open(args.results) as fh:
        rows = summarize_records(fh)
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmstp", description="Three-phase search for the quadratic MST problem")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run replicas on one instance")
    _add_instance_source(p)
    _add_run_options(p)
    p.add_argument("--best-out", help="write the best tree found here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a set of instances and print a comparison table")
    _add_instance_source(p, multiple=True)
    _add_run_options(p)
    p.add_argument("--group", help="benchmark group whose published discard ratio is shown")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a benchmark-family instance")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", dest="gen_seed", type=int, default=0)
    p.add_argument("--density", type=float)
    p.add_argument("--cost-max", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("exact", help="exhaustive optimum of a small instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--bound", type=int, default=DEFAULT_TREE_BOUND, help="maximum spanning-tree count")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("stats", help="aggregate a result-record file by instance")
    p.add_argument("results")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
