"""Command-line entry point: ``ksmtgp {run,synth,transfer,stats,export-dot,eval}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .data import DatasetError, save_dataset
from .experiment import (
    ConfigError,
    SYNTH_KINDS,
    compare_results,
    load_config,
    resolve_task,
    run_experiment,
    transfer_command,
    write_csv,
)
from .export import export_dot
from .gp.tree import TreeParseError, parse_tree
from .multitask import MODES, Solution, test_evaluate

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("ksmtgp")


def _overrides(args) -> dict:
    out = {}
    for key in ("method", "runs", "seed", "out"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = str(val)
    if getattr(args, "tasks", None):
        out["tasks"] = ",".join(args.tasks)
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    out = run_experiment(cfg, log=log.info)
    print(f"results written to {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    spec = cfg.synth if args.size is None else replace(cfg.synth, size=args.size)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    out = Path(args.out or "synth")
    for name, make in SYNTH_KINDS.items():
        path = save_dataset(make(spec), out / name)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_transfer(args) -> int:
    cfg = load_config(args.config, {})
    target = resolve_task(args.target, cfg.synth)
    modes = MODES if args.mode == "all" else (args.mode,)
    _, summary = transfer_command(args.trees, target, modes, args.task_index, args.seed or 0, args.out or "transfer")
    for mode, n, mean, std in summary:
        print(f"{mode:12s} n={n:3d}  {mean:.2f} ± {std:.2f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    rows = compare_results(args.a, args.b)
    header = ["task", "mean_a", "mean_b", "statistic", "pvalue", "verdict"]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_csv(Path(args.out) / "stats.csv", header, rows)
    for task, ma, mb, z, p, v in rows:
        print(f"{task:16s} {ma:8.2f} {mb:8.2f}  z={z:+.4f}  p={p:.4f}  {v}")
    return EXIT_OK


def _read_trees(path: Path, which: str):
    text = path.read_text(encoding="utf-8")
    if "=" not in text:
        return [parse_tree(text.strip())]
    sol = Solution.from_text(text)
    if which == "task":
        return [sol.task_tree, *sol.extra_trees]
    if which == "common":
        if sol.common_tree is None:
            raise ConfigError(f"{path} has no common tree")
        return [sol.common_tree]
    return list(sol.trees)


def cmd_export_dot(args) -> int:
    trees = _read_trees(Path(args.tree), args.which)
    text = "".join(export_dot(t, f"tree{i}") for i, t in enumerate(trees))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = load_config(args.config, {})
    task = resolve_task(args.task, cfg.synth)
    sol = Solution.from_text(Path(args.tree).read_text(encoding="utf-8"))
    acc = test_evaluate(sol, task, args.seed or 0, args.mode)
    print(f"{acc:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress")
    p = argparse.ArgumentParser(
        prog="ksmtgp", description="Multitask GP feature learning for image classification.", parents=[verbose]
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[verbose], **kw)

    def common(sp, out_help="output directory"):
        sp.add_argument("--config", metavar="PATH", help="flat key=value config file")
        sp.add_argument("--out", metavar="DIR", help=out_help)
        sp.add_argument("--seed", type=int, metavar="N")

    sp = add("run", help="run repeated seeded experiments")
    common(sp)
    sp.add_argument("--runs", type=int, metavar="N")
    sp.add_argument("--method", metavar="NAME")
    sp.add_argument("--task", dest="tasks", action="append", metavar="TASK", help="synth:KIND[:SIZE] or dataset dir")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    sp.set_defaults(func=cmd_run)

    sp = add("synth", help="write the synthetic task pair as PGM datasets")
    common(sp)
    sp.add_argument("--size", type=int)
    sp.set_defaults(func=cmd_synth)

    sp = add("transfer", help="evaluate saved trees on another dataset")
    common(sp)
    sp.add_argument("--trees", required=True, metavar="DIR", help="directory with best_task<k>_run<i>.tree files")
    sp.add_argument("--target", required=True, metavar="TASK")
    sp.add_argument("--mode", default="all", choices=(*MODES, "all"))
    sp.add_argument("--task-index", type=int, default=1, metavar="K")
    sp.set_defaults(func=cmd_transfer)

    sp = add("stats", help="rank-sum comparison of two results.csv files")
    sp.add_argument("a", metavar="RESULTS_A")
    sp.add_argument("b", metavar="RESULTS_B")
    sp.add_argument("--out", metavar="DIR")
    sp.set_defaults(func=cmd_stats)

    sp = add("export-dot", help="render a saved tree as Graphviz DOT")
    sp.add_argument("tree", metavar="FILE")
    sp.add_argument("--which", default="all", choices=("task", "common", "all"))
    sp.add_argument("--out", metavar="PATH")
    sp.set_defaults(func=cmd_export_dot)

    sp = add("eval", help="test accuracy of a saved solution")
    common(sp)
    sp.add_argument("tree", metavar="FILE")
    sp.add_argument("--task", required=True, metavar="TASK")
    sp.add_argument("--mode", default="both", choices=MODES)
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, DatasetError, TreeParseError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
