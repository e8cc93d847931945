"""Batch experiments: config files, repeated seeded runs and CSV reports."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import DatasetError, SynthSpec, TaskSpec, generate_frequency_task, generate_orientation_task, load_dataset
from .learners import MinMaxNormalizer, cv_accuracy
from .multitask import (
    MODES,
    EvoConfig,
    Solution,
    descriptor_accuracy,
    feature_count,
    fgp_run,
    ksmtgp_run,
    mffgp_run,
    mtfgp_run,
    raw_pixel_accuracy,
    test_evaluate,
    transfer_evaluate,
)
from .multitask.evaluation import DESCRIPTOR_FUNCS
from .stats import verdict, wilcoxon_ranksum

METHODS = ("ksmtgp", "fgp", "mtfgp", "mffgp", "raw_pixel", "fixed_descriptor")
TWO_TASK_METHODS = ("ksmtgp", "mffgp")
ONE_TASK_METHODS = ("fgp", "mtfgp")
DESCRIPTORS = ("hog", "lbp", "sift")
SYNTH_KINDS = {"orientation": generate_orientation_task, "frequency": generate_frequency_task}

RESULT_COLUMNS = [
    "run", "task", "seed", "best_fitness", "test_accuracy", "feature_count", "common_size", "task_size",
]


class ConfigError(ValueError):
    """Invalid experiment configuration (exit status 2 on the command line)."""


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else f"{x:.6f}"
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "ksmtgp"
    tasks: tuple[str, ...] = ("synth:orientation", "synth:frequency")
    runs: int = 30
    seed: int = 0
    out: str = "results"
    descriptor: str = "hog"
    synth: SynthSpec = SynthSpec()
    evo: EvoConfig = EvoConfig()

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.method in TWO_TASK_METHODS and len(self.tasks) != 2:
            raise ConfigError(f"{self.method} needs exactly two tasks, got {len(self.tasks)}")
        if self.method in ONE_TASK_METHODS and len(self.tasks) != 1:
            raise ConfigError(f"{self.method} needs exactly one task, got {len(self.tasks)}")
        if not self.tasks:
            raise ConfigError("no tasks given")
        if self.runs < 1:
            raise ConfigError("runs must be positive")
        if self.descriptor not in DESCRIPTORS:
            raise ConfigError(f"descriptor must be one of {', '.join(DESCRIPTORS)}")
        for t in self.tasks:
            parse_task_ref(t)


_EVO_KEYS = {f.name: f.type for f in fields(EvoConfig)}
_SYNTH_PREFIX = "synth_"


def _coerce(key: str, value: str, typ):
    try:
        return typ(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {typ.__name__}") from None


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw.strip()!r}")
        out[key.strip()] = value.strip()
    return out


def build_config(pairs: dict[str, str]) -> ExperimentConfig:
    """Turn raw key/value strings into a validated ExperimentConfig."""
    top, evo, synth = {}, {}, {}
    synth_types = {f.name: f.type for f in fields(SynthSpec)}
    for key, value in pairs.items():
        if key == "method":
            top["method"] = value
        elif key == "tasks":
            top["tasks"] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key in ("runs", "seed"):
            top[key] = _coerce(key, value, int)
        elif key in ("out", "descriptor"):
            top[key] = value
        elif key.startswith(_SYNTH_PREFIX) and key[len(_SYNTH_PREFIX):] in synth_types:
            name = key[len(_SYNTH_PREFIX):]
            typ = int if name in ("size", "classes", "train_per_class", "test_per_class", "seed") else float
            synth[name] = _coerce(key, value, typ)
        elif key in _EVO_KEYS and key != "seed":
            typ = int if _EVO_KEYS[key] == "int" else float
            evo[key] = _coerce(key, value, typ)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        cfg = ExperimentConfig(**top, synth=SynthSpec(**synth), evo=EvoConfig(**evo))
        cfg.synth.validate(2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.validate()
    return cfg


def load_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    pairs = {}
    if path is not None:
        try:
            pairs = parse_config_text(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    pairs.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(pairs)


def parse_task_ref(ref: str) -> tuple[str, str, int | None]:
    """``synth:<kind>[:<size>]`` or a dataset directory."""
    if ref.startswith("synth:"):
        parts = ref.split(":")
        if len(parts) not in (2, 3) or parts[1] not in SYNTH_KINDS:
            raise ConfigError(f"bad synthetic task {ref!r}; use synth:orientation or synth:frequency[:SIZE]")
        size = None
        if len(parts) == 3:
            if not parts[2].isdigit() or int(parts[2]) < 8:
                raise ConfigError(f"bad synthetic image size in {ref!r}")
            size = int(parts[2])
        return "synth", parts[1], size
    return "dir", ref, None


def resolve_task(ref: str, synth: SynthSpec = SynthSpec()) -> TaskSpec:
    kind, name, size = parse_task_ref(ref)
    if kind == "synth":
        spec = replace(synth, size=size) if size is not None else synth
        return SYNTH_KINDS[name](spec)
    path = Path(name)
    if not path.is_dir():
        raise ConfigError(f"task directory {name} not found")
    return load_dataset(path).to_task()


@dataclass
class RunResult:
    run: int
    seed: int
    rows: list[list] = field(default_factory=list)
    timings: list[list] = field(default_factory=list)
    solutions: list[Solution] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)


def _solution_rows(run, seed, tasks, sols, record) -> RunResult:
    res = RunResult(run, seed, solutions=list(sols), trace=record.trace)
    for task, sol in zip(tasks, sols):
        t0 = time.perf_counter()
        acc = test_evaluate(sol, task, seed)
        test_s = time.perf_counter() - t0
        res.rows.append([run, task.name, seed, sol.fitness, acc, feature_count(sol), sol.common_size, sol.task_size])
        res.timings.append([run, task.name, record.train_seconds, test_s])
    return res


def _baseline_rows(run, seed, tasks, method, descriptor) -> RunResult:
    res = RunResult(run, seed)
    for task in tasks:
        t0 = time.perf_counter()
        if method == "raw_pixel":
            X = np.stack([np.asarray(i, dtype=np.float64).ravel() for i in task.train_images])
            acc = raw_pixel_accuracy(task, seed)
        else:
            X = np.stack([DESCRIPTOR_FUNCS[descriptor](i) for i in task.train_images])
            acc = descriptor_accuracy(task, descriptor, seed)
        fit = cv_accuracy(MinMaxNormalizer().fit_transform(X), task.train_labels, seed=seed)
        res.rows.append([run, task.name, seed, fit, acc, X.shape[1], 0, 0])
        res.timings.append([run, task.name, 0.0, time.perf_counter() - t0])
    return res


def execute_run(cfg: ExperimentConfig, tasks: Sequence[TaskSpec], run: int) -> RunResult:
    seed = cfg.seed + run
    evo = replace(cfg.evo, seed=seed)
    if cfg.method == "ksmtgp":
        s1, s2, rec = ksmtgp_run(tasks[0], tasks[1], evo)
        return _solution_rows(run, seed, tasks, (s1, s2), rec)
    if cfg.method == "mffgp":
        s1, s2, rec = mffgp_run(tasks[0], tasks[1], evo)
        return _solution_rows(run, seed, tasks, (s1, s2), rec)
    if cfg.method in ONE_TASK_METHODS:
        fn = fgp_run if cfg.method == "fgp" else mtfgp_run
        sol, rec = fn(tasks[0], evo)
        return _solution_rows(run, seed, tasks, (sol,), rec)
    return _baseline_rows(run, seed, tasks, cfg.method, cfg.descriptor)


def summarise(rows: Sequence[Sequence], task_order: Sequence[str]) -> list[list]:
    """Per task: run count, max, mean and sample std of test accuracy."""
    out = []
    for name in task_order:
        acc = np.array([r[4] for r in rows if r[1] == name], dtype=np.float64)
        std = float(np.std(acc, ddof=1)) if len(acc) > 1 else 0.0
        out.append([name, len(acc), float(acc.max()), float(acc.mean()), std])
    return out


def run_experiment(cfg: ExperimentConfig, out: Path | None = None, log=None) -> Path:
    """Run ``cfg.runs`` seeded runs and write every result file into ``out``."""
    cfg.validate()
    out = Path(out or cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    tasks = [resolve_task(t, cfg.synth) for t in cfg.tasks]
    for t in tasks:
        t.validate(cfg.evo.k_folds)
    rows, timings = [], []
    for i in range(cfg.runs):
        res = execute_run(cfg, tasks, i)
        rows += res.rows
        timings += res.timings
        for k, sol in enumerate(res.solutions, start=1):
            (out / f"best_task{k}_run{i}.tree").write_text(sol.to_text(), encoding="utf-8")
        if res.trace:
            header = list(res.trace[0])
            write_csv(out / f"trace_run{i}.csv", header, ([row[h] for h in header] for row in res.trace))
        if log:
            log(f"run {i} (seed {res.seed}): " + ", ".join(f"{r[1]}={r[4]:.2f}" for r in res.rows))
    write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    write_csv(out / "timings.csv", ["run", "task", "train_seconds", "test_seconds"], timings)
    write_csv(out / "summary.csv", ["task", "runs", "max", "mean", "std"], summarise(rows, [t.name for t in tasks]))
    return out


def _run_index(path: Path) -> int:
    return int(path.stem.rsplit("_run", 1)[1])


def transfer_command(
    trees_dir, target: TaskSpec, modes: Sequence[str] = MODES, task_index: int = 1, seed: int = 0, out=None
) -> tuple[list[list], list[list]]:
    """Evaluate every saved run's trees on ``target``; returns (rows, summary)."""
    trees_dir = Path(trees_dir)
    files = sorted(trees_dir.glob(f"best_task{task_index}_run*.tree"), key=_run_index)
    if not files:
        raise FileNotFoundError(f"no best_task{task_index}_run*.tree files in {trees_dir}")
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {m!r}")
    sols = [(_run_index(f), Solution.from_text(f.read_text(encoding="utf-8"))) for f in files]
    rows = []
    for mode in modes:
        for run, sol in sols:
            rows.append([mode, run, transfer_evaluate(sol, target, mode, seed)])
    summary = []
    for mode in modes:
        acc = np.array([r[2] for r in rows if r[0] == mode])
        summary.append([mode, len(acc), float(acc.mean()), float(np.std(acc, ddof=1)) if len(acc) > 1 else 0.0])
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "transfer.csv", ["mode", "run", "accuracy"], rows)
        write_csv(out / "transfer_summary.csv", ["mode", "runs", "mean", "std"], summary)
    return rows, summary


def compare_results(path_a, path_b) -> list[list]:
    """Per shared task: means, rank-sum statistic, p-value and verdict of A vs B."""
    a, b = read_csv(Path(path_a)), read_csv(Path(path_b))
    order = list(dict.fromkeys(r["task"] for r in a))
    rows = []
    for task in order:
        xa = [float(r["test_accuracy"]) for r in a if r["task"] == task]
        xb = [float(r["test_accuracy"]) for r in b if r["task"] == task]
        if not xb:
            continue
        res = wilcoxon_ranksum(xa, xb)
        rows.append([task, float(np.mean(xa)), float(np.mean(xb)), res.statistic, res.pvalue, verdict(xa, xb)])
    if not rows:
        raise ConfigError("the two result files share no task names")
    return rows


__all__ = [
    "ConfigError",
    "DESCRIPTORS",
    "DatasetError",
    "ExperimentConfig",
    "METHODS",
    "RESULT_COLUMNS",
    "build_config",
    "compare_results",
    "execute_run",
    "load_config",
    "parse_config_text",
    "parse_task_ref",
    "resolve_task",
    "run_experiment",
    "summarise",
    "transfer_command",
    "write_csv",
]
