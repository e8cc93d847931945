"""Evolutionary methods: KSMTGP plus FGP, MTFGP and MFFGP baselines."""

from .evaluation import (
    MODES,
    descriptor_accuracy,
    feature_count,
    raw_pixel_accuracy,
    test_evaluate,
    transfer_evaluate,
    tree_dim,
)
from .fitness import WORST, Evaluator, TaskContext, fitness_common, fitness_task, fitness_trees
from .methods import breed, fgp_run, ksmtgp_run, mffgp_run, mtfgp_run
from .records import EvoConfig, RunRecord, Solution

__all__ = [
    "MODES",
    "WORST",
    "Evaluator",
    "EvoConfig",
    "RunRecord",
    "Solution",
    "TaskContext",
    "breed",
    "descriptor_accuracy",
    "feature_count",
    "fgp_run",
    "fitness_common",
    "fitness_task",
    "fitness_trees",
    "ksmtgp_run",
    "mffgp_run",
    "mtfgp_run",
    "raw_pixel_accuracy",
    "test_evaluate",
    "transfer_evaluate",
    "tree_dim",
]
