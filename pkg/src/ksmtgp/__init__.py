"""Evolutionary multitask feature learning for image classification with
genetic programming: a common tree shared by two related tasks plus one
task-specific tree per task."""

from .data import SynthSpec, TaskSpec, generate_synth_pair, load_dataset, parse_pgm
from .estimators import GPClassifier, MultiTaskGPClassifier, TreeFeatures
from .export import export_dot
from .gp import parse_tree, serialize_tree
from .multitask import EvoConfig, Solution, fgp_run, ksmtgp_run, mffgp_run, mtfgp_run, test_evaluate
from .stats import verdict, wilcoxon_ranksum

__version__ = "0.1.0"

__all__ = [
    "EvoConfig",
    "GPClassifier",
    "MultiTaskGPClassifier",
    "Solution",
    "SynthSpec",
    "TaskSpec",
    "TreeFeatures",
    "export_dot",
    "fgp_run",
    "generate_synth_pair",
    "ksmtgp_run",
    "load_dataset",
    "mffgp_run",
    "mtfgp_run",
    "parse_pgm",
    "parse_tree",
    "serialize_tree",
    "test_evaluate",
    "verdict",
    "wilcoxon_ranksum",
]
