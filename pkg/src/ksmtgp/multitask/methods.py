"""KSMTGP and the FGP / MTFGP / MFFGP baselines."""

from __future__ import annotations

import logging
import math
import time
from typing import Sequence

import numpy as np

from ..data import TaskSpec
from ..gp.operators import (
    Individual,
    best_index,
    init_population,
    ranked_indices,
    subtree_crossover,
    subtree_mutation,
    tournament_select,
)
from ..gp.primitives import PrimitiveSet
from ..gp.tree import default_pset
from .fitness import Evaluator, TaskContext
from .records import EvoConfig, RunRecord, Solution

log = logging.getLogger(__name__)


def _seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def _crossover(a: Individual, b: Individual, rng, cfg: EvoConfig) -> tuple[Individual, Individual]:
    k = int(rng.integers(len(a.trees))) if len(a.trees) > 1 else 0
    c1, c2 = subtree_crossover(a.trees[k], b.trees[k], rng, cfg.max_depth)
    t1 = a.trees[:k] + (c1,) + a.trees[k + 1 :]
    t2 = b.trees[:k] + (c2,) + b.trees[k + 1 :]
    return Individual(t1, None, a.skill_factor), Individual(t2, None, b.skill_factor)


def _mutate(a: Individual, pset: PrimitiveSet, rng, cfg: EvoConfig) -> Individual:
    k = int(rng.integers(len(a.trees))) if len(a.trees) > 1 else 0
    t = subtree_mutation(a.trees[k], pset, rng, cfg.max_depth)
    return Individual(a.trees[:k] + (t,) + a.trees[k + 1 :], None, a.skill_factor)


def n_elites(cfg: EvoConfig, n: int) -> int:
    return max(1, round(cfg.p_elitism * n)) if cfg.p_elitism > 0 else 0


def breed(
    pop: Sequence[Individual], rng: np.random.Generator, pset: PrimitiveSet, cfg: EvoConfig, elitism: bool
) -> list[Individual]:
    """Next generation: optional elites, then one child per slot chosen by a
    roll against the crossover / mutation rates (reproduction otherwise)."""
    n = len(pop)
    new = [Individual(pop[i].trees, None, pop[i].skill_factor) for i in ranked_indices(pop)[: n_elites(cfg, n) if elitism else 0]]
    k = cfg.tournament_size
    while len(new) < n:
        r = rng.random()
        if r < cfg.p_crossover:
            a = pop[tournament_select(pop, rng, k)]
            b = pop[tournament_select(pop, rng, k)]
            child, _ = _crossover(a, b, rng, cfg)
        elif r < cfg.p_crossover + cfg.p_mutation:
            child = _mutate(pop[tournament_select(pop, rng, k)], pset, rng, cfg)
        else:
            p = pop[tournament_select(pop, rng, k)]
            child = Individual(p.trees, None, p.skill_factor)
        new.append(child)
    return new


def _better(candidate: Solution, incumbent: Solution | None) -> bool:
    if incumbent is None:
        return True
    if candidate.fitness != incumbent.fitness:
        return candidate.fitness > incumbent.fitness
    return candidate.size < incumbent.size


def _check_tasks(tasks: Sequence[TaskSpec], cfg: EvoConfig) -> None:
    cfg.validate()
    for t in tasks:
        t.validate(cfg.k_folds)


def _fmt(x: float) -> float:
    return x if math.isfinite(x) else float("nan")


def ksmtgp_run(
    task1: TaskSpec, task2: TaskSpec, cfg: EvoConfig, pset: PrimitiveSet | None = None
) -> tuple[Solution, Solution, RunRecord]:
    """Co-evolve one common population and two task-specific populations.

    Each generation the best common tree (fitness: mean CV accuracy on both
    tasks minus its size) is paired with every task-specific tree. The
    common population breeds without elitism, task populations with it.
    """
    _check_tasks((task1, task2), cfg)
    pset = pset or default_pset()
    s = _seeds(cfg.seed, 5)
    rng_com, rng1, rng2 = (np.random.default_rng(x) for x in s[:3])
    contexts = [TaskContext(task1, cfg.k_folds, s[3]), TaskContext(task2, cfg.k_folds, s[4])]
    record = RunRecord("ksmtgp", cfg.seed, (task1.name, task2.name))
    start = time.perf_counter()

    p_com = init_population(pset, rng_com, cfg.pop_size, 1, cfg.min_depth, cfg.max_depth)
    pops = [
        init_population(pset, rng, cfg.pop_size, 1, cfg.min_depth, cfg.max_depth) for rng in (rng1, rng2)
    ]
    rngs = [rng1, rng2]
    best: list[Solution | None] = [None, None]

    with Evaluator(contexts, cfg.workers) as ev:
        for g in range(cfg.generations + 1):
            before = ev.n_evaluations
            fits = ev.run([("common", ind.trees[0]) for ind in p_com])
            p_com = [ind.with_fitness(f) for ind, f in zip(p_com, fits)]
            b = best_index(p_com)
            ct_best = p_com[b].trees[0]
            record.common_extractions += 1
            row = {"generation": g, "common_best": _fmt(p_com[b].fitness), "common_size": ct_best.size}
            for t in (0, 1):
                fits = ev.run([("task", t, ind.trees[0], ct_best) for ind in pops[t]])
                pops[t] = [ind.with_fitness(f) for ind, f in zip(pops[t], fits)]
                i = best_index(pops[t])
                cand = Solution(pops[t][i].trees[0], ct_best, pops[t][i].fitness, g)
                if _better(cand, best[t]):
                    best[t] = cand
                row[f"task{t + 1}_pop_best"] = _fmt(cand.fitness)
                row[f"task{t + 1}_best"] = _fmt(best[t].fitness)
            record.trace.append(row)
            record.evaluations_per_generation.append(ev.n_evaluations - before)
            record.generation = g
            log.debug("ksmtgp gen %d: %s", g, row)
            if g == cfg.generations:
                break
            p_com = breed(p_com, rng_com, pset, cfg, elitism=False)
            pops = [breed(pops[t], rngs[t], pset, cfg, elitism=True) for t in (0, 1)]

    record.train_seconds = time.perf_counter() - start
    record.solutions = [best[0], best[1]]
    return best[0], best[1], record


def _single_task_run(task: TaskSpec, cfg: EvoConfig, n_trees: int, method: str, pset: PrimitiveSet | None):
    _check_tasks((task,), cfg)
    pset = pset or default_pset()
    s = _seeds(cfg.seed, 2)
    rng = np.random.default_rng(s[0])
    ctx = TaskContext(task, cfg.k_folds, s[1])
    record = RunRecord(method, cfg.seed, (task.name,))
    start = time.perf_counter()
    pop = init_population(pset, rng, cfg.pop_size, n_trees, cfg.min_depth, cfg.max_depth)
    best: Solution | None = None
    with Evaluator([ctx], cfg.workers) as ev:
        for g in range(cfg.generations + 1):
            before = ev.n_evaluations
            fits = ev.run([("trees", 0, ind.trees) for ind in pop])
            pop = [ind.with_fitness(f) for ind, f in zip(pop, fits)]
            i = best_index(pop)
            cand = Solution(pop[i].trees[0], None, pop[i].fitness, g, pop[i].trees[1:])
            if _better(cand, best):
                best = cand
            record.trace.append(
                {"generation": g, "task1_pop_best": _fmt(cand.fitness), "task1_best": _fmt(best.fitness)}
            )
            record.evaluations_per_generation.append(ev.n_evaluations - before)
            record.generation = g
            if g == cfg.generations:
                break
            pop = breed(pop, rng, pset, cfg, elitism=True)
    record.train_seconds = time.perf_counter() - start
    record.solutions = [best]
    return best, record


def fgp_run(task: TaskSpec, cfg: EvoConfig, pset: PrimitiveSet | None = None) -> tuple[Solution, RunRecord]:
    """Single-task GP with one tree per individual."""
    return _single_task_run(task, cfg, 1, "fgp", pset)


def mtfgp_run(task: TaskSpec, cfg: EvoConfig, pset: PrimitiveSet | None = None) -> tuple[Solution, RunRecord]:
    """Single-task GP with two trees per individual; variation picks one tree at random."""
    return _single_task_run(task, cfg, 2, "mtfgp", pset)


def _factorial_ranks(fits: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    n = len(fits)
    order = sorted(range(n), key=lambda i: (-fits[i], sizes[i], i))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    return ranks


def _selection_view(pop: Sequence[Individual]) -> list[Individual]:
    """Population whose fitness is the scalar 1/(1 + rank within its skill group)."""
    view = list(pop)
    for t in {ind.skill_factor for ind in pop}:
        idx = [i for i, ind in enumerate(pop) if ind.skill_factor == t]
        ranks = _factorial_ranks(np.array([pop[i].fitness for i in idx]), [pop[i].size for i in idx])
        for i, r in zip(idx, ranks):
            view[i] = pop[i].with_fitness(1.0 / (1 + r))
    return view


def mffgp_run(
    task1: TaskSpec, task2: TaskSpec, cfg: EvoConfig, pset: PrimitiveSet | None = None
) -> tuple[Solution, Solution, RunRecord]:
    """Multifactorial GP: one unified population with skill factors.

    Same-skill parents always cross; different-skill parents cross with
    probability ``cfg.rmp`` and are otherwise mutated separately. The
    population is twice ``cfg.pop_size``.
    """
    _check_tasks((task1, task2), cfg)
    pset = pset or default_pset()
    s = _seeds(cfg.seed, 3)
    rng = np.random.default_rng(s[0])
    contexts = [TaskContext(task1, cfg.k_folds, s[1]), TaskContext(task2, cfg.k_folds, s[2])]
    record = RunRecord("mffgp", cfg.seed, (task1.name, task2.name))
    start = time.perf_counter()
    n = 2 * cfg.pop_size
    pop = init_population(pset, rng, n, 1, cfg.min_depth, cfg.max_depth)
    best: list[Solution | None] = [None, None]
    k = cfg.tournament_size

    with Evaluator(contexts, cfg.workers) as ev:
        before = ev.n_evaluations
        both = [ev.run([("trees", t, ind.trees) for ind in pop]) for t in (0, 1)]
        sizes = [ind.size for ind in pop]
        ranks = np.stack([_factorial_ranks(np.array(f), sizes) for f in both])
        skills = []
        for i in range(n):
            if ranks[0, i] == ranks[1, i]:
                skills.append(int(rng.integers(2)))
            else:
                skills.append(int(np.argmin(ranks[:, i])))
        for t in (0, 1):
            if t not in skills:
                j = int(np.argmin(ranks[t]))
                skills[j] = t
        pop = [Individual(ind.trees, both[sk][i], sk) for i, (ind, sk) in enumerate(zip(pop, skills))]

        for g in range(cfg.generations + 1):
            if g > 0:
                todo = [i for i, ind in enumerate(pop) if ind.fitness is None]
                fits = ev.run([("trees", pop[i].skill_factor, pop[i].trees) for i in todo])
                for i, f in zip(todo, fits):
                    pop[i] = pop[i].with_fitness(f)
            row = {"generation": g}
            elites = []
            for t in (0, 1):
                group = [ind for ind in pop if ind.skill_factor == t]
                i = best_index(group)
                elites.append(group[i])
                cand = Solution(group[i].trees[0], None, group[i].fitness, g)
                if _better(cand, best[t]):
                    best[t] = cand
                row[f"task{t + 1}_pop_best"] = _fmt(cand.fitness)
                row[f"task{t + 1}_best"] = _fmt(best[t].fitness)
                row[f"task{t + 1}_count"] = len(group)
            record.trace.append(row)
            record.evaluations_per_generation.append(ev.n_evaluations - before)
            record.generation = g
            before = ev.n_evaluations
            if g == cfg.generations:
                break

            view = _selection_view(pop)
            new = list(elites)
            while len(new) < n:
                a = pop[tournament_select(view, rng, k)]
                r = rng.random()
                if r < cfg.p_crossover:
                    b = pop[tournament_select(view, rng, k)]
                    if a.skill_factor == b.skill_factor or rng.random() < cfg.rmp:
                        c1, c2 = _crossover(a, b, rng, cfg)
                        parents = (a.skill_factor, b.skill_factor)
                        children = [Individual(c.trees, None, parents[int(rng.integers(2))]) for c in (c1, c2)]
                    else:
                        children = [_mutate(a, pset, rng, cfg), _mutate(b, pset, rng, cfg)]
                elif r < cfg.p_crossover + cfg.p_mutation:
                    children = [_mutate(a, pset, rng, cfg)]
                else:
                    children = [Individual(a.trees, None, a.skill_factor)]
                new.extend(children[: n - len(new)])
            pop = new

    record.train_seconds = time.perf_counter() - start
    record.solutions = [best[0], best[1]]
    return best[0], best[1], record
