"""Genetic-algorithm baseline sharing the evaluator and log format.

Real-valued GA in normalized coordinates: tournament selection, blend
crossover with 10% interval extension, Gaussian mutation, elitism. Every
generation evaluates the full population (elites included) so each
generation costs exactly ``population`` evaluations and budget accounting
stays aligned with the sequential optimizer.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import objective
from .bo_loop import BoConfig, derive_seed
from .errors import AllInitFailedError
from .experiment_log import ExperimentLog, IterationRecord
from .param_space import ParameterSpace, space_to_config

_TAG_GA_INIT = 23
_TAG_GA_OPS = 29

BLEND_EXTENSION = 0.1


@dataclass(frozen=True)
class GaConfig:
    population: int
    generations: int
    tournament_k: int = 2
    crossover_rate: float = 0.9
    mutation_stddev: float = 0.1
    elitism: int = 1
    seed: int = 0
    max_evaluations: int | None = None

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 1 <= self.tournament_k <= self.population:
            raise ValueError("tournament_k must be in [1, population]")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if self.mutation_stddev < 0:
            raise ValueError("mutation_stddev must be >= 0")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "generations": self.generations,
            "tournament_k": self.tournament_k,
            "crossover_rate": self.crossover_rate,
            "mutation_stddev": self.mutation_stddev,
            "elitism": self.elitism,
            "max_evaluations": self.max_evaluations,
        }


def budget_match(bo_config: BoConfig) -> GaConfig:
    """GA settings spending exactly the sequential optimizer's budget.

    Population 5 (capped by the total), generations ceil(total/population),
    with the last generation truncated by the evaluation cap.
    """
    total = bo_config.init_samples + bo_config.max_iterations
    population = min(5, total)
    generations = math.ceil(total / population)
    return GaConfig(
        population=population,
        generations=generations,
        seed=bo_config.seed,
        max_evaluations=total,
    )


def _tournament(rng, fitness: np.ndarray, k: int) -> int:
    contenders = rng.choice(fitness.shape[0], size=k, replace=False)
    return int(contenders[np.argmin(fitness[contenders])])


def _offspring(rng, pop: np.ndarray, fitness: np.ndarray, cfg: GaConfig) -> np.ndarray:
    d = pop.shape[1]
    p1 = pop[_tournament(rng, fitness, cfg.tournament_k)]
    p2 = pop[_tournament(rng, fitness, cfg.tournament_k)]
    if rng.random() < cfg.crossover_rate:
        lo = np.minimum(p1, p2)
        hi = np.maximum(p1, p2)
        span = hi - lo
        child = rng.uniform(lo - BLEND_EXTENSION * span, hi + BLEND_EXTENSION * span)
    else:
        child = p1.copy()
    if cfg.mutation_stddev > 0:
        child = child + rng.normal(0.0, cfg.mutation_stddev, d)
    return np.clip(child, 0.0, 1.0)


def ga_run(
    space: ParameterSpace,
    evaluator,
    objective_spec: objective.ObjectiveSpec,
    config: GaConfig,
) -> ExperimentLog:
    """Evolve seeded populations, logging every evaluation like the BO loop.

    Failed evaluations receive infinite fitness (never selected, never
    elite) but still consume budget. Deterministic given ``config.seed``.
    """
    cap = config.max_evaluations or config.population * config.generations
    log = ExperimentLog()
    rng = np.random.default_rng(derive_seed(config.seed, _TAG_GA_OPS))

    pop = space.sample_uniform(config.population, derive_seed(config.seed, _TAG_GA_INIT))
    index = 0
    incumbent: float | None = None
    obj = objective_spec

    def evaluate_generation(genomes: np.ndarray, gen: int, obj_spec):
        nonlocal index, incumbent
        fitness = np.full(genomes.shape[0], np.inf)
        evals = []
        for i, x in enumerate(genomes):
            if index >= cap:
                break
            t0 = time.perf_counter()
            ev = evaluator(x, index)
            dt = time.perf_counter() - t0
            evals.append((index, i, x, ev, dt))
            index += 1
        resolved = obj_spec
        if gen == 0:
            ok = [
                (ev.metrics, objective.to_target(ev.metrics, _strip_scaling(obj_spec)))
                for _, _, _, ev, _ in evals
                if ev.ok
            ]
            if not ok:
                raise AllInitFailedError("no successful evaluation in the first generation")
            resolved = objective.resolve_references(obj_spec, ok)
        for eval_index, i, x, ev, dt in evals:
            raw = space.decode(x)
            target = None
            if ev.ok:
                target = objective.to_target(ev.metrics, resolved)
                fitness[i] = target
                incumbent = target if incumbent is None else min(incumbent, target)
            log.append(
                IterationRecord(
                    index=eval_index,
                    phase="init" if gen == 0 else "generation",
                    raw_params=raw,
                    status=ev.status,
                    reason=ev.reason,
                    metrics=ev.metrics,
                    objective_value=target,
                    incumbent=incumbent,
                    generation=gen,
                    timing={"evaluate": dt},
                )
            )
        return fitness, resolved

    fitness, obj = evaluate_generation(pop, 0, obj)
    log.header = {
        "engine": "ga",
        "seed": config.seed,
        "config": config.to_dict(),
        "objective": obj.to_dict(),
        "space": space_to_config(space),
    }

    try:
        for gen in range(1, config.generations):
            if index >= cap:
                break
            order = np.argsort(fitness, kind="stable")
            elites = pop[order[: config.elitism]]
            children = [
                _offspring(rng, pop, fitness, config)
                for _ in range(config.population - config.elitism)
            ]
            pop = np.vstack([elites, np.array(children)]) if len(elites) else np.array(children)
            fitness, _ = evaluate_generation(pop, gen, obj)
    except KeyboardInterrupt:
        log.header["interrupted"] = True
    return log


def _strip_scaling(spec: objective.ObjectiveSpec) -> objective.ObjectiveSpec:
    return replace(spec, scaling="none", references=None)
