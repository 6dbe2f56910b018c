"""
==============================================================================
Genetic Algorithm - Stacking Sequence Optimization
==============================================================================
Generational GA over half-stack ply angles:

    1. Random initial population in the angle domain
    2. Fitness of every new chromosome (threaded, cached)
    3. Elites copied unchanged; the rest bred by tournament selection,
       uniform crossover and per-gene mutation
    4. Stop after `generations` or `stall_generations` without improvement

All randomness comes from one numpy Generator seeded with rng_seed, and
selection reads fitness values only, so results do not depend on the
number of worker threads.
==============================================================================
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from fem.assembly import PlateModel
from laminate.materials import Layup
from optimization.objective import FitnessEvaluator, OptimizationProblem

logger = logging.getLogger(__name__)

IMPROVEMENT_TOLERANCE = 1e-15


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float  # rad
    mean: float  # rad


@dataclass
class OptimizationResult:
    """Best layup found and the per-generation history."""

    best_layup: Layup
    best_objective: float             # rad
    best_genes: np.ndarray            # rad
    history: List[GenerationStats] = field(default_factory=list)
    evaluations: int = 0
    stopped_on_stall: bool = False

    @property
    def best_angles_deg(self) -> List[float]:
        return [math.degrees(g) for g in self.best_genes]


# =============================================================================
# Operators
# =============================================================================

def _tournament(rng: np.random.Generator, fitness: np.ndarray, size: int) -> int:
    contenders = rng.integers(0, fitness.size, size=size)
    # lowest fitness wins, ties to the first drawn
    return int(contenders[int(np.argmin(fitness[contenders]))])


def _uniform_crossover(rng: np.random.Generator, a: np.ndarray, b: np.ndarray):
    mask = rng.random(a.size) < 0.5
    return np.where(mask, a, b), np.where(mask, b, a)


def _evaluate(evaluator: FitnessEvaluator, population: np.ndarray, threads: int) -> np.ndarray:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(evaluator, population)))
    return np.array([evaluator(ind) for ind in population])


# =============================================================================
# Main Loop
# =============================================================================

def run_ga(
    problem: OptimizationProblem,
    threads: int = 1,
    model: Optional[PlateModel] = None,
    seed: Optional[int] = None,
) -> OptimizationResult:
    """
    Optimize the stacking sequence of `problem`.

    Args:
        problem: Mesh, material, schedule, domain and GA settings
        threads: Worker threads for fitness evaluation
        model: PlateModel of problem.mesh to reuse
        seed: Overrides problem.ga.rng_seed

    Returns:
        OptimizationResult with a non-increasing best-objective history
    """
    ga = problem.ga
    rng = np.random.default_rng(ga.rng_seed if seed is None else seed)
    evaluator = FitnessEvaluator(problem, model)
    n_genes = problem.gene_count
    n_elite = ga.elitism_count

    population = problem.domain.sample(rng, (ga.population_size, n_genes))
    fitness = _evaluate(evaluator, population, threads)
    history = [GenerationStats(0, float(fitness.min()), float(fitness.mean()))]
    best_so_far = history[0].best
    stall = 0
    stopped_on_stall = False
    logger.info("GA start: %d genes, population %d, domain %s, best %.6e rad",
                n_genes, ga.population_size, problem.domain.kind.value, best_so_far)

    for generation in range(1, ga.generations + 1):
        order = np.argsort(fitness, kind="stable")
        children = [population[i].copy() for i in order[:n_elite]]
        while len(children) < ga.population_size:
            a = population[_tournament(rng, fitness, ga.tournament_size)]
            b = population[_tournament(rng, fitness, ga.tournament_size)]
            if rng.random() < ga.crossover_rate:
                a, b = _uniform_crossover(rng, a, b)
            children.append(problem.domain.mutate(rng, a, ga.mutation_rate, ga.mutation_scale))
            if len(children) < ga.population_size:
                children.append(problem.domain.mutate(rng, b, ga.mutation_rate, ga.mutation_scale))

        population = np.array(children)
        fitness = _evaluate(evaluator, population, threads)
        stats = GenerationStats(generation, float(fitness.min()), float(fitness.mean()))
        history.append(stats)

        if stats.best < best_so_far - IMPROVEMENT_TOLERANCE:
            best_so_far = stats.best
            stall = 0
        else:
            stall += 1
        if generation % ga.log_every == 0:
            logger.info("generation %d: best %.6e rad, mean %.6e rad, %d evaluations",
                        generation, stats.best, stats.mean, evaluator.evaluations)
        if stall >= ga.stall_generations:
            stopped_on_stall = True
            logger.warning("GA stalled for %d generations, stopping at generation %d",
                           stall, generation)
            break

    best = int(np.argmin(fitness))
    best_genes = population[best].copy()
    result = OptimizationResult(
        best_layup=problem.layup(best_genes),
        best_objective=float(fitness[best]),
        best_genes=best_genes,
        history=history,
        evaluations=evaluator.evaluations,
        stopped_on_stall=stopped_on_stall,
    )
    logger.info("GA done: f = %.6e rad (%.4f deg) after %d generations, %d evaluations",
                result.best_objective, math.degrees(result.best_objective),
                history[-1].generation, result.evaluations)
    return result


# =============================================================================
# Artifacts
# =============================================================================

def write_history_csv(path: Union[str, Path], history: List[GenerationStats]) -> None:
    """Columns generation, best_rad, mean_rad."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["generation", "best_rad", "mean_rad"])
        for row in history:
            writer.writerow([row.generation, f"{row.best:.10e}", f"{row.mean:.10e}"])


def layup_block(layup: Layup) -> Dict[str, object]:
    """Layup in the run-configuration syntax (angles in degrees, thickness in um)."""
    thickness = {p.thickness for p in layup.plies}
    block: Dict[str, object] = {
        "angles_deg": [round(a, 6) for a in layup.angles_deg()],
        "symmetric": layup.symmetric,
    }
    if len(thickness) == 1:
        block["ply_thickness_um"] = round(thickness.pop() * 1e6, 6)
    else:
        block["ply_thicknesses_um"] = [round(p.thickness * 1e6, 6) for p in layup.plies]
    return block
