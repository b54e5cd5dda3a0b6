"""Differential evolution over integer base matrices.

Fitness is the density-evolution threshold.  Every generation builds one
challenger per population slot (mutation, crossover, chain repair) and keeps
whichever of incumbent and challenger has the larger threshold.

Randomness for slot ``k`` in generation ``g`` comes from its own stream
derived from ``(seed, g, k)``, so the run is reproducible regardless of how
fitness evaluation is scheduled.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .density import DEFAULT_DELTA, DEFAULT_T_MAX, threshold, thresholds_batch
from .protograph import BaseMatrix, degree_two_load

log = logging.getLogger(__name__)

_INIT_STREAM = 0
_SLOT_STREAM = 1


@dataclass
class OptimizerConfig:
    rows: int
    cols: int
    population_size: Optional[int] = None
    crossover_prob: float = 0.88
    mutation_weight: float = 0.5
    max_generations: int = 6000
    entry_cap: int = 6
    seed: int = 0
    tolerance: float = 1e-3
    t_max: int = DEFAULT_T_MAX
    delta: float = DEFAULT_DELTA
    final_tolerance: float = 1e-5
    parallelism: int = 1

    def __post_init__(self):
        if self.population_size is None:
            self.population_size = 10 * self.rows * self.cols
        if self.rows < 1 or self.cols < 1:
            raise ValueError("matrix shape must be at least 1x1")
        if self.population_size < 4:
            raise ValueError("population_size must be >= 4 for mutation")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError("crossover_prob must lie in [0, 1]")
        if self.entry_cap < 1:
            raise ValueError("entry_cap must be >= 1")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Candidate:
    matrix: np.ndarray
    fitness: Optional[float] = None
    generation_born: int = 0

    def key(self) -> bytes:
        return BaseMatrix(self.matrix).key()


def slot_rng(seed: int, generation: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_SLOT_STREAM, generation, slot))
    )


def init_population(cfg: OptimizerConfig, rng: np.random.Generator) -> list[Candidate]:
    """``N_P`` matrices with independent uniform binary entries."""
    mats = rng.integers(0, 2, size=(cfg.population_size, cfg.rows, cfg.cols))
    return [Candidate(m.astype(np.int64), None, 0) for m in mats]


def _matrix(c) -> np.ndarray:
    return c.matrix if isinstance(c, Candidate) else np.asarray(c)


def round_abs(x: np.ndarray) -> np.ndarray:
    """Absolute value rounded to the nearest integer, halves rounded up."""
    return np.floor(np.abs(x) + 0.5).astype(np.int64)


def mutate(
    population: Sequence, k: int, cfg: OptimizerConfig, rng: np.random.Generator
) -> np.ndarray:
    n = len(population)
    if n < 4:
        raise ValueError("mutation needs a population of at least 4")
    others = [i for i in range(n) if i != k]
    r1, r2, r3 = rng.choice(others, size=3, replace=False)
    b1, b2, b3 = (_matrix(population[i]) for i in (r1, r2, r3))
    m = round_abs(b1 + cfg.mutation_weight * (b2 - b3))
    return np.minimum(m, cfg.entry_cap)


def crossover(
    base: np.ndarray, mutant: np.ndarray, p_c: float, rng: np.random.Generator
) -> np.ndarray:
    base, mutant = np.asarray(base), np.asarray(mutant)
    if base.shape != mutant.shape:
        raise ValueError(f"shape mismatch: {base.shape} vs {mutant.shape}")
    take = rng.random(base.shape) < p_c
    return np.where(take, mutant, base)


class RepairResult(NamedTuple):
    matrix: np.ndarray
    added_edges: int


def repair_chains(matrix: np.ndarray, rng: np.random.Generator) -> RepairResult:
    """Reassign edges until every check meets at most one degree-two variable.

    An offending edge ``(c, v)`` moves to a check that has no edge to ``v``
    and no degree-two neighbour.  If no such check exists, ``v`` gains an
    extra edge to a random check instead, lifting it to degree 3.
    """
    B = np.array(matrix, dtype=np.int64, copy=True)
    rows = B.shape[0]
    added = 0
    while True:
        load = degree_two_load(B)
        bad = np.flatnonzero(load > 1)
        if len(bad) == 0:
            return RepairResult(B, added)
        deg2 = np.flatnonzero(B.sum(axis=0) == 2)
        # one entry per parallel edge, so the pick is uniform over edges
        offending = [
            (c, v) for c in bad for v in deg2 for _ in range(int(B[c, v]))
        ]
        c, v = offending[rng.integers(len(offending))]
        targets = [t for t in range(rows) if t != c and load[t] == 0 and B[t, v] == 0]
        if targets:
            t = targets[rng.integers(len(targets))]
            B[c, v] -= 1
            B[t, v] += 1
        else:
            t = rng.integers(rows)
            B[t, v] += 1
            added += 1


def select(incumbent: Candidate, challenger: Candidate) -> Candidate:
    """Incumbent survives only with strictly larger fitness."""
    if incumbent.fitness is None or challenger.fitness is None:
        raise ValueError("both candidates need a computed fitness")
    return incumbent if incumbent.fitness > challenger.fitness else challenger


class FitnessCache:
    """Threshold per distinct matrix content, evaluated in batches."""

    def __init__(self, cfg: OptimizerConfig, executor: Optional[ProcessPoolExecutor] = None):
        self.cfg = cfg
        self.values: dict[bytes, float] = {}
        self.executor = executor
        self.evaluations = 0

    def _evaluate(self, mats: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        args = (cfg.tolerance, cfg.t_max, cfg.delta)
        if self.executor is None or len(mats) < 2 * cfg.parallelism:
            return thresholds_batch(mats, *args)
        chunks = np.array_split(mats, cfg.parallelism)
        futures = [self.executor.submit(thresholds_batch, ch, *args) for ch in chunks if len(ch)]
        return np.concatenate([f.result() for f in futures])

    def fill(self, candidates: Sequence[Candidate]) -> None:
        pending: dict[bytes, np.ndarray] = {}
        for c in candidates:
            k = c.key()
            if k not in self.values and k not in pending:
                pending[k] = c.matrix
        if pending:
            keys = list(pending)
            vals = self._evaluate(np.stack([pending[k] for k in keys]))
            self.values.update(zip(keys, (float(v) for v in vals)))
            self.evaluations += len(keys)
        for c in candidates:
            c.fitness = self.values[c.key()]


@dataclass
class OptimizeResult:
    best: Candidate
    history: list[float]
    final_threshold: float
    config: OptimizerConfig
    evaluations: int = 0
    repairs_with_added_edges: int = 0
    wall_time: float = 0.0
    population: list[Candidate] = field(default_factory=list, repr=False)


ProgressSink = Callable[[int, float], None]


def make_challenger(
    population: Sequence[Candidate], k: int, generation: int, cfg: OptimizerConfig
) -> tuple[Candidate, int]:
    rng = slot_rng(cfg.seed, generation, k)
    mutant = mutate(population, k, cfg, rng)
    trial = crossover(population[k].matrix, mutant, cfg.crossover_prob, rng)
    fixed = repair_chains(trial, rng)
    return Candidate(fixed.matrix, None, generation + 1), fixed.added_edges


def optimize(cfg: OptimizerConfig, progress: Optional[ProgressSink] = None) -> OptimizeResult:
    """Run differential evolution for ``cfg.max_generations`` generations.

    ``progress(generation, best_fitness)`` is called for the initial
    population (generation 0) and after every generation.
    """
    start = time.perf_counter()
    executor = ProcessPoolExecutor(cfg.parallelism) if cfg.parallelism > 1 else None
    try:
        cache = FitnessCache(cfg, executor)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(_INIT_STREAM,)))
        population = init_population(cfg, rng)
        cache.fill(population)
        history = [max(c.fitness for c in population)]
        if progress:
            progress(0, history[0])
        grown = 0
        for g in range(cfg.max_generations):
            challengers = []
            for k in range(len(population)):
                ch, added = make_challenger(population, k, g, cfg)
                grown += added > 0
                challengers.append(ch)
            cache.fill(challengers)
            population = [select(inc, ch) for inc, ch in zip(population, challengers)]
            history.append(max(c.fitness for c in population))
            if progress:
                progress(g + 1, history[-1])
            log.debug("generation %d best %.4f", g + 1, history[-1])
    finally:
        if executor is not None:
            executor.shutdown()

    best = max(population, key=lambda c: c.fitness)
    if best.fitness > 0:
        final = threshold(best.matrix, cfg.final_tolerance, cfg.t_max, cfg.delta).epsilon_threshold
    else:
        final = 0.0
    return OptimizeResult(
        best=best,
        history=history,
        final_threshold=final,
        config=cfg,
        evaluations=cache.evaluations,
        repairs_with_added_edges=grown,
        wall_time=time.perf_counter() - start,
        population=population,
    )
