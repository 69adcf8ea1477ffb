"""Comparator search algorithms.

Full-solution side: a generational GA (tournament 2, elite 2, two-point
crossover at 0.7, one-point mutation at 0.075) and UMDA, both strictly
budget-bounded, plus the GA-driven reference-population evolution.
PS side: a GA over PS genomes and a restart hill climber, both scoring
with the aggregated PS objective and conforming to the miner's catalog
interface so the mining comparison can sweep them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .benchmarks import BenchmarkProblem
from .core import (
    STAR,
    ContractViolation,
    EvaluatedPopulation,
    FullSolution,
    PartialSolution,
)
from .metrics import EvalCounter
from .miner import (
    CatalogEntry,
    PSCatalog,
    _merge_into_buffer,
    _stable_top,
    _TripleScorer,
)


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 150
    tournament_size: int = 2
    elite_count: int = 2
    mutation_rate: float = 0.075
    crossover_rate: float = 0.7
    rng_seed: int = 0

    def validate(self) -> None:
        if not (0.0 <= self.mutation_rate <= 1.0 and 0.0 <= self.crossover_rate <= 1.0):
            raise ContractViolation("rates must lie in [0, 1]")
        if self.elite_count >= self.population_size:
            raise ContractViolation("elite_count must be below population_size")
        if self.elite_count < 0 or self.tournament_size < 2:
            raise ContractViolation("bad GA parameters")


@dataclass(frozen=True)
class UMDAConfig:
    population_size: int = 150
    selection_fraction: float = 0.5
    rng_seed: int = 0

    def validate(self) -> None:
        if not (0.0 < self.selection_fraction <= 1.0):
            raise ContractViolation("selection_fraction must be in (0, 1]")
        if self.population_size < 2:
            raise ContractViolation("population_size must be at least 2")


@dataclass
class SearchResult:
    best: FullSolution
    best_fitness: float
    # one row per generation: (generation, best fitness so far, evals used)
    history: list[tuple[int, float, int]]
    evals_used: int


def _random_matrix(cards: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, cards, size=(size, cards.shape[0]), dtype=np.uint8)


def _tournament_indices(
    fitness: np.ndarray, count: int, tournament_size: int, rng: np.random.Generator
) -> np.ndarray:
    contenders = rng.integers(0, fitness.shape[0], size=(count, tournament_size))
    winner_slot = np.argmax(fitness[contenders], axis=1)
    return contenders[np.arange(count), winner_slot]


def _make_offspring(
    pop: np.ndarray,
    fitness: np.ndarray,
    count: int,
    cfg: GAConfig,
    cards: np.ndarray,
    rng: np.random.Generator,
    num_symbols: np.ndarray | None = None,
) -> np.ndarray:
    """Tournament parents, two-point crossover, one-point mutation.

    `num_symbols` widens the mutation alphabet (used by the PS-space GA,
    where a cell can also mutate to the wildcard).
    """
    n = pop.shape[1]
    pairs = (count + 1) // 2
    parent_idx = _tournament_indices(fitness, 2 * pairs, cfg.tournament_size, rng)
    pa = pop[parent_idx[:pairs]]
    pb = pop[parent_idx[pairs:]]
    cuts = np.sort(rng.integers(0, n + 1, size=(pairs, 2)), axis=1)
    do_cross = rng.random(pairs) < cfg.crossover_rate
    cols = np.arange(n)
    seg = (cols >= cuts[:, :1]) & (cols < cuts[:, 1:]) & do_cross[:, None]
    children = np.concatenate([np.where(seg, pb, pa), np.where(seg, pa, pb)])[:count]
    children = np.ascontiguousarray(children)

    mut_rows = np.flatnonzero(rng.random(count) < cfg.mutation_rate)
    if mut_rows.size:
        alphabet = cards if num_symbols is None else num_symbols
        pos = rng.integers(0, n, size=mut_rows.size)
        vals = np.floor(rng.random(mut_rows.size) * alphabet[pos]).astype(np.uint8)
        if num_symbols is not None:
            vals[vals == cards[pos]] = STAR  # the extra symbol is the wildcard
        children[mut_rows, pos] = vals
    return children


def run_full_ga(
    problem: BenchmarkProblem, cfg: GAConfig, eval_budget: int
) -> SearchResult:
    """Generational elitist GA on full solutions, stopping at the budget.

    Every fitness call is counted; the last generation is truncated so the
    budget is respected exactly (a too-small budget returns the best of a
    partial initial population).
    """
    cfg.validate()
    if eval_budget < 1:
        raise ContractViolation("eval_budget must be at least 1")
    rng = np.random.default_rng(cfg.rng_seed)
    cards = np.asarray(problem.space.cardinalities, dtype=np.int64)
    counter = EvalCounter()

    size = min(cfg.population_size, eval_budget)
    pop = _random_matrix(cards, size, rng)
    fitness = problem.fitness_batch(pop)
    counter.add(size)

    best_i = int(np.argmax(fitness))
    best = pop[best_i].copy()
    best_fit = float(fitness[best_i])
    history = [(0, best_fit, counter.count)]

    gen = 0
    while counter.count < eval_budget:
        gen += 1
        elite_idx = np.argsort(-fitness, kind="stable")[: cfg.elite_count]
        room = min(cfg.population_size - cfg.elite_count, eval_budget - counter.count)
        children = _make_offspring(pop, fitness, room, cfg, cards, rng)
        child_fit = problem.fitness_batch(children)
        counter.add(len(children))
        pop = np.concatenate([pop[elite_idx], children])
        fitness = np.concatenate([fitness[elite_idx], child_fit])
        gen_best = int(np.argmax(fitness))
        if fitness[gen_best] > best_fit:
            best_fit = float(fitness[gen_best])
            best = pop[gen_best].copy()
        history.append((gen, best_fit, counter.count))

    return SearchResult(FullSolution(best.tobytes()), best_fit, history, counter.count)


def run_umda(
    problem: BenchmarkProblem, cfg: UMDAConfig, eval_budget: int
) -> SearchResult:
    """Univariate marginal EDA: truncate, fit clamped marginals, resample.

    Marginal probabilities are clamped to [1/N, 1 - 1/N] so no value ever
    becomes unreachable; the best solution seen is tracked across
    generations.
    """
    cfg.validate()
    if eval_budget < 1:
        raise ContractViolation("eval_budget must be at least 1")
    rng = np.random.default_rng(cfg.rng_seed)
    cards = np.asarray(problem.space.cardinalities, dtype=np.int64)
    n = cards.shape[0]
    maxc = int(cards.max())
    N = cfg.population_size
    eps = 1.0 / N
    counter = EvalCounter()

    size = min(N, eval_budget)
    pop = _random_matrix(cards, size, rng)
    fitness = problem.fitness_batch(pop)
    counter.add(size)

    best_i = int(np.argmax(fitness))
    best = pop[best_i].copy()
    best_fit = float(fitness[best_i])
    history = [(0, best_fit, counter.count)]

    gen = 0
    while counter.count < eval_budget:
        gen += 1
        keep = max(1, int(len(pop) * cfg.selection_fraction))
        top = np.argsort(-fitness, kind="stable")[:keep]
        selected = pop[top]

        probs = np.zeros((n, maxc))
        for i in range(n):
            counts = np.bincount(selected[:, i], minlength=maxc)[:maxc]
            p = counts / keep
            p = np.clip(p[: cards[i]], eps, 1.0 - eps)
            probs[i, : cards[i]] = p / p.sum()

        size = min(N, eval_budget - counter.count)
        pop = np.empty((size, n), dtype=np.uint8)
        for i in range(n):
            cdf = np.cumsum(probs[i, : cards[i]])
            pop[:, i] = np.searchsorted(cdf, rng.random(size), side="right")
        fitness = problem.fitness_batch(pop)
        counter.add(size)

        gen_best = int(np.argmax(fitness))
        if fitness[gen_best] > best_fit:
            best_fit = float(fitness[gen_best])
            best = pop[gen_best].copy()
        history.append((gen, best_fit, counter.count))

    return SearchResult(FullSolution(best.tobytes()), best_fit, history, counter.count)


def evolve_reference_population(
    problem: BenchmarkProblem, size: int, generations: int, cfg: GAConfig
) -> EvaluatedPopulation:
    """Uniform random population evolved with the standard GA settings.

    Zero generations returns the untouched random sample; the output size
    always equals `size` (elites carried, offspring fill the rest).
    """
    cfg.validate()
    if size < 1:
        raise ContractViolation("population size must be at least 1")
    rng = np.random.default_rng(cfg.rng_seed)
    cards = np.asarray(problem.space.cardinalities, dtype=np.int64)
    pop = _random_matrix(cards, size, rng)
    fitness = problem.fitness_batch(pop)
    for _ in range(generations):
        elite_idx = np.argsort(-fitness, kind="stable")[: min(cfg.elite_count, size)]
        children = _make_offspring(pop, fitness, size - elite_idx.size, cfg, cards, rng)
        child_fit = problem.fitness_batch(children)
        pop = np.concatenate([pop[elite_idx], children])
        fitness = np.concatenate([fitness[elite_idx], child_fit])
    return EvaluatedPopulation(problem.space, pop, fitness)


# --- PS-space baselines ---------------------------------------------------


def _random_ps_matrix(
    cards: np.ndarray, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform PS genomes over the per-cell alphabet (values plus wildcard)."""
    m = rng.integers(0, cards + 1, size=(size, cards.shape[0]), dtype=np.uint8)
    m[m == cards.astype(np.uint8)[None, :]] = STAR
    return m


def _catalog_from_keys(
    scorer: _TripleScorer,
    keys: list[bytes],
    pop: EvaluatedPopulation,
    qty_ret: int,
    evals_search: int,
) -> PSCatalog:
    """Final counted scoring pass over pooled keys, then the top slice."""
    counter = scorer.counter
    if not keys:
        return PSCatalog(pop.space, [], evals_used=counter.count, evals_search=evals_search)
    final_scores = scorer.final_scores(keys)
    top_keys, top_scores = _stable_top(keys, final_scores, qty_ret)
    entries = [
        CatalogEntry(PartialSolution(k), scorer.triple(k), float(s))
        for k, s in zip(top_keys, top_scores)
    ]
    return PSCatalog(pop.space, entries, evals_used=counter.count, evals_search=evals_search)


def run_ps_ga(
    pop: EvaluatedPopulation,
    cfg: GAConfig,
    eval_budget: int,
    stop_targets: list[PartialSolution] | None = None,
    qty_ret: int = 50,
) -> PSCatalog:
    """GA over PS genomes scored by the aggregated PS objective.

    Mutation resamples one cell uniformly from the cell's values plus the
    wildcard.  Returns the best `qty_ret` PSs ever seen (all-time buffer
    merged with the final population, re-ranked in one counted pass).
    """
    cfg.validate()
    if eval_budget < 1:
        raise ContractViolation("eval_budget must be at least 1")
    rng = np.random.default_rng(cfg.rng_seed)
    cards = np.asarray(pop.space.cardinalities, dtype=np.int64)
    counter = EvalCounter()
    scorer = _TripleScorer(pop, counter)
    targets = frozenset(t.cells for t in stop_targets) if stop_targets else None

    mat = _random_ps_matrix(cards, cfg.population_size, rng)
    keys = [row.tobytes() for row in mat]
    scores = scorer.search_scores(keys)
    buffer: dict[bytes, float] = {}
    buffer = _merge_into_buffer(buffer, keys, scores, qty_ret)

    def targets_reached() -> bool:
        if targets is None:
            return False
        key_set = set(keys)
        return all(t in buffer or t in key_set for t in targets)

    stopped = targets_reached()
    while not stopped and counter.count < eval_budget:
        elite_idx = np.argsort(-scores, kind="stable")[: cfg.elite_count]
        room = cfg.population_size - cfg.elite_count
        children = _make_offspring(
            mat, scores, room, cfg, cards, rng, num_symbols=cards + 1
        )
        mat = np.concatenate([mat[elite_idx], children])
        keys = [row.tobytes() for row in mat]
        scores = scorer.search_scores(keys)
        buffer = _merge_into_buffer(buffer, keys, scores, qty_ret)
        stopped = targets_reached()

    evals_search = counter.count
    pool: dict[bytes, None] = dict.fromkeys(buffer)
    for k in keys:
        pool[k] = None
    return _catalog_from_keys(scorer, list(pool), pop, qty_ret, evals_search)


def run_ps_hill_climber(
    pop: EvaluatedPopulation,
    eval_budget: int,
    stop_targets: list[PartialSolution] | None = None,
    qty_ret: int = 50,
    rng_seed: int = 0,
) -> PSCatalog:
    """Restarted steepest-ascent hill climbing over single-cell resamples.

    Each trial starts from a uniform random PS and ends at a local optimum
    of the aggregated score (ties broken by the lowest position); the local
    optima are pooled and the best `qty_ret` are returned.
    """
    if eval_budget < 1:
        raise ContractViolation("eval_budget must be at least 1")
    rng = np.random.default_rng(rng_seed)
    cards = np.asarray(pop.space.cardinalities, dtype=np.int64)
    counter = EvalCounter()
    scorer = _TripleScorer(pop, counter)
    targets = frozenset(t.cells for t in stop_targets) if stop_targets else None
    pool: dict[bytes, None] = {}

    def neighbors(cells: bytes) -> list[bytes]:
        out = []
        for i, v in enumerate(cells):
            for symbol in list(range(cards[i])) + [STAR]:
                if symbol != v:
                    b = bytearray(cells)
                    b[i] = symbol
                    out.append(bytes(b))
        return out

    while counter.count < eval_budget:
        current = _random_ps_matrix(cards, 1, rng)[0].tobytes()
        while True:
            batch = [current] + neighbors(current)
            scores = scorer.search_scores(batch)
            best_rel = 1 + int(np.argmax(scores[1:]))
            if scores[best_rel] > scores[0]:
                current = batch[best_rel]
            else:
                break  # local optimum ends the trial
            if counter.count >= eval_budget:
                break
        pool[current] = None
        if targets is not None and all(t in pool for t in targets):
            break

    evals_search = counter.count
    return _catalog_from_keys(scorer, list(pool), pop, qty_ret, evals_search)
