"""Archive-based partial-solution miner.

Each generation tournament-selects parents from the PS population, expands
their local neighborhoods (simplifications and/or specializations), moves
the parents into an exclusion archive, and rebuilds the population from the
union minus the archive, truncated to the population size by aggregated
score.  The archive accumulates everything ever selected and the final
catalog is the top slice of one last scoring pass over it.

PSs are handled internally as bytes keys (cell value 255 = wildcard) so
set algebra stays cheap; metric triples are cached per run because the
reference population never changes within one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import (
    STAR,
    ContractViolation,
    EvaluatedPopulation,
    PartialSolution,
    SearchSpace,
    format_partial,
    parse_partial,
)
from .metrics import EvalCounter, MetricTriple, aggregate_from_triples, remap

SIMPLIFICATION = "simplification"
SPECIALIZATION = "specialization"
FULL_LOCAL = "full"
VARIANTS = (SIMPLIFICATION, SPECIALIZATION, FULL_LOCAL)


@dataclass(frozen=True)
class MinerConfig:
    population_size: int = 150
    variant: str = SPECIALIZATION
    use_archive: bool = True
    qty_ret: int = 50
    eval_budget: int = 100_000
    tournament_size: int = 2
    # parents picked per generation; defaults to population_size // 3
    selected_count: int | None = None
    rng_seed: int = 0

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ContractViolation(f"unknown variant {self.variant!r}")
        if self.tournament_size < 2:
            raise ContractViolation("tournament size must be at least 2")
        if self.population_size < self.tournament_size:
            raise ContractViolation("population size must be >= tournament size")
        if self.qty_ret < 1:
            raise ContractViolation("qty_ret must be at least 1")
        if self.selected_count is not None and self.selected_count < 1:
            raise ContractViolation("selected_count must be at least 1")

    @property
    def parents_per_generation(self) -> int:
        if self.selected_count is not None:
            return self.selected_count
        return max(1, self.population_size // 3)


@dataclass(frozen=True)
class CatalogEntry:
    ps: PartialSolution
    metrics: MetricTriple
    score: float


@dataclass
class PSCatalog:
    """Ranked mined PSs with their metric triples and aggregated scores."""

    space: SearchSpace
    entries: list[CatalogEntry]
    evals_used: int = 0
    # evaluations consumed by the search loop itself, excluding the final
    # ranking pass (which evals_used includes)
    evals_search: int = 0
    _patterns: frozenset = field(init=False, repr=False, default=frozenset())

    def __post_init__(self):
        self._patterns = frozenset(e.ps.cells for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, ps: PartialSolution) -> bool:
        return ps.cells in self._patterns

    def scores(self) -> np.ndarray:
        return np.array([e.score for e in self.entries])

    def to_tsv(self) -> str:
        lines = []
        for e in self.entries:
            pattern = format_partial(e.ps, self.space)
            lines.append(
                f"{e.score!r}\t{e.metrics.mean_fitness!r}"
                f"\t{e.metrics.simplicity}\t{e.metrics.atomicity!r}\t{pattern}"
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_tsv(cls, text: str, space: SearchSpace) -> "PSCatalog":
        entries = []
        for line in text.splitlines():
            if not line.strip():
                continue
            score, mean, simp, atom, pattern = line.split("\t")
            ps = parse_partial(pattern, space)
            entries.append(
                CatalogEntry(ps, MetricTriple(int(simp), float(mean), float(atom)), float(score))
            )
        return cls(space, entries)

    def to_json(self) -> str:
        payload = {
            "cardinalities": list(self.space.cardinalities),
            "evals_used": self.evals_used,
            "evals_search": self.evals_search,
            "entries": [
                {
                    "pattern": format_partial(e.ps, self.space),
                    "score": e.score,
                    "mean_fitness": e.metrics.mean_fitness,
                    "simplicity": e.metrics.simplicity,
                    "atomicity": e.metrics.atomicity,
                }
                for e in self.entries
            ],
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PSCatalog":
        payload = json.loads(text)
        space = SearchSpace(payload["cardinalities"])
        entries = [
            CatalogEntry(
                parse_partial(item["pattern"], space),
                MetricTriple(
                    int(item["simplicity"]),
                    float(item["mean_fitness"]),
                    float(item["atomicity"]),
                ),
                float(item["score"]),
            )
            for item in payload["entries"]
        ]
        return cls(
            space,
            entries,
            evals_used=int(payload.get("evals_used", 0)),
            evals_search=int(payload.get("evals_search", 0)),
        )


def get_init(
    variant: str, pop: EvaluatedPopulation, population_size: int
) -> list[PartialSolution]:
    """Initial PS population for a local-search variant.

    Specialization starts from the universal PS; simplification from the
    top population members (by raw fitness, ties by member index) as fully
    fixed PSs; full-local from the union of both.
    """
    if variant not in VARIANTS:
        raise ContractViolation(f"unknown variant {variant!r}")
    out: dict[bytes, None] = {}
    if variant in (SPECIALIZATION, FULL_LOCAL):
        out[PartialSolution.universal(pop.space.n).cells] = None
    if variant in (SIMPLIFICATION, FULL_LOCAL):
        order = np.argsort(-pop.raw_fitness, kind="stable")[:population_size]
        for i in order:
            out[pop.matrix[i].tobytes()] = None
    return [PartialSolution(cells) for cells in out]


def get_local(variant: str, ps: PartialSolution, space: SearchSpace) -> list[PartialSolution]:
    """Local neighborhood: unfix one cell and/or fix one wildcard each way."""
    if variant not in VARIANTS:
        raise ContractViolation(f"unknown variant {variant!r}")
    return [
        PartialSolution(cells)
        for cells in _local_bytes(variant, ps.cells, space.cardinalities)
    ]


def _local_bytes(variant: str, cells: bytes, cards: tuple[int, ...]) -> list[bytes]:
    out = []
    if variant in (SIMPLIFICATION, FULL_LOCAL):
        for i, v in enumerate(cells):
            if v != STAR:
                b = bytearray(cells)
                b[i] = STAR
                out.append(bytes(b))
    if variant in (SPECIALIZATION, FULL_LOCAL):
        for i, v in enumerate(cells):
            if v == STAR:
                for value in range(cards[i]):
                    b = bytearray(cells)
                    b[i] = value
                    out.append(bytes(b))
    return out


class _TripleScorer:
    """Budget-counted batch scoring with a per-run metric-triple cache.

    Triples are deterministic for a fixed reference population, so they are
    cached by PS key; every PS in a scored batch still counts against the
    budget, cached or not.

    Two scoring views share the cache.  Generation scoring uses fixed
    scales for simplicity (wildcard fraction) and mean fitness (position
    within the population's raw fitness range) with only atomicity
    remapped per batch; anchoring those two scales keeps deceptive
    mean-fitness gradients and tiny per-batch simplicity spreads from
    swamping the linkage signal while the search is still shallow.  Final
    catalog ranking remaps all three metrics across the ranked set, as
    `aggregate_scores` does.
    """

    def __init__(self, pop: EvaluatedPopulation, counter: EvalCounter):
        self.index = pop.index
        self.n = pop.space.n
        self.counter = counter
        self.cache: dict[bytes, tuple[int, float, float]] = {}
        raw = pop.raw_fitness
        self._fmin = float(raw.min())
        self._fspan = float(raw.max()) - self._fmin or 1.0

    def _triples_matrix(self, keys: list[bytes]) -> np.ndarray:
        # only novel metric computations are charged against the budget;
        # re-scoring a cached PS in a later batch is free
        missing = [k for k in keys if k not in self.cache]
        if missing:
            mat = np.frombuffer(b"".join(missing), dtype=np.uint8)
            simp, mean, atom = self.index.triples(mat.reshape(len(missing), self.n))
            for i, k in enumerate(missing):
                self.cache[k] = (int(simp[i]), float(mean[i]), float(atom[i]))
            self.counter.add(len(missing))
        return np.array([self.cache[k] for k in keys], dtype=np.float64)

    def search_scores(self, keys: list[bytes]) -> np.ndarray:
        trip = self._triples_matrix(keys)
        simp = trip[:, 0] / self.n
        mean = np.where(
            np.isfinite(trip[:, 1]), (trip[:, 1] - self._fmin) / self._fspan, 0.0
        )
        return (simp + mean + remap(trip[:, 2])) / 3.0

    def final_scores(self, keys: list[bytes]) -> np.ndarray:
        trip = self._triples_matrix(keys)
        return aggregate_from_triples(trip[:, 0], trip[:, 1], trip[:, 2])

    def triple(self, key: bytes) -> MetricTriple:
        s, m, a = self.cache[key]
        return MetricTriple(s, m, a)


def _tournament_select(
    scores: np.ndarray, count: int, tournament_size: int, rng: np.random.Generator
) -> list[int]:
    """Pick winners of size-k tournaments, removing each winner from the pool."""
    pool = list(range(len(scores)))
    picked: list[int] = []
    count = min(count, len(pool))
    while len(picked) < count:
        m = len(pool)
        if m == 1:
            picked.append(pool.pop())
            break
        k = min(tournament_size, m)
        slots: list[int] = []
        while len(slots) < k:
            j = int(rng.random() * m)
            if j not in slots:
                slots.append(j)
        best = slots[0]
        for j in slots[1:]:
            if scores[pool[j]] > scores[pool[best]]:
                best = j
        picked.append(pool[best])
        pool[best] = pool[-1]
        pool.pop()
    return picked


def _stable_top(keys: list[bytes], scores: np.ndarray, limit: int):
    order = np.argsort(-scores, kind="stable")[:limit]
    return [keys[i] for i in order], scores[order]


def _merge_into_buffer(
    buffer: dict[bytes, float], keys: list[bytes], scores: np.ndarray, limit: int
) -> dict[bytes, float]:
    """Keep the all-time best `limit` PSs by their most recent score."""
    for k, s in zip(keys, scores):
        buffer[k] = float(s)
    if len(buffer) <= limit:
        return buffer
    items = sorted(enumerate(buffer.items()), key=lambda t: (-t[1][1], t[0]))
    return dict(item for _, item in items[:limit])


def mine(
    cfg: MinerConfig,
    pop: EvaluatedPopulation,
    stop_targets: list[PartialSolution] | None = None,
) -> PSCatalog:
    """Run the archive-based miner and return the ranked catalog.

    Stops when the evaluation budget is spent (the batch in flight may
    overshoot it by at most one generation, bounded by population_size
    times the largest locality) or, if `stop_targets` is given, as soon as
    every target PS has entered the archive (or, without the archive, the
    best-seen buffer or current population).  The final ranking pass over
    the archive also counts against `evals_used`.
    """
    cfg.validate()
    space = pop.space
    cards = space.cardinalities
    counter = EvalCounter()

    if cfg.eval_budget <= 0:
        return PSCatalog(space, [], evals_used=0, evals_search=0)

    targets: frozenset[bytes] | None = None
    if stop_targets is not None:
        targets = frozenset(t.cells for t in stop_targets)

    scorer = _TripleScorer(pop, counter)
    rng = np.random.default_rng(cfg.rng_seed)

    pop_keys = [ps.cells for ps in get_init(cfg.variant, pop, cfg.population_size)]
    scores = scorer.search_scores(pop_keys)

    archive: dict[bytes, None] = {}
    buffer: dict[bytes, float] = {}
    if not cfg.use_archive:
        buffer = _merge_into_buffer(buffer, pop_keys, scores, cfg.qty_ret)

    def targets_reached() -> bool:
        if targets is None:
            return False
        if cfg.use_archive:
            return all(t in archive for t in targets)
        pop_set = set(pop_keys)
        return all(t in buffer or t in pop_set for t in targets)

    stopped = targets_reached()
    while not stopped and counter.count < cfg.eval_budget and pop_keys:
        selected = _tournament_select(
            scores, cfg.parents_per_generation, cfg.tournament_size, rng
        )
        selected_keys = [pop_keys[i] for i in selected]
        if cfg.use_archive:
            for k in selected_keys:
                archive[k] = None
            if targets_reached():
                stopped = True
                break

        localities: dict[bytes, None] = {}
        for k in selected_keys:
            for child in _local_bytes(cfg.variant, k, cards):
                localities[child] = None

        candidates: dict[bytes, None] = {}
        if cfg.use_archive:
            for k in pop_keys:
                if k not in archive:
                    candidates[k] = None
            for k in localities:
                if k not in archive:
                    candidates[k] = None
        else:
            for k in pop_keys:
                candidates[k] = None
            for k in localities:
                candidates[k] = None

        if not candidates:
            break  # search space exhausted by the archive

        cand_keys = list(candidates)
        cand_scores = scorer.search_scores(cand_keys)
        pop_keys, scores = _stable_top(cand_keys, cand_scores, cfg.population_size)

        if not cfg.use_archive:
            buffer = _merge_into_buffer(buffer, cand_keys, cand_scores, cfg.qty_ret)
            if targets_reached():
                stopped = True

    evals_search = counter.count

    if cfg.use_archive:
        source = list(archive) if archive else list(pop_keys)
    else:
        merged: dict[bytes, None] = dict.fromkeys(buffer)
        for k in pop_keys:
            merged[k] = None
        source = list(merged)

    if not source:
        return PSCatalog(space, [], evals_used=counter.count, evals_search=evals_search)

    final_scores = scorer.final_scores(source)
    top_keys, top_scores = _stable_top(source, final_scores, cfg.qty_ret)
    entries = [
        CatalogEntry(PartialSolution(k), scorer.triple(k), float(s))
        for k, s in zip(top_keys, top_scores)
    ]
    return PSCatalog(space, entries, evals_used=counter.count, evals_search=evals_search)
