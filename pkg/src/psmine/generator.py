"""Assemble full solutions from a PS catalog by weighted pick-and-merge.

Draws catalog entries without replacement using the aggregated score as
the weight, merges the compatible ones until the merge limit is hit, and
fills every remaining wildcard with a uniform random value.  The original
fitness function is never called.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    STAR,
    ContractViolation,
    FullSolution,
    PartialSolution,
    SearchSpace,
    merge,
    mergeable,
)
from .miner import CatalogEntry, PSCatalog


@dataclass(frozen=True)
class GeneratorConfig:
    # maximum successful merges per solution; defaults to ceil(sqrt(n))
    merge_limit: int | None = None
    rng_seed: int = 0

    def resolved_limit(self, n: int) -> int:
        limit = self.merge_limit if self.merge_limit is not None else math.ceil(math.sqrt(n))
        if limit < 1:
            raise ContractViolation("merge_limit must be at least 1")
        return limit


def _draw_index(weights: np.ndarray, rng: np.random.Generator) -> int:
    total = weights.sum()
    if total > 0.0:
        p = weights / total
    else:
        p = np.full(weights.shape, 1.0 / weights.shape[0])
    return int(rng.choice(weights.shape[0], p=p))


def weighted_random_choice(
    entries: Sequence[CatalogEntry], rng: np.random.Generator
) -> CatalogEntry:
    """Sample one entry with probability proportional to its score.

    All-zero weights fall back to a uniform draw; negative weights are a
    contract violation.
    """
    if not entries:
        raise ContractViolation("cannot draw from an empty entry list")
    weights = np.array([e.score for e in entries], dtype=np.float64)
    if (weights < 0).any():
        raise ContractViolation("entry scores must be non-negative")
    return entries[_draw_index(weights, rng)]


def merge_from(
    catalog: PSCatalog, merge_limit: int, rng: np.random.Generator
) -> PartialSolution:
    """Draw entries without replacement and merge the compatible ones.

    Only successful merges count toward the limit; a conflicting draw
    just consumes the candidate.
    """
    if merge_limit < 1:
        raise ContractViolation("merge_limit must be at least 1")
    available = list(catalog.entries)
    weights = [e.score for e in available]
    if any(w < 0 for w in weights):
        raise ContractViolation("entry scores must be non-negative")
    current = PartialSolution.universal(catalog.space.n)
    added = 0
    while available and added < merge_limit:
        idx = _draw_index(np.array(weights, dtype=np.float64), rng)
        entry = available.pop(idx)
        weights.pop(idx)
        if mergeable(current, entry.ps):
            current = merge(current, entry.ps)
            added += 1
    return current


def fill_gaps(
    ps: PartialSolution, space: SearchSpace, rng: np.random.Generator
) -> FullSolution:
    """Replace every wildcard with a uniform random in-range value."""
    cells = bytearray(ps.cells)
    for i, v in enumerate(cells):
        if v == STAR:
            cells[i] = int(rng.integers(space.cardinalities[i]))
    return FullSolution(bytes(cells))


def generate(catalog: PSCatalog, cfg: GeneratorConfig, count: int) -> list[FullSolution]:
    """Produce `count` full solutions from the catalog, fitness-free.

    Batched equivalent of `fill_gaps(merge_from(...))` per solution: each
    solution's without-replacement weighted draw order comes from an
    exponential race (key = Exp/weight, zero-weight entries last in
    uniform order), which follows the same law as sequential
    score-proportional draws, and the merge loop runs vectorized across
    all solutions.
    """
    if count < 0:
        raise ContractViolation("count must be non-negative")
    rng = np.random.default_rng(cfg.rng_seed)
    n = catalog.space.n
    limit = cfg.resolved_limit(n)
    cards = np.asarray(catalog.space.cardinalities, dtype=np.int64)
    if count == 0:
        return []

    entries = catalog.entries
    m = len(entries)
    if m == 0:
        filled = (rng.random((count, n)) * cards).astype(np.uint8)
        return [FullSolution(row.tobytes()) for row in filled]

    weights = np.array([e.score for e in entries], dtype=np.float64)
    if (weights < 0).any():
        raise ContractViolation("entry scores must be non-negative")
    patterns = np.frombuffer(
        b"".join(e.ps.cells for e in entries), dtype=np.uint8
    ).reshape(m, n)

    keys = np.full((count, m), np.inf)
    positive = weights > 0
    if positive.any():
        keys[:, positive] = rng.exponential(size=(count, int(positive.sum()))) / weights[positive]
    zero = ~positive
    if zero.any():
        # zero-weight entries are drawn after every positive one, in
        # uniform random order among themselves
        keys[:, zero] = 1e300 * (1.0 + rng.random(size=(count, int(zero.sum()))))
    order = np.argsort(keys, axis=1, kind="stable")

    current = np.full((count, n), STAR, dtype=np.uint8)
    added = np.zeros(count, dtype=np.int64)
    for step in range(m):
        cand = patterns[order[:, step]]
        cand_fixed = cand != STAR
        conflict = (cand_fixed & (current != STAR) & (current != cand)).any(axis=1)
        take = (added < limit) & ~conflict
        write = take[:, None] & cand_fixed
        current[write] = cand[write]
        added += take

    gaps = current == STAR
    filled = (rng.random((count, n)) * cards).astype(np.uint8)
    current[gaps] = filled[gaps]
    return [FullSolution(row.tobytes()) for row in current]
