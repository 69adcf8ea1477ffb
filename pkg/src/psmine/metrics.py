"""The three PS quality metrics and their single-objective aggregation.

A PS is judged by simplicity (wildcard count), mean fitness of the
population members containing it, and atomicity (the minimum
mutual-information-style contribution among its fixed cells).  The miner
optimizes the mean of the three after a per-batch min-max remap.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .core import (
    STAR,
    ContractViolation,
    EvaluatedPopulation,
    PartialSolution,
    observations,
)

# Sentinel mean fitness for a PS with no observations: loses every
# comparison, and remaps to 0 in aggregate_scores.
WORST = float("-inf")


class MetricTriple(NamedTuple):
    simplicity: int
    mean_fitness: float
    atomicity: float


class EvalCounter:
    """Mutable evaluation counter owned by a single run."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, k: int) -> None:
        self.count += k

    def __repr__(self) -> str:
        return f"EvalCounter({self.count})"


def simplicity(ps: PartialSolution) -> int:
    """Number of wildcard cells."""
    return ps.cells.count(STAR)


def mean_fitness(pop: EvaluatedPopulation, ps: PartialSolution) -> float:
    """Average raw fitness over the PS's observations; WORST if there are none."""
    idx = observations(pop, ps)
    if idx.size == 0:
        return WORST
    return float(pop.raw_fitness[idx].sum() / idx.size)


def benefit(pop: EvaluatedPopulation, ps: PartialSolution) -> float:
    """Sum of normalized fitness over the PS's observations."""
    idx = observations(pop, ps)
    return float(pop.norm_fitness[idx].sum())


def isolate(ps: PartialSolution, k: int) -> PartialSolution:
    """PS with only position k fixed, keeping ps's value there."""
    if not ps.is_fixed(k):
        raise ContractViolation(f"position {k} is not fixed")
    return PartialSolution.universal(len(ps)).with_cell(k, ps.cells[k])


def exclude(ps: PartialSolution, k: int) -> PartialSolution:
    """PS with position k unfixed."""
    if not ps.is_fixed(k):
        raise ContractViolation(f"position {k} is not fixed")
    return ps.with_cell(k, STAR)


def contribution(pop: EvaluatedPopulation, ps: PartialSolution, k: int) -> float:
    """Dependence of cell k on the rest of ps, in nats.

    p_ab * ln(p_ab / (p_a * p_b)) with p_ab = benefit(ps),
    p_a = benefit(isolate(ps, k)), p_b = benefit(exclude(ps, k)); zero
    whenever any of the three benefits is zero (the log is undefined there).
    """
    if not ps.is_fixed(k):
        raise ContractViolation(f"position {k} is not fixed")
    p_ab = benefit(pop, ps)
    p_a = benefit(pop, isolate(ps, k))
    p_b = benefit(pop, exclude(ps, k))
    if p_ab <= 0.0 or p_a <= 0.0 or p_b <= 0.0:
        return 0.0
    return p_ab * float(np.log(p_ab / (p_a * p_b)))


def atomicity(pop: EvaluatedPopulation, ps: PartialSolution) -> float:
    """Minimum contribution over fixed cells; 0 for the universal PS."""
    fixed = ps.fixed_positions
    if not fixed:
        return 0.0
    return min(contribution(pop, ps, k) for k in fixed)


def metric_triple(pop: EvaluatedPopulation, ps: PartialSolution) -> MetricTriple:
    return MetricTriple(simplicity(ps), mean_fitness(pop, ps), atomicity(pop, ps))


def batch_triples(
    pop: EvaluatedPopulation, batch: Sequence[PartialSolution]
) -> list[MetricTriple]:
    """Metric triples for a batch, computed through the bitset index."""
    if not batch:
        return []
    n = pop.space.n
    mat = np.frombuffer(b"".join(ps.cells for ps in batch), dtype=np.uint8)
    simp, mean, atom = pop.index.triples(mat.reshape(len(batch), n))
    return [
        MetricTriple(int(s), float(m), float(a)) for s, m, a in zip(simp, mean, atom)
    ]


def remap(values: np.ndarray) -> np.ndarray:
    """Min-max remap into [0, 1] across a batch.

    WORST entries map to 0 and are excluded from the min/max; a constant
    batch maps to all 0.5 (neutral contribution to the 3-way mean).
    """
    values = np.asarray(values, dtype=np.float64)
    out = np.zeros(values.shape)
    finite = values != WORST
    if not finite.any():
        return out
    fin = values[finite]
    lo = fin.min()
    hi = fin.max()
    if hi == lo:
        out[finite] = 0.5
    else:
        out[finite] = (fin - lo) / (hi - lo)
    return out


def aggregate_from_triples(
    simp: np.ndarray, mean: np.ndarray, atom: np.ndarray
) -> np.ndarray:
    """Per-batch remap of each metric, then the per-item mean of the three."""
    return (remap(simp) + remap(mean) + remap(atom)) / 3.0


def aggregate_scores(
    pop: EvaluatedPopulation,
    batch: Sequence[PartialSolution],
    counter: EvalCounter | None = None,
) -> np.ndarray:
    """Aggregated scores in [0, 1] for a batch of PSs.

    Every PS scored counts as one evaluation against `counter`; the remap
    is relative to this batch only.
    """
    if not batch:
        raise ContractViolation("aggregate_scores needs a non-empty batch")
    triples = batch_triples(pop, batch)
    if counter is not None:
        counter.add(len(batch))
    simp = np.array([t.simplicity for t in triples], dtype=np.float64)
    mean = np.array([t.mean_fitness for t in triples], dtype=np.float64)
    atom = np.array([t.atomicity for t in triples], dtype=np.float64)
    return aggregate_from_triples(simp, mean, atom)
