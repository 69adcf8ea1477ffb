"""Deceptive and modular binary benchmarks with known target PSs.

Three problem families, each with the linked variable groups scattered by
a seeded position shuffle so that adjacency carries no information:

- royal road: disjoint groups of k bits, one fitness point per all-ones
  group; targets are the all-ones group patterns.
- royal road with overlaps: q groups of k positions arranged around a
  cycle of l < q*k positions so consecutive groups share cells, each group
  demanding its own random bit pattern.  Overlapping groups frequently
  conflict, so the maximum reachable fitness is usually below q and is
  found by exhaustive enumeration at construction.
- trap-k: per-group unitation trap (k at u = k, else k - u - 1), which
  rewards zeros everywhere except at the all-ones optimum.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import (
    ContractViolation,
    FullSolution,
    PartialSolution,
    SearchSpace,
)
from .miner import PSCatalog

GROUP_COUNT = "group-count"
TRAP = "trap"


@dataclass
class BenchmarkProblem:
    """Problem bundle: space, fitness, target PSs and the optimum test."""

    name: str
    kind: str
    space: SearchSpace
    groups: tuple[tuple[int, ...], ...]
    group_values: tuple[tuple[int, ...], ...]
    k: int
    permutation: tuple[int, ...]
    max_fitness: float
    params: dict

    @property
    def targets(self) -> list[PartialSolution]:
        out = []
        for group, values in zip(self.groups, self.group_values):
            ps = PartialSolution.universal(self.space.n)
            for pos, value in zip(group, values):
                ps = ps.with_cell(pos, value)
            out.append(ps)
        return out

    def fitness_batch(self, matrix: np.ndarray) -> np.ndarray:
        matrix = np.asarray(matrix)
        total = np.zeros(matrix.shape[0], dtype=np.float64)
        if self.kind == GROUP_COUNT:
            for group, values in zip(self.groups, self.group_values):
                total += (matrix[:, list(group)] == np.asarray(values)).all(axis=1)
        elif self.kind == TRAP:
            for group in self.groups:
                u = matrix[:, list(group)].sum(axis=1).astype(np.int64)
                total += np.where(u == self.k, self.k, self.k - u - 1)
        else:
            raise ContractViolation(f"unknown problem kind {self.kind!r}")
        return total

    def fitness(self, x: FullSolution) -> float:
        if len(x.values) != self.space.n:
            raise ContractViolation("solution length does not match problem")
        row = np.frombuffer(x.values, dtype=np.uint8).reshape(1, -1)
        return float(self.fitness_batch(row)[0])

    def is_global_optimum(self, x: FullSolution) -> bool:
        return self.fitness(x) == self.max_fitness

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "kind": self.kind,
                "cardinalities": list(self.space.cardinalities),
                "groups": [list(g) for g in self.groups],
                "group_values": [list(v) for v in self.group_values],
                "k": self.k,
                "permutation": list(self.permutation),
                "max_fitness": self.max_fitness,
                "params": self.params,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "BenchmarkProblem":
        d = json.loads(text)
        return cls(
            name=d["name"],
            kind=d["kind"],
            space=SearchSpace(d["cardinalities"]),
            groups=tuple(tuple(g) for g in d["groups"]),
            group_values=tuple(tuple(v) for v in d["group_values"]),
            k=int(d["k"]),
            permutation=tuple(d["permutation"]),
            max_fitness=float(d["max_fitness"]),
            params=d["params"],
        )


def royal_road(k: int = 4, num_groups: int = 5, rng_seed: int = 0) -> BenchmarkProblem:
    """Disjoint all-ones groups over shuffled positions; optimum all ones."""
    n = k * num_groups
    rng = np.random.default_rng(rng_seed)
    perm = tuple(int(p) for p in rng.permutation(n))
    groups = tuple(tuple(sorted(perm[g * k : (g + 1) * k])) for g in range(num_groups))
    return BenchmarkProblem(
        name="rr",
        kind=GROUP_COUNT,
        space=SearchSpace.binary(n),
        groups=groups,
        group_values=tuple((1,) * k for _ in range(num_groups)),
        k=k,
        permutation=perm,
        max_fitness=float(num_groups),
        params={"k": k, "num_groups": num_groups, "rng_seed": rng_seed},
    )


def royal_road_overlaps(
    k: int = 4, q: int = 5, l: int = 15, rng_seed: int = 0
) -> BenchmarkProblem:
    """q overlapping random-valued groups around a cycle of l positions.

    Group g occupies k consecutive slots starting at floor(g*l/q) on a
    cycle of shuffled positions, so l < q*k forces neighbors to share
    cells; each group demands independent random bits, so shared cells
    often conflict and the groups rarely all fit in one solution.  The
    exact maximum fitness is found by one exhaustive sweep of the 2^l
    space at construction so the optimum predicate is exact.
    """
    if l >= q * k:
        raise ContractViolation("need l < q*k so the groups overlap")
    rng = np.random.default_rng(rng_seed)
    perm = tuple(int(p) for p in rng.permutation(l))
    groups = []
    group_values = []
    for g in range(q):
        start = (g * l) // q
        slots = [(start + j) % l for j in range(k)]
        order = np.argsort([perm[s] for s in slots])
        values = rng.integers(0, 2, size=k)
        groups.append(tuple(perm[slots[i]] for i in order))
        group_values.append(tuple(int(values[i]) for i in order))
    if len(set(groups)) < q:
        raise ContractViolation("could not place q distinct overlapping groups")
    problem = BenchmarkProblem(
        name="rro",
        kind=GROUP_COUNT,
        space=SearchSpace.binary(l),
        groups=tuple(groups),
        group_values=tuple(group_values),
        k=k,
        permutation=perm,
        max_fitness=float(q),  # provisional until the exhaustive sweep below
        params={"k": k, "q": q, "l": l, "rng_seed": rng_seed},
    )
    everything = ((np.arange(2**l, dtype=np.uint32)[:, None] >> np.arange(l)) & 1).astype(
        np.uint8
    )
    problem.max_fitness = float(problem.fitness_batch(everything).max())
    return problem


def trap_k(k: int = 5, num_groups: int = 5, rng_seed: int = 0) -> BenchmarkProblem:
    """Deceptive unitation traps over shuffled disjoint groups."""
    n = k * num_groups
    rng = np.random.default_rng(rng_seed)
    perm = tuple(int(p) for p in rng.permutation(n))
    groups = tuple(tuple(sorted(perm[g * k : (g + 1) * k])) for g in range(num_groups))
    return BenchmarkProblem(
        name="trap",
        kind=TRAP,
        space=SearchSpace.binary(n),
        groups=groups,
        group_values=tuple((1,) * k for _ in range(num_groups)),
        k=k,
        permutation=perm,
        max_fitness=float(k * num_groups),
        params={"k": k, "num_groups": num_groups, "rng_seed": rng_seed},
    )


PROBLEM_FACTORIES = {
    "rr": royal_road,
    "rro": royal_road_overlaps,
    "trap": trap_k,
}


def make_problem(name: str, rng_seed: int = 0) -> BenchmarkProblem:
    if name not in PROBLEM_FACTORIES:
        raise ContractViolation(f"unknown problem {name!r}")
    return PROBLEM_FACTORIES[name](rng_seed=rng_seed)


def catalog_contains_all_targets(catalog: PSCatalog, problem: BenchmarkProblem) -> bool:
    """True iff every target PS appears verbatim in the catalog."""
    return all(t in catalog for t in problem.targets)
