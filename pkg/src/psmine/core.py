"""Search spaces, full/partial solutions, and the merge algebra.

A partial solution (PS) fixes some parameter positions and leaves the rest
as wildcards.  Cells are stored as bytes so PSs are cheap to hash, compare
and batch into numpy matrices; the byte value 255 marks a wildcard, which
caps supported cardinalities at 255.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

STAR = 255


class ContractViolation(ValueError):
    """Raised when an operation is called outside its contract."""


class SearchSpace:
    """Fixed-length discrete search space, one cardinality per position."""

    __slots__ = ("cardinalities",)

    def __init__(self, cardinalities: Iterable[int]):
        cards = tuple(int(c) for c in cardinalities)
        if len(cards) < 1:
            raise ContractViolation("search space needs at least one parameter")
        if any(c < 2 for c in cards):
            raise ContractViolation("every cardinality must be at least 2")
        if any(c > STAR for c in cards):
            raise ContractViolation(f"cardinalities above {STAR} are not supported")
        self.cardinalities = cards

    @classmethod
    def binary(cls, n: int) -> "SearchSpace":
        return cls((2,) * n)

    @property
    def n(self) -> int:
        return len(self.cardinalities)

    def __eq__(self, other) -> bool:
        return isinstance(other, SearchSpace) and self.cardinalities == other.cardinalities

    def __hash__(self) -> int:
        return hash(self.cardinalities)

    def __repr__(self) -> str:
        return f"SearchSpace({list(self.cardinalities)})"

    def validate_full(self, x: "FullSolution") -> None:
        if len(x.values) != self.n:
            raise ContractViolation(f"solution length {len(x.values)} != space n {self.n}")
        for i, v in enumerate(x.values):
            if v >= self.cardinalities[i]:
                raise ContractViolation(f"value {v} at position {i} out of range")

    def validate_partial(self, ps: "PartialSolution") -> None:
        if len(ps.cells) != self.n:
            raise ContractViolation(f"PS length {len(ps.cells)} != space n {self.n}")
        for i, v in enumerate(ps.cells):
            if v != STAR and v >= self.cardinalities[i]:
                raise ContractViolation(f"fixed value {v} at position {i} out of range")


class FullSolution:
    """Immutable tuple of parameter values."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable[int] | bytes):
        self.values = bytes(values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, FullSolution) and self.values == other.values

    def __hash__(self) -> int:
        return hash(self.values)

    def __repr__(self) -> str:
        return f"FullSolution({format_full(self)!r})"


class PartialSolution:
    """Immutable pattern of fixed values and wildcards over a search space."""

    __slots__ = ("cells",)

    def __init__(self, cells: Iterable[int] | bytes):
        self.cells = bytes(cells)

    @classmethod
    def universal(cls, n: int) -> "PartialSolution":
        """The all-wildcard PS, identity element of merge."""
        return cls(bytes([STAR]) * n)

    @property
    def fixed_positions(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.cells) if v != STAR)

    @property
    def fixed_count(self) -> int:
        return len(self.cells) - self.cells.count(STAR)

    def is_fixed(self, k: int) -> bool:
        return self.cells[k] != STAR

    def with_cell(self, k: int, value: int) -> "PartialSolution":
        b = bytearray(self.cells)
        b[k] = value
        return PartialSolution(bytes(b))

    def __len__(self) -> int:
        return len(self.cells)

    def __eq__(self, other) -> bool:
        return isinstance(other, PartialSolution) and self.cells == other.cells

    def __hash__(self) -> int:
        return hash(self.cells)

    def __repr__(self) -> str:
        return f"PartialSolution({format_partial(self)!r})"


def contains(x: FullSolution, ps: PartialSolution) -> bool:
    """True iff x agrees with every fixed cell of ps."""
    if len(x.values) != len(ps.cells):
        raise ContractViolation("solution and PS lengths differ")
    return all(c == STAR or c == v for v, c in zip(x.values, ps.cells))


def mergeable(a: PartialSolution, b: PartialSolution) -> bool:
    """True iff no position holds two distinct fixed values."""
    if len(a.cells) != len(b.cells):
        raise ContractViolation("PS lengths differ")
    return not any(
        ca != STAR and cb != STAR and ca != cb for ca, cb in zip(a.cells, b.cells)
    )


def merge(a: PartialSolution, b: PartialSolution) -> PartialSolution:
    """Positionwise union of fixed cells; requires mergeable(a, b)."""
    if not mergeable(a, b):
        raise ContractViolation("PSs conflict on a fixed position")
    return PartialSolution(
        bytes(ca if ca != STAR else cb for ca, cb in zip(a.cells, b.cells))
    )


def to_full(ps: PartialSolution) -> FullSolution:
    """Convert a fully fixed PS to a FullSolution."""
    if STAR in ps.cells:
        raise ContractViolation("PS still has wildcard cells")
    return FullSolution(ps.cells)


def from_full(x: FullSolution) -> PartialSolution:
    """The fully fixed PS matching exactly x."""
    return PartialSolution(x.values)


class EvaluatedPopulation:
    """Reference population with precomputed raw and normalized fitness.

    Normalization: with m = min raw fitness and S = sum(raw - m), each
    member gets (raw - m)/S, which sums to 1.  A constant-fitness
    population (S = 0) gets the uniform 1/|pop| instead so downstream
    benefit sums stay well defined.

    Immutable after construction; the bitset index used by the metric
    engine is built lazily and cached.
    """

    def __init__(
        self,
        space: SearchSpace,
        members: np.ndarray | Sequence[FullSolution],
        raw_fitness: Sequence[float] | np.ndarray,
    ):
        if isinstance(members, np.ndarray):
            matrix = np.ascontiguousarray(members, dtype=np.uint8)
        else:
            matrix = np.frombuffer(
                b"".join(m.values for m in members), dtype=np.uint8
            ).reshape(len(members), space.n)
        if matrix.ndim != 2 or matrix.shape[1] != space.n:
            raise ContractViolation("member matrix shape does not match space")
        if matrix.shape[0] < 1:
            raise ContractViolation("population must be non-empty")
        cards = np.asarray(space.cardinalities, dtype=np.uint16)
        if (matrix >= cards[None, :]).any():
            raise ContractViolation("member value out of range")
        raw = np.asarray(raw_fitness, dtype=np.float64)
        if raw.shape != (matrix.shape[0],):
            raise ContractViolation("fitness vector length mismatch")

        self.space = space
        self.matrix = matrix
        self.matrix.flags.writeable = False
        self.raw_fitness = raw
        self.raw_fitness.flags.writeable = False
        m = raw.min()
        shifted = raw - m
        s = shifted.sum()
        if s > 0.0:
            norm = shifted / s
        else:
            norm = np.full(raw.shape, 1.0 / raw.shape[0])
        self.norm_fitness = norm
        self.norm_fitness.flags.writeable = False
        self._index = None
        self._members: list[FullSolution] | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def members(self) -> list[FullSolution]:
        if self._members is None:
            self._members = [FullSolution(row.tobytes()) for row in self.matrix]
        return self._members

    @property
    def index(self):
        """Bitset index for batch metric evaluation (built on first use)."""
        if self._index is None:
            from . import _engine

            self._index = _engine.PopulationIndex(self)
        return self._index


def observations(pop: EvaluatedPopulation, ps: PartialSolution) -> np.ndarray:
    """Indices of population members containing ps, ascending."""
    if len(ps.cells) != pop.space.n:
        raise ContractViolation("PS length does not match population")
    mask = np.ones(pop.size, dtype=bool)
    for k in ps.fixed_positions:
        mask &= pop.matrix[:, k] == ps.cells[k]
    return np.flatnonzero(mask)


# --- textual format ------------------------------------------------------
#
# Compact form for spaces with cardinality <= 10 (one character per cell,
# e.g. "1*0*1"); comma-separated cells otherwise (e.g. "12,*,3").


def _compact_ok(values: Iterable[int], space: SearchSpace | None) -> bool:
    if space is not None:
        return max(space.cardinalities) <= 10
    return all(v == STAR or v <= 9 for v in values)


def format_partial(ps: PartialSolution, space: SearchSpace | None = None) -> str:
    if _compact_ok(ps.cells, space):
        return "".join("*" if v == STAR else str(v) for v in ps.cells)
    return ",".join("*" if v == STAR else str(v) for v in ps.cells)


def format_full(x: FullSolution, space: SearchSpace | None = None) -> str:
    if _compact_ok(x.values, space):
        return "".join(str(v) for v in x.values)
    return ",".join(str(v) for v in x.values)


def _parse_cells(text: str) -> list[int]:
    text = text.strip()
    if not text:
        raise ContractViolation("empty pattern")
    parts = text.split(",") if "," in text else list(text)
    cells = []
    for p in parts:
        p = p.strip()
        if p == "*":
            cells.append(STAR)
        elif p.isdigit():
            v = int(p)
            if v >= STAR:
                raise ContractViolation(f"cell value {v} too large")
            cells.append(v)
        else:
            raise ContractViolation(f"bad cell {p!r} in pattern {text!r}")
    return cells


def parse_partial(text: str, space: SearchSpace | None = None) -> PartialSolution:
    ps = PartialSolution(_parse_cells(text))
    if space is not None:
        space.validate_partial(ps)
    return ps


def parse_full(text: str, space: SearchSpace | None = None) -> FullSolution:
    cells = _parse_cells(text)
    if STAR in cells:
        raise ContractViolation("full solution cannot contain wildcards")
    x = FullSolution(cells)
    if space is not None:
        space.validate_full(x)
    return x
