"""
Validated stochastic matrices, partitions of the state space, the exact
row-sum lumpability test and the quotient-chain construction.

States are 0-based everywhere in this module; 1-based labels only appear in
text rendering and in the CLI.
"""

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from core.errors import (
    DimensionMismatch,
    NegativeEntry,
    NonFiniteEntry,
    NotLumpable,
    NotSquare,
    RowSumViolation,
)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Row-stochastic N x N transition matrix P (rows act on x_t from the right)."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, StochasticMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(
            np.array_equal(self.entries, other.entries)
        )

    __hash__ = None


def validate_stochastic(raw, tol: float = 1e-9) -> StochasticMatrix:
    """
    Validate a square array as a transition matrix.

    Entries in [-tol, 0) are clipped to 0 and rows are renormalized, but only
    once every row already sums to 1 within tol.

    Args:
        raw: N x N array-like of floats
        tol: validation tolerance (> 0)

    Returns:
        StochasticMatrix

    Raises:
        NotSquare, NonFiniteEntry, NegativeEntry, RowSumViolation
    """
    if tol <= 0:
        raise ValueError("validation tolerance must be positive")

    array = np.asarray(raw, dtype=float)
    if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] == 0:
        raise NotSquare(array.shape)

    bad = np.argwhere(~np.isfinite(array))
    if bad.size:
        raise NonFiniteEntry(int(bad[0][0]), int(bad[0][1]))

    negative = np.argwhere(array < -tol)
    if negative.size:
        i, j = (int(v) for v in negative[0])
        raise NegativeEntry(i, j, float(array[i, j]))

    sums = array.sum(axis=1)
    for i, total in enumerate(sums):
        if abs(total - 1.0) > tol:
            raise RowSumViolation(i, float(total))

    cleaned = np.clip(array, 0.0, None)
    cleaned = cleaned / cleaned.sum(axis=1, keepdims=True)
    return StochasticMatrix(cleaned)


@dataclass(frozen=True)
class Partition:
    """
    Partition of {0..n-1} stored as a restricted-growth string.

    assignment[i] is the lump index of state i; lumps are numbered in order of
    first appearance, so two partitions with the same blocks compare equal.
    """

    assignment: Tuple[int, ...]

    def __post_init__(self):
        assignment = tuple(int(a) for a in self.assignment)
        if not assignment:
            raise ValueError("a partition needs at least one state")
        if assignment[0] != 0:
            raise ValueError("restricted-growth string must start with 0")
        top = 0
        for label in assignment[1:]:
            if label < 0 or label > top + 1:
                raise ValueError(f"not a restricted-growth string: {assignment}")
            top = max(top, label)
        object.__setattr__(self, "assignment", assignment)

    @classmethod
    def from_labels(cls, labels: Sequence) -> "Partition":
        """Canonicalize arbitrary hashable lump labels."""
        relabel = {}
        assignment = []
        for label in labels:
            if label not in relabel:
                relabel[label] = len(relabel)
            assignment.append(relabel[label])
        return cls(tuple(assignment))

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: int) -> "Partition":
        """
        Build from 0-based blocks.

        Raises:
            ValueError: if blocks overlap, are empty or do not cover range(n)
        """
        labels = [None] * n
        for k, block in enumerate(blocks):
            block = list(block)
            if not block:
                raise ValueError("empty lump")
            for state in block:
                if not 0 <= state < n:
                    raise ValueError(f"state {state + 1} outside 1..{n}")
                if labels[state] is not None:
                    raise ValueError(f"state {state + 1} appears in two lumps")
                labels[state] = k
        missing = [i + 1 for i, label in enumerate(labels) if label is None]
        if missing:
            raise ValueError(f"states not covered: {missing}")
        return cls.from_labels(labels)

    @classmethod
    def single_lump(cls, n: int) -> "Partition":
        return cls((0,) * n)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(tuple(range(n)))

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def m(self) -> int:
        return max(self.assignment) + 1

    @property
    def blocks(self) -> Tuple[Tuple[int, ...], ...]:
        lumps = [[] for _ in range(self.m)]
        for state, label in enumerate(self.assignment):
            lumps[label].append(state)
        return tuple(tuple(lump) for lump in lumps)

    def membership_matrix(self) -> np.ndarray:
        """The N x M 0/1 matrix Pi with pi_ik = 1 iff state i is in lump k."""
        return np.eye(self.m)[list(self.assignment)]

    def refines(self, other: "Partition") -> bool:
        """True when every lump of self lies inside a lump of other."""
        if self.n != other.n:
            raise DimensionMismatch(self.n, other.n)
        return partition_meet(self, other) == self

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return (self.m, self.assignment)

    def __str__(self) -> str:
        return "".join("{" + ",".join(str(s + 1) for s in block) + "}" for block in self.blocks)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability row vector x_t over the states."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    @property
    def n(self) -> int:
        return self.values.shape[0]


def make_distribution(values, tol: float = 1e-9) -> Distribution:
    """
    Validate a probability vector.

    Raises:
        ValueError: on negative entries or a total away from 1
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or not np.all(np.isfinite(values)):
        raise ValueError("distribution must be a finite 1-D vector")
    if np.any(values < -tol):
        raise ValueError("distribution has negative entries")
    if abs(values.sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {values.sum()!r}")
    return Distribution(np.clip(values, 0.0, None))


@dataclass(frozen=True, eq=False)
class ReducedChain:
    """Quotient transition matrix P~ together with the partition that built it."""

    partition: Partition
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))


class LumpabilityResult(NamedTuple):
    lumpable: bool
    max_deviation: float


def _check_dimensions(P: StochasticMatrix, part: Partition):
    if part.n != P.n:
        raise DimensionMismatch(P.n, part.n)


def lump_row_sums(P: StochasticMatrix, part: Partition) -> np.ndarray:
    """N x M matrix of sum_{j in L_l} p_ij."""
    _check_dimensions(P, part)
    return P.entries @ part.membership_matrix()


def is_lumpable(P: StochasticMatrix, part: Partition, tol: float = 1e-9) -> LumpabilityResult:
    """
    Exact strong-lumpability check: within each lump, every state must put the
    same total probability on every target lump.

    Args:
        P: transition matrix
        part: candidate partition
        tol: accepted spread of the row sums (>= 0)

    Returns:
        LumpabilityResult(lumpable, max_deviation)
    """
    sums = lump_row_sums(P, part)
    deviation = 0.0
    for block in part.blocks:
        if len(block) > 1:
            deviation = max(deviation, float(np.ptp(sums[list(block)], axis=0).max()))
    return LumpabilityResult(deviation <= tol, deviation)


def reduce(P: StochasticMatrix, part: Partition, tol: float = 1e-9) -> ReducedChain:
    """
    Build the quotient chain. Each row of P~ is the mean over the lump's states.

    Raises:
        NotLumpable: when the row-sum spread exceeds tol
    """
    verdict = is_lumpable(P, part, tol)
    if not verdict.lumpable:
        raise NotLumpable(verdict.max_deviation, tol)

    sums = lump_row_sums(P, part)
    matrix = np.vstack([sums[list(block)].mean(axis=0) for block in part.blocks])
    matrix = matrix / matrix.sum(axis=1, keepdims=True)
    return ReducedChain(part, matrix)


def project_distribution(x: Distribution, part: Partition) -> Distribution:
    """x~ = x Pi."""
    if x.n != part.n:
        raise DimensionMismatch(x.n, part.n, what="partition")
    return Distribution(x.values @ part.membership_matrix())


def partition_meet(p: Partition, q: Partition) -> Partition:
    """Coarsest common refinement: i ~ j iff i ~ j in both p and q."""
    if p.n != q.n:
        raise DimensionMismatch(p.n, q.n)
    return Partition.from_labels(list(zip(p.assignment, q.assignment)))


def partition_join(p: Partition, q: Partition) -> Partition:
    """Finest common coarsening (transitive closure of both relations)."""
    if p.n != q.n:
        raise DimensionMismatch(p.n, q.n)
    # lumps of p and q are the nodes, each state adds one edge between them
    lumps = np.asarray(p.assignment)
    size = p.m + q.m
    graph = coo_matrix(
        (np.ones(p.n), (lumps, p.m + np.asarray(q.assignment))), shape=(size, size)
    )
    _, labels = connected_components(graph, directed=False)
    return Partition.from_labels(labels[lumps])


def reduced_left_vector(v: np.ndarray, part: Partition) -> np.ndarray:
    """v Pi for a left (row) vector; zero when part annihilates v."""
    return np.asarray(v) @ part.membership_matrix()


def commutation_residual(P: StochasticMatrix, reduced: ReducedChain) -> float:
    """max |Pi P~ - P Pi|; zero for an exact lumping."""
    pi = reduced.partition.membership_matrix()
    return float(np.abs(pi @ reduced.matrix - P.entries @ pi).max())
