"""
Ground truth by exhaustion: stream every partition of the state space and
keep those passing the exact row-sum check.
"""

from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from typing import Iterator, List

from core.chain import Partition, StochasticMatrix, is_lumpable
from core.errors import GuardExceeded

DEFAULT_GUARD = 10 ** 6
_BATCH = 512


def bell_number(n: int) -> int:
    """
    Number of partitions of an n-set, via the Bell triangle.
    Python integers are unbounded, so large n is slow but never wraps.
    """
    if n < 0:
        raise ValueError(f"bell_number needs n >= 0, got {n}")
    if n == 0:
        return 1
    row = [1]
    for _ in range(n - 1):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[-1]


class PartitionIterator:
    """
    Restricted-growth strings of length n in lexicographic order: starts with
    the single lump (0,...,0), ends with all singletons (0,1,...,n-1).
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"need at least one state, got {n}")
        self.n = n
        self.cursor = [0] * n
        self._done = False
        self.emitted = 0

    def __iter__(self) -> "PartitionIterator":
        return self

    def __next__(self) -> Partition:
        if self._done:
            raise StopIteration
        current = Partition(tuple(self.cursor))
        self.emitted += 1
        self._advance()
        return current

    def _advance(self):
        a = self.cursor
        prefix_max = [0] * self.n
        for i in range(1, self.n):
            prefix_max[i] = max(prefix_max[i - 1], a[i - 1])
        for i in range(self.n - 1, 0, -1):
            if a[i] <= prefix_max[i]:
                a[i] += 1
                for j in range(i + 1, self.n):
                    a[j] = 0
                return
        self._done = True


def enumerate_partitions(n: int) -> PartitionIterator:
    return PartitionIterator(n)


def _batches(stream: Iterator[Partition]):
    while True:
        batch = list(islice(stream, _BATCH))
        if not batch:
            return
        yield batch


def brute_force_lumpings(
    P: StochasticMatrix,
    lump_tol: float = 1e-9,
    guard: int = DEFAULT_GUARD,
    workers: int = 0,
    logger=None,
) -> List[Partition]:
    """
    Every strong lumping of P, in canonical order.

    Args:
        P: transition matrix
        lump_tol: row-sum spread accepted by the check
        guard: refuse when the Bell number of P.n exceeds this
        workers: thread count for the check; 0 runs inline

    Raises:
        GuardExceeded
    """
    total = bell_number(P.n)
    if total > guard:
        raise GuardExceeded(total, guard)
    if logger:
        logger.log_info(f"Oracle scanning {total} partitions of {P.n} states")

    def keep(batch):
        return [part for part in batch if is_lumpable(P, part, lump_tol).lumpable]

    stream = enumerate_partitions(P.n)
    if workers > 0:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(keep, _batches(stream)))
    else:
        chunks = [keep(batch) for batch in _batches(stream)]

    found = [part for chunk in chunks for part in chunk]
    found.sort(key=Partition.sort_key)
    if logger:
        logger.log_info(f"Oracle found {len(found)} lumpings")
    return found
