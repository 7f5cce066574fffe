import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchPartition:
    """Disjoint batches of equal size p covering particle indices 0..N-1.

    `members` has shape (N/p, p); each row is sorted so the in-batch
    summation order only depends on which particles share a batch.
    """

    members: np.ndarray

    def __post_init__(self):
        members = np.asarray(self.members, dtype=np.intp)
        if members.ndim != 2 or members.shape[1] < 2:
            raise ValueError(f"batch members must be an (N/p, p) array with p >= 2, got shape {members.shape}")
        n = members.size
        if not np.array_equal(np.sort(members.ravel()), np.arange(n)):
            raise ValueError("batches must be disjoint and cover every particle index exactly once")
        object.__setattr__(self, "members", np.sort(members, axis=1))

    @property
    def n(self) -> int:
        return self.members.size

    @property
    def p(self) -> int:
        return self.members.shape[1]

    @property
    def n_batches(self) -> int:
        return self.members.shape[0]

    @property
    def assignment(self) -> np.ndarray:
        """Batch id of every particle."""
        out = np.empty(self.n, dtype=np.intp)
        out[self.members] = np.arange(self.n_batches)[:, None]
        return out

    @property
    def batch_members(self) -> list[list[int]]:
        return self.members.tolist()

    def batch_of(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n:
            raise IndexError(f"particle index {i} out of range for N={self.n}")
        return self.members[self.assignment[i]]

    def canonical(self) -> tuple[tuple[int, ...], ...]:
        """Hashable form, independent of batch order."""
        return tuple(sorted(tuple(row) for row in self.members.tolist()))


def _check_sizes(n: int, p: int) -> None:
    if n < 1:
        raise ValueError(f"particle count must be positive, got {n}")
    if p < 2 or p > n:
        raise ValueError(f"batch size must satisfy 2 <= p <= N, got p={p}, N={n}")
    if n % p:
        raise ValueError(f"batch size p={p} does not divide N={n}")


def random_partition(n: int, p: int, rng: np.random.Generator) -> BatchPartition:
    """Shuffle 0..n-1 and cut the permutation into consecutive batches of size p."""
    _check_sizes(n, p)
    return BatchPartition(rng.permutation(n).reshape(n // p, p))


def enumerate_partitions(n: int, p: int) -> Iterator[BatchPartition]:
    """Yield every partition of 0..n-1 into unlabeled groups of size p.

    The smallest remaining index always opens the next group, so each
    partition appears once: n! / ((p!)^(n/p) (n/p)!) in total.
    """
    _check_sizes(n, p)

    def _extend(remaining: tuple[int, ...], groups: list[tuple[int, ...]]):
        if not remaining:
            yield BatchPartition(np.array(groups))
            return
        head, rest = remaining[0], remaining[1:]
        for mates in combinations(rest, p - 1):
            left = tuple(k for k in rest if k not in mates)
            yield from _extend(left, groups + [(head, *mates)])

    yield from _extend(tuple(range(n)), [])
