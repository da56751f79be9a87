"""Gaussian elimination over GF(2) on vectors stored as Python integer bit sets."""

from __future__ import annotations

from typing import Iterable, Sequence


class Basis:
    """Incremental echelon basis that remembers how each vector was formed.

    Each added vector ``k`` carries the combination bit ``1 << k`` so that
    :meth:`express` returns which of the added vectors sum to a target.
    """

    def __init__(self):
        self._pivots: dict[int, tuple[int, int]] = {}
        self.count = 0

    def __len__(self) -> int:
        return len(self._pivots)

    def _reduce(self, vec: int, combo: int) -> tuple[int, int]:
        pivots = self._pivots
        while vec:
            entry = pivots.get(vec.bit_length() - 1)
            if entry is None:
                break
            vec ^= entry[0]
            combo ^= entry[1]
        return vec, combo

    def add(self, vec: int) -> bool:
        """Add the next vector; return True if it was independent of the previous ones."""
        vec, combo = self._reduce(vec, 1 << self.count)
        self.count += 1
        if not vec:
            return False
        self._pivots[vec.bit_length() - 1] = (vec, combo)
        return True

    def add_tracked(self, vec: int) -> int:
        """Add a vector; return 0 if independent, else the dependency combination (including itself)."""
        vec, combo = self._reduce(vec, 1 << self.count)
        self.count += 1
        if vec:
            self._pivots[vec.bit_length() - 1] = (vec, combo)
            return 0
        return combo

    def express(self, target: int) -> int | None:
        """Combination of added vectors equal to ``target``, or None if outside the span."""
        vec, combo = self._reduce(target, 0)
        return None if vec else combo


def rank(vectors: Iterable[int]) -> int:
    basis = Basis()
    return sum(basis.add(v) for v in vectors)


def independent_subset(vectors: Sequence[int]) -> list[int]:
    """Indices of a maximal independent subset, chosen greedily in order."""
    basis = Basis()
    return [k for k, v in enumerate(vectors) if basis.add(v)]


def kernel(vectors: Sequence[int]) -> list[int]:
    """Basis of ``{c : XOR of vectors[k] for k in c == 0}`` as combination bit sets."""
    basis = Basis()
    deps = []
    for v in vectors:
        combo = basis.add_tracked(v)
        if combo:
            deps.append(combo)
    return deps


def combine(vectors: Sequence[int], combo: int) -> int:
    acc = 0
    k = 0
    while combo:
        if combo & 1:
            acc ^= vectors[k]
        combo >>= 1
        k += 1
    return acc


def transpose(rows: Sequence[int], ncols: int) -> list[int]:
    """Transpose a bit matrix given as row bit sets."""
    cols = [0] * ncols
    for r, row in enumerate(rows):
        while row:
            low = row & -row
            cols[low.bit_length() - 1] |= 1 << r
            row ^= low
    return cols


def inverse(rows: Sequence[int], n: int) -> list[int] | None:
    """Inverse of an ``n x n`` matrix given as row bit sets, or None if singular."""
    work = [(row, 1 << r) for r, row in enumerate(rows)]
    for col in range(n):
        bit = 1 << col
        piv = next((r for r in range(col, n) if work[r][0] & bit), None)
        if piv is None:
            return None
        work[col], work[piv] = work[piv], work[col]
        prow, pinv = work[col]
        for r in range(n):
            if r != col and work[r][0] & bit:
                work[r] = (work[r][0] ^ prow, work[r][1] ^ pinv)
    return [inv for _, inv in work]
