"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here imports the package; every routine works on plain 0/1 numpy
arrays or Python integers so that disagreements point at the library.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def matmul2(a, b) -> np.ndarray:
    """Dense GF(2) product by an explicit triple loop."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m), dtype=np.uint8)
    for i in range(n):
        for j in range(m):
            s = 0
            for t in range(k):
                s ^= int(a[i, t]) & int(b[t, j])
            out[i, j] = s
    return out


def matmul2_fast(a, b) -> np.ndarray:
    """Integer matmul reduced mod 2 (for shapes too large for the loop)."""
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64) % 2).astype(np.uint8)


def rref2(a) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    r = np.array(a, dtype=np.uint8) % 2
    rows, cols = r.shape
    pivots = []
    top = 0
    for c in range(cols):
        hit = [i for i in range(top, rows) if r[i, c]]
        if not hit:
            continue
        r[[top, hit[0]]] = r[[hit[0], top]]
        for i in range(rows):
            if i != top and r[i, c]:
                r[i] ^= r[top]
        pivots.append(c)
        top += 1
        if top == rows:
            break
    return r, pivots


def rank2(a) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    return len(rref2(a)[1])


def nullspace2(a) -> np.ndarray:
    """Basis of {x : a x = 0} as rows of a 0/1 array."""
    a = np.asarray(a, dtype=np.uint8)
    cols = a.shape[1]
    r, pivots = rref2(a)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        x = np.zeros(cols, dtype=np.uint8)
        x[f] = 1
        for k, pc in enumerate(pivots):
            x[pc] = r[k, f]
        basis.append(x)
    return np.array(basis, dtype=np.uint8).reshape(len(basis), cols)


def left_kernel2(m) -> np.ndarray:
    """Basis of {x : x^T m = 0}, one solution per row."""
    return nullspace2(np.asarray(m, dtype=np.uint8).T)


def in_rowspace2(basis, vec) -> bool:
    basis = np.asarray(basis, dtype=np.uint8)
    if basis.size == 0:
        return not np.any(vec)
    return rank2(np.vstack([basis, vec])) == rank2(basis)


def solve_mod_p(A, b, p: int) -> np.ndarray:
    """Gauss-Jordan solve of A x = b over F_p (A square and nonsingular)."""
    A = [[int(v) % p for v in row] for row in np.asarray(A)]
    b = [int(v) % p for v in np.asarray(b)]
    n = len(A)
    aug = [A[i] + [b[i]] for i in range(n)]
    for c in range(n):
        piv = next(i for i in range(c, n) if aug[i][c])
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = pow(aug[c][c], p - 2, p)
        aug[c] = [v * inv % p for v in aug[c]]
        for i in range(n):
            if i != c and aug[i][c]:
                f = aug[i][c]
                aug[i] = [(u - f * w) % p for u, w in zip(aug[i], aug[c])]
    return np.array([aug[i][n] for i in range(n)], dtype=np.int64)


def det_mod_p(A, p: int) -> int:
    M = [[int(v) % p for v in row] for row in np.asarray(A)]
    n = len(M)
    det = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c]), None)
        if piv is None:
            return 0
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det = det * M[c][c] % p
        inv = pow(M[c][c], p - 2, p)
        for i in range(c + 1, n):
            if M[i][c]:
                f = M[i][c] * inv % p
                M[i] = [(u - f * w) % p for u, w in zip(M[i], M[c])]
    return det % p


def max_invertible_principal_minor(T) -> int:
    """Largest |S| with T[S, S] invertible over GF(2), by exhaustive search."""
    T = np.asarray(T, dtype=np.uint8)
    n = T.shape[0]
    for size in range(n, 0, -1):
        for S in itertools.combinations(range(n), size):
            sub = T[np.ix_(S, S)]
            if rank2(sub) == size:
                return size
    return 0


def symmetric_rank_counts(n: int, q: int = 2) -> list[int]:
    """Number of symmetric n x n matrices over GF(q) of each rank 0..n (q even).

    Closed form due to MacWilliams for characteristic 2.
    """
    def prefactor(s):
        f = Fraction(1)
        for i in range(1, s + 1):
            f *= Fraction(q ** (2 * i), q ** (2 * i) - 1)
        return f

    def falling(count):
        out = 1
        for i in range(count):
            out *= q ** (n - i) - 1
        return out

    counts = []
    for r in range(n + 1):
        # N(n, 2s) and N(n, 2s+1) share the prefactor; the product runs to r
        val = prefactor(r // 2) * falling(r)
        assert val.denominator == 1
        counts.append(int(val))
    assert sum(counts) == q ** (n * (n + 1) // 2)
    return counts


def exact_mean_rank_defect(n: int) -> Fraction:
    counts = symmetric_rank_counts(n)
    total = sum(counts)
    return sum(Fraction((n - r) * c, total) for r, c in enumerate(counts))


def enumerate_mean_rank_defect(n: int) -> Fraction:
    """Average of n - rank over all 2^(n(n+1)/2) symmetric matrices (small n)."""
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    total = Fraction(0)
    count = 0
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        T = np.zeros((n, n), dtype=np.uint8)
        for (i, j), b in zip(pairs, bits):
            T[i, j] = T[j, i] = b
        total += n - rank2(T)
        count += 1
    return total / count


def splitmix64_reference(seed: int, count: int) -> list[int]:
    """The textbook stateful SplitMix64 loop."""
    mask = (1 << 64) - 1
    state = seed & mask
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out
