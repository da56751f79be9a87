"""Rank defect of uniformly random symmetric matrices over GF(2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import TAG_TRIALS, SplitMix64, derive_seed

_BATCH = 8192


def random_symmetric_rows(n: int, count: int, rng: SplitMix64) -> np.ndarray:
    """``count`` uniform symmetric n x n matrices, rows packed in uint64 (n <= 64)."""
    raw = rng.words(count * n).reshape(count, n)
    # keep the upper triangle (diagonal included) of each matrix
    upper_mask = np.array([((1 << n) - 1) >> r << r for r in range(n)], dtype=np.uint64)
    upper = raw & upper_mask
    bits = np.unpackbits(upper.astype("<u8").view(np.uint8).reshape(count, n, 8), axis=2, bitorder="little")[:, :, :n]
    strict_lower = np.triu(bits, 1).transpose(0, 2, 1)
    full = bits | strict_lower
    padded = np.zeros((count, n, 64), dtype=np.uint8)
    padded[:, :, :n] = full
    return np.packbits(padded, axis=2, bitorder="little").view("<u8").reshape(count, n).astype(np.uint64)


def batch_rank(rows: np.ndarray, n: int) -> np.ndarray:
    """GF(2) rank of each matrix in a (count, n) stack of packed rows."""
    R = rows.copy()
    count = R.shape[0]
    idx = np.arange(count)
    used = np.zeros((count, n), dtype=bool)
    rank = np.zeros(count, dtype=np.int64)
    for c in range(n):
        bit = ((R >> np.uint64(c)) & np.uint64(1)).astype(bool)
        cand = bit & ~used
        has = cand.any(axis=1)
        piv = cand.argmax(axis=1)
        prow = R[idx, piv]
        elim = bit & has[:, None]
        elim[idx, piv] = False
        R ^= np.where(elim, prow[:, None], np.uint64(0))
        used[idx, piv] |= has
        rank += has
    return rank


@dataclass
class RankDefectResult:
    n: int
    trials: int
    seed: int
    defects: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.defects.mean())

    @property
    def stderr(self) -> float:
        return float(self.defects.std(ddof=1) / np.sqrt(self.trials)) if self.trials > 1 else float("nan")

    def to_text(self) -> str:
        hist = np.bincount(self.defects, minlength=1)
        return (
            f"n={self.n}\ntrials={self.trials}\nseed={self.seed}\n"
            f"mean_rank_defect={self.mean:.6f}\nstderr={self.stderr:.6f}\n"
            f"histogram={','.join(str(int(h)) for h in hist)}\n"
        )


def rank_defect(n: int, trials: int, seed: int = 0) -> RankDefectResult:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 1 <= n <= 64:
        raise ValueError("matrix size must lie in [1, 64]")
    rng = SplitMix64(derive_seed(seed, TAG_TRIALS))
    defects = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, _BATCH):
        count = min(_BATCH, trials - start)
        defects[start : start + count] = n - batch_rank(random_symmetric_rows(n, count, rng), n)
    return RankDefectResult(n, trials, seed, defects)
