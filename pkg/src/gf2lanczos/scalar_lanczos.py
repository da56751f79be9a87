"""
Scalar Lanczos over a prime field, kept as a reference and as a demonstration
of why the scalar method is useless over GF(2).

With ``v_0 = b`` the iterates obey the three-term recurrence

    v_{i+1} = A v_i - (v_i^T A^2 v_i / v_i^T A v_i) v_i
                    - (v_i^T A v_i / v_{i-1}^T A v_{i-1}) v_{i-1}

and ``x = sum_i (v_i^T b / v_i^T A v_i) v_i`` solves ``A x = b`` once some
``v_m`` vanishes.  A nonzero ``v_i`` with ``v_i^T A v_i = 0`` stops the run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import SplitMix64


class IsotropicBreakdown(ArithmeticError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"v_{index} is nonzero but A-isotropic")


class PrimeField:
    """Arithmetic modulo a prime ``p < 2**31`` on int64 arrays."""

    def __init__(self, p: int, allow_two: bool = False):
        if not (2 <= p < 1 << 31):
            raise ValueError("p must lie in [2, 2**31)")
        if p == 2 and not allow_two:
            raise ValueError("p must be an odd prime")
        if any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
            raise ValueError(f"{p} is not prime")
        self.p = p

    def dot(self, a: np.ndarray, b: np.ndarray) -> int:
        # products are below 2**62; reduce before summing to avoid overflow
        return int((a * b % self.p).sum() % self.p)

    def inv(self, a: int) -> int:
        return pow(int(a), -1, self.p)

    def matvec(self, A: np.ndarray, v: np.ndarray) -> np.ndarray:
        return ((A * v[None, :]) % self.p).sum(axis=1) % self.p


@dataclass
class ScalarState:
    v_curr: np.ndarray
    v_prev: np.ndarray
    vav_curr: int
    vav_prev: int
    x: np.ndarray
    index: int = 0


def lanczos_solve(A, b, p: int, *, field: PrimeField | None = None, history: list | None = None) -> np.ndarray:
    """Solve ``A x = b`` over F_p for symmetric ``A`` (a matrix or a callable).

    Raises :class:`IsotropicBreakdown` when some ``v_i^T A v_i`` vanishes
    with ``v_i`` nonzero.  When ``history`` is a list, every ``v_i`` is
    appended to it.
    """
    F = field or PrimeField(p)
    p = F.p
    if callable(A):
        apply: Callable[[np.ndarray], np.ndarray] = lambda v: np.asarray(A(v), dtype=np.int64) % p
    else:
        Am = np.asarray(A, dtype=np.int64) % p
        apply = lambda v: F.matvec(Am, v)
    b = np.asarray(b, dtype=np.int64) % p

    st = ScalarState(b.copy(), np.zeros_like(b), 0, 1, np.zeros_like(b))
    while st.v_curr.any():
        v = st.v_curr
        if history is not None:
            history.append(v.copy())
        Av = apply(v)
        vav = F.dot(v, Av)
        if vav == 0:
            raise IsotropicBreakdown(st.index)
        inv_vav = F.inv(vav)
        st.x = (st.x + F.dot(v, b) * inv_vav % p * v) % p
        c_curr = F.dot(Av, Av) * inv_vav % p
        c_prev = vav * F.inv(st.vav_prev) % p if st.index else 0
        v_next = (Av - c_curr * v - c_prev * st.v_prev) % p
        st.v_prev, st.v_curr = v, v_next
        st.vav_prev = vav
        st.index += 1
    return st.x


def random_symmetric(N: int, p: int, rng: SplitMix64) -> np.ndarray:
    upper = rng.below(np.full((N, N), p, dtype=np.uint64)).astype(np.int64)
    upper = np.triu(upper)
    return (upper + np.triu(upper, 1).T) % p


@dataclass
class BreakdownStats:
    p: int
    N: int
    trials: int
    breakdown_steps: list[int | None]

    @property
    def breakdowns(self) -> int:
        return sum(s is not None for s in self.breakdown_steps)

    def fraction_before(self, step: int) -> float:
        return sum(s is not None and s < step for s in self.breakdown_steps) / self.trials


def breakdown_demo(N: int = 100, trials: int = 100, seed: int = 0, p: int = 2) -> BreakdownStats:
    """Run scalar Lanczos on random symmetric systems and record where it breaks down."""
    F = PrimeField(p, allow_two=True)
    rng = SplitMix64(seed)
    steps: list[int | None] = []
    for _ in range(trials):
        A = random_symmetric(N, p, rng)
        b = rng.below(np.full(N, p, dtype=np.uint64)).astype(np.int64)
        try:
            lanczos_solve(A, b, p, field=F)
            steps.append(None)
        except IsotropicBreakdown as exc:
            steps.append(exc.index)
    return BreakdownStats(p, N, trials, steps)
