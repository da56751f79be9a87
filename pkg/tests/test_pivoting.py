import itertools

import numpy as np
import pytest

from gf2lanczos.bitblock import DiagMask, SmallMat, mask_apply, small_mul, small_transpose
from gf2lanczos.pivoting import (
    NonSymmetricInput,
    PriorityViolation,
    choose_pivots,
    pivot_order,
)

import oracles


def embed(T, width=64):
    bits = np.zeros((width, width), dtype=np.uint8)
    n = T.shape[0]
    bits[:n, :n] = T
    return SmallMat.from_bits(bits)


def random_symmetric(rng, n):
    u = np.triu(rng.integers(0, 2, size=(n, n), dtype=np.uint8))
    return u | np.triu(u, 1).T


def assert_contract(vtav: SmallMat, res):
    d, winv = res.d, res.winv
    dm = d.to_small()
    assert mask_apply(d, mask_apply(d, winv, "right"), "left") == winv
    assert winv.is_symmetric()
    assert small_mul(small_mul(winv, vtav), dm) == dm
    sel = d.indices()
    T = vtav.to_bits()
    assert oracles.rank2(T[np.ix_(sel, sel)]) == len(sel)


def test_identity_and_zero():
    r = choose_pivots(SmallMat.identity(), DiagMask.empty())
    assert r.d == DiagMask.full() and r.winv == SmallMat.identity()
    r = choose_pivots(SmallMat.zeros(), DiagMask.full())
    assert r.rank == 0 and r.d.is_zero() and r.winv.is_zero()


def test_all_ones_2x2_block():
    vtav = embed(np.ones((2, 2), dtype=np.uint8))
    r = choose_pivots(vtav, DiagMask.empty())
    assert r.rank == 1 and r.d.bits in (0b01, 0b10)
    wb = r.winv.to_bits()
    j = r.d.indices()[0]
    assert wb.sum() == 1 and wb[j, j] == 1
    assert oracles.max_invertible_principal_minor(np.ones((2, 2))) == 1
    assert_contract(vtav, r)


def test_exhaustive_4x4():
    n = 4
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        T = np.zeros((n, n), dtype=np.uint8)
        for (i, j), b in zip(pairs, bits):
            T[i, j] = T[j, i] = b
        vtav = embed(T)
        r = choose_pivots(vtav, DiagMask.empty())
        assert r.rank == oracles.max_invertible_principal_minor(T) == oracles.rank2(T)
        assert_contract(vtav, r)


def test_random_8x8_against_principal_minor_search():
    rng = np.random.default_rng(8)
    for _ in range(150):
        T = random_symmetric(rng, 8)
        vtav = embed(T)
        prio = DiagMask(int(rng.integers(0, 256)))
        r = choose_pivots(vtav, prio, strict=False)
        assert r.rank == oracles.max_invertible_principal_minor(T)
        assert_contract(vtav, r)


def test_random_full_width_contract():
    rng = np.random.default_rng(9)
    for _ in range(100):
        T = random_symmetric(rng, 64)
        vtav = SmallMat.from_bits(T)
        r = choose_pivots(vtav, DiagMask(int(rng.integers(0, 2**63))), strict=False)
        assert r.rank == oracles.rank2(T)
        assert_contract(vtav, r)
        assert small_transpose(r.winv) == r.winv


def test_priority_columns_taken_first():
    # columns 0 and 1 are equal; a priority on column 1 must pick 1
    T = np.zeros((3, 3), dtype=np.uint8)
    T[:2, :2] = 1
    T[2, 2] = 1
    r = choose_pivots(embed(T), DiagMask.from_indices([1]))
    assert r.d.indices() == [1, 2]
    assert pivot_order(DiagMask.from_indices([3, 5]))[:3] == [3, 5, 0]


def test_priority_violation_strict():
    T = np.zeros((2, 2), dtype=np.uint8)
    T[0, 0] = 1
    vtav = embed(T)
    with pytest.raises(PriorityViolation) as info:
        choose_pivots(vtav, DiagMask.from_indices([1]), strict=True)
    assert info.value.missing == DiagMask.from_indices([1])
    r = choose_pivots(vtav, DiagMask.from_indices([1]), strict=False)
    assert r.d.indices() == [0]


def test_non_symmetric_rejected():
    T = np.zeros((2, 2), dtype=np.uint8)
    T[0, 1] = 1
    with pytest.raises(NonSymmetricInput):
        choose_pivots(embed(T))
