import numpy as np
import pytest

from gf2lanczos.rng import SplitMix64
from gf2lanczos.scalar_lanczos import (
    IsotropicBreakdown,
    PrimeField,
    breakdown_demo,
    lanczos_solve,
    random_symmetric,
)

import oracles

P = 65537


def test_identity_one_step():
    b = np.arange(1, 21, dtype=np.int64) * 1234 % P
    hist = []
    x = lanczos_solve(np.eye(20, dtype=np.int64), b, P, history=hist)
    assert np.array_equal(x, b) and len(hist) == 1


def test_zero_rhs():
    hist = []
    x = lanczos_solve(np.eye(5, dtype=np.int64), np.zeros(5), P, history=hist)
    assert not x.any() and hist == []


def test_against_dense_elimination():
    rng = SplitMix64(65537)
    done = 0
    while done < 30:
        A = random_symmetric(50, P, rng)
        if oracles.det_mod_p(A, P) == 0:
            continue
        b = rng.below(np.full(50, P, dtype=np.uint64)).astype(np.int64)
        x = lanczos_solve(A, b, P)
        assert np.array_equal(x, oracles.solve_mod_p(A, b, P))
        assert np.array_equal(A @ x % P, b)
        done += 1


def test_callable_operator():
    rng = SplitMix64(1)
    A = random_symmetric(10, 101, rng)
    b = np.arange(10, dtype=np.int64)
    try:
        x1 = lanczos_solve(A, b, 101)
    except IsotropicBreakdown:
        pytest.skip("breakdown for this draw")
    x2 = lanczos_solve(lambda v: A @ v, b, 101)
    assert np.array_equal(x1, x2)


def test_krylov_vectors_are_A_orthogonal():
    rng = SplitMix64(3)
    A = random_symmetric(30, P, rng)
    b = rng.below(np.full(30, P, dtype=np.uint64)).astype(np.int64)
    hist = []
    lanczos_solve(A, b, P, history=hist)
    for i in range(len(hist)):
        for j in range(i):
            assert int(hist[i] @ (A @ hist[j] % P) % P) == 0


def test_gf2_breakdown_is_early():
    st = breakdown_demo(N=100, trials=100, seed=0, p=2)
    assert st.breakdowns == 100
    assert st.fraction_before(10) >= 0.9


def test_large_prime_breakdown_rare():
    st = breakdown_demo(N=100, trials=50, seed=0, p=P)
    assert st.breakdowns <= 2


def test_one_by_one_over_gf2():
    x = lanczos_solve(np.array([[1]]), np.array([1]), 2, field=PrimeField(2, allow_two=True))
    assert x.tolist() == [1]


def test_isotropic_breakdown_raised():
    # v = (1, 1) is isotropic for the identity over GF(2)
    with pytest.raises(IsotropicBreakdown) as info:
        lanczos_solve(np.eye(2, dtype=np.int64), np.array([1, 1]), 2, field=PrimeField(2, allow_two=True))
    assert info.value.index == 0


@pytest.mark.parametrize("p", [1, 2, 9, 65535, 2**31 + 11])
def test_field_validation(p):
    with pytest.raises(ValueError):
        PrimeField(p)


def test_field_ops():
    F = PrimeField(P)
    a = np.array([P - 1, 2], dtype=np.int64)
    assert F.dot(a, a) == (1 + 4) % P
    assert F.inv(3) * 3 % P == 1
