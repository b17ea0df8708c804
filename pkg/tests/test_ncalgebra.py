import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ncwave.ncalgebra import (
    DimensionError,
    SingularMatrixError,
    add,
    assemble,
    block_matrix,
    condition_1norm,
    dagger,
    equilibrate,
    extract,
    inverse,
    lu_decompose,
    lu_solve,
    mul,
    solve,
    solve_batched,
)

from conftest import random_complex
from oracles import det_cofactor, det_leibniz, matmul_loops


def test_mul_matches_triple_loop(rng):
    for n, k, m in [(1, 1, 1), (2, 3, 4), (5, 5, 5)]:
        a, b = random_complex(rng, n, k), random_complex(rng, k, m)
        assert np.allclose(mul(a, b), matmul_loops(a, b), atol=1e-13)


def test_shape_errors():
    with pytest.raises(DimensionError):
        mul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(DimensionError):
        add(np.ones((2, 2)), np.ones((3, 3)))
    with pytest.raises(DimensionError):
        inverse(np.ones((2, 3)))


def test_dagger_on_stacks(rng):
    a = random_complex(rng, 4, 3, 2, 2)
    d = dagger(a)
    assert np.array_equal(d[1, 2], a[1, 2].conj().T)


def test_lu_reconstructs_with_permutation(rng):
    a = random_complex(rng, 6, 5, 5)
    lu, perm, ratio = lu_decompose(a)
    for s in range(6):
        L = np.tril(lu[s], -1) + np.eye(5)
        U = np.triu(lu[s])
        assert np.allclose(L @ U, a[s][perm[s]], atol=1e-12)
    assert np.all(ratio > 0)


def test_determinant_from_lu_matches_two_oracles(rng):
    for n in range(1, 6):
        a = random_complex(rng, n, n)
        lu, perm, _ = lu_decompose(a)
        sign = np.linalg.det(np.eye(n)[perm])
        det = sign * np.prod(np.diag(lu))
        assert det == pytest.approx(det_leibniz(a), rel=1e-10)
        assert det == pytest.approx(det_cofactor(a), rel=1e-10)


def test_solve_against_numpy(rng):
    a = random_complex(rng, 6, 6)
    b = random_complex(rng, 6, 2)
    assert np.allclose(solve(a, b), np.linalg.solve(a, b), atol=1e-12)
    v = random_complex(rng, 6)
    assert solve(a, v).shape == (6,)


def test_singular_matrix_is_reported():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError) as info:
        solve(a, np.eye(2))
    assert info.value.pivot < 1e-12


def test_batched_solve_flags_only_singular_entries(rng):
    a = random_complex(rng, 3, 4, 4)
    a[1] = np.outer(np.arange(1, 5), np.arange(1, 5))
    x, singular = solve_batched(a, np.broadcast_to(np.eye(4), (3, 4, 4)))
    assert singular.tolist() == [False, True, False]
    assert np.allclose(a[0] @ x[0], np.eye(4), atol=1e-12)


def test_inverse_and_condition(rng):
    a = random_complex(rng, 4, 4)
    inv, cond = inverse(a, return_cond=True)
    assert np.allclose(inv @ a, np.eye(4), atol=1e-12)
    assert cond == pytest.approx(np.linalg.cond(a, 1), rel=1e-10)
    assert condition_1norm(np.eye(3)) == pytest.approx(1.0)


def test_equilibrate_uses_powers_of_two(rng):
    a = random_complex(rng, 5, 5) * np.logspace(-30, 30, 5)[:, None]
    r, c = equilibrate(a)
    assert np.all(np.log2(r) == np.round(np.log2(r)))
    scaled = np.abs(r[:, None] * a * c[None, :])
    assert scaled.max() <= 2 and scaled.max(axis=1).min() >= 0.25


def test_longdouble_is_preserved():
    a = np.array([[2, 1], [1, 3]], dtype=np.clongdouble)
    lu, perm, _ = lu_decompose(a)
    assert lu.dtype == np.clongdouble
    x = lu_solve(lu, perm, np.eye(2, dtype=np.clongdouble))
    assert x.dtype == np.clongdouble


def test_block_round_trip(rng):
    blocks = random_complex(rng, 3, 2, 2, 2)
    flat = assemble(blocks)
    assert flat.shape == (6, 4)
    assert np.array_equal(extract(flat, 2), blocks)
    m = block_matrix([[np.eye(2), 2 * np.eye(2)], [3 * np.eye(2), 4 * np.eye(2)]])
    assert m.shape == (2, 2, 2, 2)
    with pytest.raises(DimensionError):
        extract(np.ones((3, 4)), 2)
    with pytest.raises(DimensionError):
        block_matrix([[np.eye(2), np.eye(3)]])


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=finite), arrays(float, (4, 4), elements=finite))
def test_solve_residual_property(re, im):
    a = re + 1j * im + 25 * np.eye(4)
    b = np.arange(8.0).reshape(4, 2)
    x = solve(a, b)
    assert np.abs(a @ x - b).max() <= 1e-10 * (1 + np.abs(a).max() * np.abs(x).max())
