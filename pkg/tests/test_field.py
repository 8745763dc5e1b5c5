import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtss import field
from mtss.field import MatrixFq, next_prime_at_least, rank, solve_affine


# ---------------------------------------------------------------- primality

def _primes_by_sieve(limit):
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return set(np.nonzero(flags)[0].tolist())


def test_next_prime_examples():
    assert next_prime_at_least(2) == 2
    assert next_prime_at_least(8) == 11
    assert next_prime_at_least(2402) == 2411


def test_next_prime_matches_sieve():
    primes = _primes_by_sieve(5000)
    for m in range(2, 3000, 7):
        p = next_prime_at_least(m)
        assert p in primes and p >= m
        assert not any(k in primes for k in range(m, p))


def test_next_prime_rejects_tiny():
    with pytest.raises(ValueError):
        next_prime_at_least(1)


# ---------------------------------------------------------------- rank

def _independent_brute(cols, q):
    """No nontrivial linear combination vanishes (exhaustive search)."""
    k = len(cols)
    for coeffs in itertools.product(range(q), repeat=k):
        if all(c == 0 for c in coeffs):
            continue
        combo = np.zeros(len(cols[0]), dtype=np.int64)
        for c, v in zip(coeffs, cols):
            combo = (combo + c * np.asarray(v)) % q
        if not combo.any():
            return False
    return True


def _rank_brute(a, q):
    """Largest independent subset of columns, checked by exhaustive combos."""
    a = np.asarray(a) % q
    cols = [a[:, j] for j in range(a.shape[1])]
    best = 0
    for r in range(len(cols), 0, -1):
        for subset in itertools.combinations(cols, r):
            if _independent_brute(list(subset), q):
                return r
    return best


def test_rank_examples():
    assert rank([[1, 1], [2, 3]], 5) == 2
    assert rank([[1, 2], [2, 4]], 5) == 1
    assert rank([[1, 1], [1, 1]], 2) == 1
    assert rank(np.zeros((3, 4), dtype=int), 7) == 0
    assert rank(np.zeros((3, 0), dtype=int), 7) == 0


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_rank_matches_brute_force(data):
    q = data.draw(st.sampled_from([2, 3, 5, 7]))
    n = data.draw(st.integers(1, 4))
    m = data.draw(st.integers(1, 4))
    entries = data.draw(
        st.lists(st.integers(0, q - 1), min_size=n * m, max_size=n * m)
    )
    a = np.array(entries, dtype=np.int64).reshape(n, m)
    assert rank(a, q) == _rank_brute(a, q)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_rank_equals_rank_of_transpose(data):
    q = data.draw(st.sampled_from([2, 3, 5, 11]))
    n = data.draw(st.integers(1, 5))
    m = data.draw(st.integers(1, 5))
    entries = data.draw(
        st.lists(st.integers(0, q - 1), min_size=n * m, max_size=n * m)
    )
    a = np.array(entries, dtype=np.int64).reshape(n, m)
    assert rank(a, q) == rank(a.T, q)
    assert rank(a, q) <= min(n, m)


# ---------------------------------------------------------------- solving

def test_solve_affine_example():
    # x1 + x2 = 0 over F_3: kernel generated by (1, 2).
    particular, basis = solve_affine([[1, 1]], [0], 3)
    assert particular.tolist() == [0, 0]
    assert basis.shape == (1, 2)
    sols = {tuple(particular)}
    sols |= {tuple((particular + t * basis[0]) % 3) for t in range(1, 3)}
    assert sols == {(0, 0), (1, 2), (2, 1)}


def test_solve_affine_inconsistent():
    with pytest.raises(ValueError, match="inconsistent"):
        solve_affine([[1, 1], [2, 2]], [1, 1], 5)


def test_solve_affine_enumeration_oracle():
    # Compare the affine solution set against exhaustive enumeration.
    q = 3
    A = np.array([[1, 2, 0], [0, 1, 1]], dtype=np.int64)
    b = np.array([1, 2], dtype=np.int64)
    particular, basis = solve_affine(A, b, q)
    generated = set()
    for coeffs in itertools.product(range(q), repeat=basis.shape[0]):
        x = particular.copy()
        for c, v in zip(coeffs, basis):
            x = (x + c * v) % q
        generated.add(tuple(x.tolist()))
    brute = {
        x
        for x in itertools.product(range(q), repeat=3)
        if np.array_equal(A @ np.array(x) % q, b)
    }
    assert generated == brute


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_solve_affine_round_trip(data):
    q = data.draw(st.sampled_from([2, 3, 5, 7]))
    n = data.draw(st.integers(1, 4))
    m = data.draw(st.integers(1, 4))
    entries = data.draw(
        st.lists(st.integers(0, q - 1), min_size=n * m, max_size=n * m)
    )
    x = np.array(data.draw(st.lists(st.integers(0, q - 1), min_size=m, max_size=m)))
    A = np.array(entries, dtype=np.int64).reshape(n, m)
    b = A @ x % q
    particular, basis = solve_affine(A, b, q)
    assert np.array_equal(A @ particular % q, b)
    for v in basis:
        assert not (A @ v % q).any()
    # dimension check: #solutions = q^(m - rank)
    assert basis.shape[0] == m - rank(A, q)


# ---------------------------------------------------------------- matrices

def test_matrix_validation():
    with pytest.raises(ValueError, match="not prime"):
        MatrixFq(6, [[1]])
    m = MatrixFq(5, [[7, -1], [2, 3]])
    assert m.a.tolist() == [[2, 4], [2, 3]]
    assert m.shape == (2, 2)
    with pytest.raises(ValueError):
        m.a[0, 0] = 1  # frozen storage


def test_matrix_stacking():
    a = MatrixFq(5, [[1, 2], [3, 4]])
    b = MatrixFq(5, [[0], [1]])
    assert field.hstack([a, b]).a.tolist() == [[1, 2, 0], [3, 4, 1]]
    d = field.block_diag([a, b])
    assert d.shape == (4, 3)
    assert d.a.tolist() == [[1, 2, 0], [3, 4, 0], [0, 0, 0], [0, 0, 1]]
    with pytest.raises(ValueError):
        field.hstack([a, MatrixFq(7, [[1], [1]])])


def test_matrix_take_columns_and_empty():
    a = MatrixFq(5, [[1, 2, 3], [4, 0, 1]])
    assert a.take_columns([2, 0]).a.tolist() == [[3, 1], [1, 4]]
    empty = a.take_columns([])
    assert empty.n_cols == 0 and empty.rank() == 0
