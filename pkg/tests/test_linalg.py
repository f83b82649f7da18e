import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpspectra.linalg import (
    eig_sym,
    orthonormality_defect,
    projection_distance,
    random_orthonormal,
    require_symmetric,
    schatten_norm,
    symmetrize,
    top_r,
)

RNG = np.random.default_rng(20260808)


def random_symmetric(p, rng, scale=1.0):
    a = rng.standard_normal((p, p)) * scale
    return symmetrize((a + a.T) / 2)


def test_eig_diagonal_sorted():
    dec = eig_sym(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [3.0, 2.0, 1.0])
    # eigenvectors are a signed permutation of the canonical basis
    assert np.allclose(np.abs(dec.eigenvectors), np.eye(3)[:, [0, 2, 1]])


def test_eig_identity():
    dec = eig_sym(np.eye(4))
    assert np.allclose(dec.eigenvalues, np.ones(4))
    assert orthonormality_defect(dec.eigenvectors) < 1e-12


def test_eig_two_by_two_hand_solution():
    dec = eig_sym(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(dec.eigenvalues, [3.0, 1.0])
    v0, v1 = dec.eigenvectors[:, 0], dec.eigenvectors[:, 1]
    s = 1 / math.sqrt(2)
    assert min(np.abs(v0 - [s, s]).max(), np.abs(v0 + [s, s]).max()) < 1e-12
    assert min(np.abs(v1 - [s, -s]).max(), np.abs(v1 + [s, -s]).max()) < 1e-12


def test_eig_reconstruction_random():
    m = random_symmetric(12, RNG)
    dec = eig_sym(m)
    assert np.linalg.norm(dec.reconstruct() - m) <= 1e-8 * np.linalg.norm(m)


def test_eig_rejects_nonfinite():
    m = np.eye(3)
    m[0, 1] = m[1, 0] = np.nan
    with pytest.raises(ValueError):
        eig_sym(m)


def test_top_r_diagonal():
    u = top_r(np.diag([5.0, 4.0, 3.0]), 2)
    proj = u @ u.T
    assert np.allclose(proj, np.diag([1.0, 1.0, 0.0]))


def test_top_r_degenerate_identity():
    u = top_r(np.eye(3), 1)
    assert abs(np.trace(u @ u.T) - 1.0) < 1e-12


def test_top_r_rank_one():
    v = RNG.standard_normal(7)
    v /= np.linalg.norm(v)
    u = top_r(np.outer(v, v), 1)[:, 0]
    assert min(np.abs(u - v).max(), np.abs(u + v).max()) < 1e-10


def test_top_r_dimension_error():
    with pytest.raises(ValueError):
        top_r(np.eye(3), 4)


def test_schatten_diagonal_cases():
    m = np.diag([3.0, -4.0, 0.0])
    assert schatten_norm(m, "inf") == pytest.approx(4.0)
    assert schatten_norm(m, 1) == pytest.approx(7.0)
    assert schatten_norm(m, 2) == pytest.approx(5.0)


def test_schatten_zero_matrix():
    for q in (1, 2, 3.5, "inf"):
        assert schatten_norm(np.zeros((4, 4)), q) == 0.0


def test_schatten_frobenius_matches_entrywise_sum():
    m = random_symmetric(9, RNG)
    entrywise = math.sqrt(float((m * m).sum()))
    assert abs(schatten_norm(m, 2) - entrywise) < 1e-10


def test_schatten_math_inf_normalized():
    m = np.diag([1.0, -2.0])
    assert schatten_norm(m, math.inf) == schatten_norm(m, "inf")


def test_schatten_domain_error():
    with pytest.raises(ValueError):
        schatten_norm(np.eye(2), 0.5)
    with pytest.raises(ValueError):
        schatten_norm(np.eye(2), "nuclear")


def test_projection_distance_identical():
    u = random_orthonormal(6, 2, RNG)
    assert projection_distance(u, u, 2) == pytest.approx(0.0, abs=1e-12)


def test_projection_distance_orthogonal_unit_vectors():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    assert projection_distance(e1, e2, 2) == pytest.approx(math.sqrt(2))
    assert projection_distance(e1, e2, "inf") == pytest.approx(1.0)
    assert projection_distance(e1, e2, 1) == pytest.approx(2.0)


def test_projection_distance_rotation_invariant():
    u = random_orthonormal(8, 3, RNG)
    rot = random_orthonormal(3, 3, RNG)
    assert projection_distance(u @ rot, u, 2) < 1e-10


def test_projection_distance_shape_mismatch():
    with pytest.raises(ValueError):
        projection_distance(np.eye(3)[:, :2], np.eye(4)[:, :2], 2)


def test_random_orthonormal_full_square():
    u = random_orthonormal(5, 5, np.random.default_rng(3))
    assert abs(abs(np.linalg.det(u)) - 1.0) < 1e-8


def test_random_orthonormal_tall():
    u = random_orthonormal(50, 3, np.random.default_rng(4))
    assert orthonormality_defect(u) < 1e-10


def test_random_orthonormal_deterministic():
    a = random_orthonormal(10, 2, np.random.default_rng(11))
    b = random_orthonormal(10, 2, np.random.default_rng(11))
    assert np.array_equal(a, b)


def test_random_orthonormal_rejects_r_gt_p():
    with pytest.raises(ValueError):
        random_orthonormal(3, 4, RNG)


def test_trace_identity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m = random_symmetric(8, rng)
        dec = eig_sym(m)
        assert dec.eigenvalues.sum() == pytest.approx(np.trace(m), rel=1e-8)


def test_weyl_inequality():
    rng = np.random.default_rng(6)
    for _ in range(100):
        a = random_symmetric(8, rng)
        b = random_symmetric(8, rng, scale=0.5)
        ea = np.sort(np.linalg.eigvalsh(a))[::-1]
        eab = np.sort(np.linalg.eigvalsh(a + b))[::-1]
        assert np.abs(eab - ea).max() <= schatten_norm(b, "inf") + 1e-10


def test_hoffman_wielandt_inequality():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        a = random_symmetric(6, rng)
        b = random_symmetric(6, rng)
        ea = np.sort(np.linalg.eigvalsh(a))[::-1]
        eb = np.sort(np.linalg.eigvalsh(b))[::-1]
        lhs = ((ea - eb) ** 2).sum()
        rhs = float(((a - b) ** 2).sum())
        assert lhs <= rhs * (1 + 1e-10) + 1e-12


def test_schatten_monotonicity():
    rng = np.random.default_rng(8)
    for _ in range(50):
        m = random_symmetric(7, rng)
        assert (
            schatten_norm(m, "inf")
            <= schatten_norm(m, 2) + 1e-12
            <= schatten_norm(m, 1) + 2e-12
        )


def test_projection_distance_rank_bound():
    rng = np.random.default_rng(9)
    for q in (1, 2, 4, "inf"):
        for _ in range(20):
            r = int(rng.integers(1, 4))
            u1 = random_orthonormal(9, r, rng)
            u2 = random_orthonormal(9, r, rng)
            cap = (2 * r) ** (1.0 / (np.inf if q == "inf" else q))
            assert projection_distance(u1, u2, q) <= cap + 1e-9


def test_symmetrize_mirrors_upper_triangle():
    m = np.array([[1.0, 2.0], [9.0, 3.0]])
    out = symmetrize(m)
    assert np.array_equal(out, np.array([[1.0, 2.0], [2.0, 3.0]]))


def test_require_symmetric_rejects_asymmetry():
    with pytest.raises(ValueError):
        require_symmetric(np.array([[1.0, 2.0], [9.0, 3.0]]))


@settings(max_examples=50, deadline=None, derandomize=True)
@given(st.integers(min_value=2, max_value=10), st.integers(min_value=0, max_value=2**31 - 1))
def test_eigendecomposition_properties(p, seed):
    m = random_symmetric(p, np.random.default_rng(seed))
    dec = eig_sym(m)
    assert np.all(np.diff(dec.eigenvalues) <= 1e-12)
    assert orthonormality_defect(dec.eigenvectors) < 1e-8
    assert np.linalg.norm(dec.reconstruct() - m) <= 1e-8 * max(np.linalg.norm(m), 1e-12)


@settings(max_examples=30, deadline=None, derandomize=True)
@given(
    st.integers(min_value=1, max_value=4),
    st.integers(min_value=0, max_value=2**31 - 1),
    st.floats(min_value=1.0, max_value=8.0),
)
def test_projection_distance_is_a_metric_sample(r, seed, q):
    rng = np.random.default_rng(seed)
    u1 = random_orthonormal(8, r, rng)
    u2 = random_orthonormal(8, r, rng)
    u3 = random_orthonormal(8, r, rng)
    d12 = projection_distance(u1, u2, q)
    d13 = projection_distance(u1, u3, q)
    d23 = projection_distance(u2, u3, q)
    assert d12 >= 0
    assert d12 == pytest.approx(projection_distance(u2, u1, q), rel=1e-9, abs=1e-12)
    assert d13 <= d12 + d23 + 1e-9
