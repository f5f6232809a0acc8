"""Feature-sign search against closed forms and the coordinate-descent oracle."""

import numpy as np
import pytest

from ecgsparse.errors import (
    BadConfigError,
    MaxIterationsError,
    ShapeMismatchError,
)
from ecgsparse.sparse_coding import (
    CodingProblem,
    SparseVector,
    check_optimality,
    default_lambda,
    encode_all,
    feature_sign,
    lasso_objective,
    oracle_solve,
)


def random_problem(rng, d=8, k=12, lam=0.1):
    D = rng.standard_normal((d, k))
    D /= np.linalg.norm(D, axis=0, keepdims=True)
    y = rng.standard_normal(d)
    return CodingProblem(dictionary=D, target=y, lam=lam)


# --- SparseVector -------------------------------------------------------------

def test_sparse_vector_roundtrip():
    x = np.array([0.0, -2.5, 0.0, 1.0, 0.0])
    sv = SparseVector.from_dense(x)
    assert sv.nnz == 2
    assert all(v != 0 for _, v in sv.entries)
    np.testing.assert_array_equal(sv.to_dense(), x)


def test_coding_problem_validation():
    D = np.eye(3)
    y = np.ones(3)
    with pytest.raises(BadConfigError):
        CodingProblem(dictionary=D, target=y, lam=0.0)
    with pytest.raises(ShapeMismatchError):
        CodingProblem(dictionary=D, target=np.ones(4), lam=0.1)
    with pytest.raises(BadConfigError):
        CodingProblem(dictionary=2.0 * D, target=y, lam=0.1)  # columns too long


# --- objective ----------------------------------------------------------------

def test_objective_empty_code():
    p = CodingProblem(dictionary=np.eye(2), target=np.array([3.0, 4.0]), lam=0.1)
    x = SparseVector.from_dense(np.zeros(2))
    assert lasso_objective(p, x) == pytest.approx(12.5)  # 0.5 * 25


def test_objective_exact_fit():
    p = CodingProblem(dictionary=np.eye(2), target=np.array([1.0, 0.0]), lam=0.1)
    x = SparseVector.from_dense(np.array([1.0, 0.0]))
    assert lasso_objective(p, x) == pytest.approx(0.1)


def test_objective_nonnegative():
    rng = np.random.default_rng(0)
    p = random_problem(rng)
    for _ in range(10):
        x = SparseVector.from_dense(rng.standard_normal(12))
        assert lasso_objective(p, x) >= 0.0


# --- feature_sign -------------------------------------------------------------

def test_feature_sign_zero_when_lambda_large():
    rng = np.random.default_rng(1)
    D = rng.standard_normal((4, 6))
    D /= np.linalg.norm(D, axis=0, keepdims=True)
    y = rng.standard_normal(4)
    lam = float(np.max(np.abs(D.T @ y))) + 0.01
    x = feature_sign(CodingProblem(dictionary=D, target=y, lam=lam))
    assert x.nnz == 0


def test_feature_sign_orthonormal_soft_threshold():
    p = CodingProblem(dictionary=np.eye(2), target=np.array([1.0, 0.2]), lam=0.5)
    x = feature_sign(p).to_dense()
    np.testing.assert_allclose(x, [0.5, 0.0], atol=1e-12)


def test_feature_sign_optimality_conditions():
    rng = np.random.default_rng(2)
    for _ in range(40):
        p = random_problem(rng)
        x = feature_sign(p)
        assert check_optimality(p, x) <= 1e-7


def test_feature_sign_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = random_problem(rng)
        fs = lasso_objective(p, feature_sign(p))
        cd = lasso_objective(p, oracle_solve(p))
        assert abs(fs - cd) <= 1e-6


def test_feature_sign_homogeneity():
    # scaling (y, lambda) by c scales the solution by c
    rng = np.random.default_rng(4)
    D = rng.standard_normal((6, 10))
    D /= np.linalg.norm(D, axis=0, keepdims=True)
    y = rng.standard_normal(6)
    x1 = feature_sign(CodingProblem(dictionary=D, target=y, lam=0.2)).to_dense()
    x3 = feature_sign(CodingProblem(dictionary=D, target=3 * y, lam=0.6)).to_dense()
    np.testing.assert_allclose(x3, 3.0 * x1, atol=1e-8)


def test_feature_sign_sparsity_monotone_in_lambda():
    rng = np.random.default_rng(5)
    totals = {0.05: 0, 0.4: 0}
    problems = [random_problem(rng, lam=1.0) for _ in range(100)]
    for lam in totals:
        for base in problems:
            p = CodingProblem(dictionary=base.dictionary, target=base.target,
                              lam=lam)
            totals[lam] += feature_sign(p).nnz
    assert totals[0.4] <= totals[0.05]


def test_feature_sign_iteration_cap():
    rng = np.random.default_rng(6)
    p = random_problem(rng, lam=0.01)
    assert feature_sign(p).nnz >= 2  # needs several activations
    with pytest.raises(MaxIterationsError):
        feature_sign(p, max_iter=1)


# --- oracle -------------------------------------------------------------------

def test_oracle_trivial_cases():
    p = CodingProblem(dictionary=np.eye(2), target=np.array([1.0, 0.2]), lam=0.5)
    np.testing.assert_allclose(oracle_solve(p).to_dense(), [0.5, 0.0], atol=1e-10)
    rng = np.random.default_rng(7)
    D = rng.standard_normal((4, 6))
    D /= np.linalg.norm(D, axis=0, keepdims=True)
    y = rng.standard_normal(4)
    lam = float(np.max(np.abs(D.T @ y))) + 0.01
    assert oracle_solve(CodingProblem(dictionary=D, target=y, lam=lam)).nnz == 0


def test_oracle_satisfies_optimality():
    rng = np.random.default_rng(8)
    p = random_problem(rng, d=4, k=6)
    assert check_optimality(p, oracle_solve(p)) <= 1e-5


def test_check_optimality_flags_bad_points():
    rng = np.random.default_rng(9)
    p = random_problem(rng)
    x = SparseVector.from_dense(rng.standard_normal(12))
    assert check_optimality(p, x) > 1e-3


# --- encode_all ---------------------------------------------------------------

def test_encode_all_zero_matrix():
    rng = np.random.default_rng(10)
    D = rng.standard_normal((5, 8))
    D /= np.linalg.norm(D, axis=0, keepdims=True)
    X = encode_all(D, np.zeros((5, 4)), lam=0.1)
    np.testing.assert_array_equal(X, np.zeros((8, 4)))


def test_encode_all_matches_per_column():
    rng = np.random.default_rng(11)
    D = rng.standard_normal((6, 9))
    D /= np.linalg.norm(D, axis=0, keepdims=True)
    Y = rng.standard_normal((6, 5))
    X = encode_all(D, Y, lam=0.15)
    for i in range(5):
        p = CodingProblem(dictionary=D, target=Y[:, i], lam=0.15)
        np.testing.assert_allclose(X[:, i], feature_sign(p).to_dense(),
                                   atol=1e-12)


def test_default_lambda():
    assert default_lambda(144) == pytest.approx(0.1)
    assert default_lambda(75) == pytest.approx(1.2 / np.sqrt(75))
