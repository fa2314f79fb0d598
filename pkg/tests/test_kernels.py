import math

import numpy as np
import pytest

from onsetml.kernels import (
    KernelSpec,
    cross_gram,
    default_sigma,
    gram_matrix,
    linear_kernel,
    rbf_kernel,
)


class TestRbfKernel:
    def test_identical_vectors_give_exactly_one(self):
        v = np.array([0.3, -1.2, 4.0])
        assert rbf_kernel(v, v, sigma=0.7) == 1.0

    def test_distance_matching_two_sigma_squared(self):
        # ||s - s1||^2 = 2 sigma^2  ->  exp(-1)
        sigma = 1.3
        s = np.zeros(4)
        s1 = np.full(4, math.sqrt(2.0 * sigma * sigma / 4.0))
        assert abs(rbf_kernel(s, s1, sigma) - math.exp(-1.0)) < 1e-6

    def test_symmetric(self):
        rng = np.random.RandomState(0)
        for _ in range(50):
            a, b = rng.randn(6), rng.randn(6)
            assert rbf_kernel(a, b, 1.1) == rbf_kernel(b, a, 1.1)

    def test_strictly_increasing_in_sigma(self):
        rng = np.random.RandomState(1)
        for _ in range(1000):
            a, b = rng.randn(5), rng.randn(5)
            s1, s2 = sorted(rng.uniform(0.2, 5.0, size=2))
            if s1 == s2:
                continue
            assert rbf_kernel(a, b, s1) < rbf_kernel(a, b, s2)

    def test_range(self):
        rng = np.random.RandomState(2)
        for _ in range(100):
            v = rbf_kernel(rng.randn(4), rng.randn(4), 0.9)
            assert 0.0 < v <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            rbf_kernel(np.zeros(3), np.zeros(4), 1.0)

    def test_bad_sigma(self):
        with pytest.raises(ValueError, match="sigma"):
            rbf_kernel(np.zeros(2), np.zeros(2), 0.0)


class TestLinearKernel:
    def test_orthogonal(self):
        assert linear_kernel([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_value(self):
        assert linear_kernel([1.0, 2.0], [3.0, 4.0]) == 11.0

    def test_self_product_nonnegative(self):
        rng = np.random.RandomState(3)
        for _ in range(50):
            v = rng.randn(5)
            assert linear_kernel(v, v) >= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            linear_kernel([1.0], [1.0, 2.0])


class TestGramMatrix:
    def test_rbf_diagonal_exactly_one(self):
        rng = np.random.RandomState(4)
        G = gram_matrix(rng.randn(3, 5), KernelSpec("rbf", 1.0))
        assert np.array_equal(np.diag(G), np.ones(3))

    def test_duplicate_rows_all_ones(self):
        row = np.array([0.5, -1.0])
        G = gram_matrix(np.vstack([row, row]), KernelSpec("rbf", 0.8))
        assert np.array_equal(G, np.ones((2, 2)))

    def test_bitwise_symmetry(self):
        rng = np.random.RandomState(5)
        X = rng.randn(40, 6)
        for spec in (KernelSpec("rbf", 1.7), KernelSpec("linear")):
            G = gram_matrix(X, spec)
            assert np.array_equal(G, G.T)

    def test_rbf_gram_is_psd(self):
        rng = np.random.RandomState(6)
        X = rng.randn(50, 4)
        X = (X - X.mean(0)) / X.std(0)
        G = gram_matrix(X, KernelSpec("rbf", default_sigma(4)))
        assert np.linalg.eigvalsh(G).min() >= -1e-8

    def test_linear_gram_is_psd(self):
        rng = np.random.RandomState(7)
        G = gram_matrix(rng.randn(30, 3) * 5, KernelSpec("linear"))
        min_eig = np.linalg.eigvalsh(G).min()
        assert min_eig >= -1e-8 * max(1.0, np.abs(G).max())

    def test_entries_in_unit_interval(self):
        rng = np.random.RandomState(8)
        G = gram_matrix(rng.randn(20, 3), KernelSpec("rbf", 0.6))
        assert (G > 0.0).all() and (G <= 1.0).all()

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gram_matrix(np.empty((0, 3)), KernelSpec("rbf", 1.0))

    def test_matches_pairwise_kernel(self):
        rng = np.random.RandomState(9)
        X = rng.randn(7, 3)
        spec = KernelSpec("rbf", 1.2)
        G = gram_matrix(X, spec)
        for i in range(7):
            for j in range(7):
                assert abs(G[i, j] - rbf_kernel(X[i], X[j], 1.2)) < 1e-12


class TestCrossGram:
    def test_matches_pairwise(self):
        rng = np.random.RandomState(10)
        X, Z = rng.randn(4, 3), rng.randn(5, 3)
        spec = KernelSpec("rbf", 0.9)
        K = cross_gram(X, Z, spec)
        assert K.shape == (4, 5)
        for i in range(4):
            for j in range(5):
                assert abs(K[i, j] - rbf_kernel(X[i], Z[j], 0.9)) < 1e-12

    def test_width_mismatch(self):
        with pytest.raises(ValueError, match="width"):
            cross_gram(np.zeros((2, 3)), np.zeros((2, 4)), KernelSpec("linear"))


class TestKernelSpec:
    def test_default_sigma_is_sqrt_half_d(self):
        assert default_sigma(8) == 2.0

    def test_validation(self):
        with pytest.raises(ValueError):
            KernelSpec("poly", 1.0)
        with pytest.raises(ValueError):
            KernelSpec("rbf", -1.0)
