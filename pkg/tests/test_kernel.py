from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspace_faces.kernel import (
    KECA,
    KPCA,
    fit_keca,
    fit_kpca,
    kernel_matrix,
    project_kernel,
    renyi_entropy,
    renyi_entropy_estimate,
    select_components,
)
from subspace_faces.linear import fit_pca
from subspace_faces.numeric import fix_signs


def quadratic_features(X):
    """Explicit feature map of the degree-2 polynomial kernel in the plane."""
    x1, x2 = X[:, 0], X[:, 1]
    return np.column_stack([x1**2, np.sqrt(2) * x1 * x2, x2**2])


def same_up_to_sign(A, B, atol):
    np.testing.assert_allclose(fix_signs(A), fix_signs(B), atol=atol)


class TestKernelMatrix:
    def test_values(self):
        X = np.array([[1.0, 2.0], [3.0, 0.0]])
        np.testing.assert_array_equal(kernel_matrix(X, 2), [[25.0, 9.0], [9.0, 81.0]])

    def test_exactly_symmetric(self):
        X = np.random.default_rng(0).standard_normal((15, 40))
        K = kernel_matrix(X, 3)
        np.testing.assert_array_equal(K, K.T)

    def test_cross_kernel(self):
        X = np.random.default_rng(1).standard_normal((5, 3))
        Y = np.random.default_rng(2).standard_normal((2, 3))
        np.testing.assert_allclose(kernel_matrix(X, 2, Y), (Y @ X.T) ** 2)

    @pytest.mark.parametrize("p", [0, -1, 1.5])
    def test_bad_degree(self, p):
        with pytest.raises(ValueError, match="degree"):
            kernel_matrix(np.eye(2), p)

    def test_feature_mismatch(self):
        with pytest.raises(ValueError, match="features"):
            kernel_matrix(np.eye(3), 2, np.eye(2))


class TestRenyi:
    def test_information_potential(self):
        X = np.random.default_rng(3).standard_normal((6, 2))
        K = kernel_matrix(X, 2)
        sp, terms = renyi_entropy_estimate(K)
        assert sp == pytest.approx(K.sum() / 36, rel=1e-10)
        assert renyi_entropy(K) == pytest.approx(-np.log(K.sum() / 36))
        assert np.all(terms >= 0)

    def test_zero_kernel(self):
        with pytest.raises(ValueError, match="not positive"):
            renyi_entropy_estimate(np.zeros((3, 3)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(2, 12), st.integers(1, 3))
    def test_terms_sum_to_potential(self, seed, n, p):
        X = np.random.default_rng(seed).standard_normal((n, 3))
        K = kernel_matrix(X, p)
        sp, _ = renyi_entropy_estimate(K)
        assert abs(sp - K.sum() / n**2) <= 1e-8 * max(1.0, np.abs(K).sum() / n**2)


class TestKPCA:
    def test_explicit_feature_map_oracle(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((12, 2))
        Y = rng.standard_normal((3, 2))
        Phi = quadratic_features(X)
        _, s, Vt = np.linalg.svd(Phi, full_matrices=False)
        model = fit_kpca(X, 3, p=2)
        np.testing.assert_allclose(model.eig.eigenvalues[:3], s**2, rtol=1e-8)
        same_up_to_sign(model.training_features(), Phi @ Vt.T, atol=1e-8)
        # out-of-sample features are projections of the mapped probe on the same axes
        signs = np.sign(np.sum(model.training_features() * (Phi @ Vt.T), axis=0))
        np.testing.assert_allclose(model.transform(Y), quadratic_features(Y) @ Vt.T * signs, atol=1e-8)

    def test_training_projection_consistent(self):
        X = np.random.default_rng(5).standard_normal((10, 4))
        for center in (False, True):
            model = fit_kpca(X, 3, p=2, center_kernel=center)
            np.testing.assert_allclose(model.transform(X), model.training_features(), atol=1e-9)

    def test_linear_kernel_is_pca(self):
        X = np.random.default_rng(6).standard_normal((20, 5)) * [4, 3, 2, 1, 0.5]
        pca = fit_pca(X, 3)
        Z = pca.transform(X)
        same_up_to_sign(fit_kpca(X - X.mean(0), 3, p=1).transform(X - X.mean(0)), Z, atol=1e-10)
        same_up_to_sign(fit_kpca(X, 3, p=1, center_kernel=True).transform(X), Z, atol=1e-10)

    def test_single_vector(self):
        X = np.random.default_rng(7).standard_normal((8, 3))
        model = fit_kpca(X, 2)
        assert project_kernel(model, X[0]).shape == (2,)

    def test_retention_floor(self):
        # five samples in the plane give a rank-3 quadratic kernel
        X = np.random.default_rng(8).standard_normal((5, 2))
        assert fit_kpca(X, 1).retained == 3
        with pytest.raises(ValueError, match="retained rank is 3"):
            fit_kpca(X, 4)

    def test_eigenproblem_shape(self):
        X = np.random.default_rng(9).random((200, 50))
        assert fit_kpca(X, 5).eigenproblem_shape == (200, 200)


class TestKECA:
    def test_differs_when_top_vector_sums_to_zero(self):
        e1 = np.array([1.0, -1.0]) / np.sqrt(2)
        e2 = np.array([1.0, 1.0]) / np.sqrt(2)
        X = np.array([3 * e1, -3 * e1, e2, -e2])
        kpca, keca = fit_kpca(X, 1, p=1), fit_keca(X, 1, p=1)
        assert kpca.selected[0] == 0
        assert keca.selected[0] == 1
        assert abs(kpca.eig.eigenvectors[:, 0].sum()) < 1e-12

    def test_entropy_subset_is_optimal(self):
        # brute force over every k-subset of the retained spectrum
        for seed in range(5):
            X = np.random.default_rng(seed).standard_normal((8, 4)) + 0.3
            model = fit_keca(X, 3)
            terms = model.entropy_terms[: model.retained]
            best = max(sum(terms[list(c)]) for c in combinations(range(terms.size), 3))
            assert terms[model.selected].sum() == pytest.approx(best, rel=1e-12)

    def test_shares_eigensystem(self):
        X = np.random.default_rng(10).standard_normal((9, 3))
        keca = fit_keca(X, 2)
        kpca = select_components(keca, 2, "eigenvalue")
        assert kpca.eig is keca.eig
        np.testing.assert_array_equal(kpca.selected, [0, 1])

    def test_unknown_ranking(self):
        model = fit_kpca(np.random.default_rng(0).standard_normal((5, 2)), 1)
        with pytest.raises(ValueError, match="unknown ranking"):
            select_components(model, 1, "variance")


class TestEstimators:
    @pytest.mark.parametrize("cls", [KPCA, KECA])
    def test_fit_transform(self, cls):
        X = np.random.default_rng(11).standard_normal((12, 6))
        est = cls(n_components=4, degree=2)
        Z = est.fit_transform(X)
        assert Z.shape == (12, 4)
        assert est.n_features_in_ == 6
        assert est.selected_.shape == (4,)

    def test_keca_selection_by_entropy(self):
        X = np.random.default_rng(12).standard_normal((12, 6))
        est = KECA(n_components=3).fit(X)
        t = est.entropy_terms_[est.selected_]
        assert np.all(np.diff(t) <= 0)
