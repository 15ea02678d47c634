import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subspace_faces.dataset import Dataset, columns_of, synth_gaussian, true_axes, vectorize
from subspace_faces.linear import (
    ECA,
    PCA,
    TwoDECA,
    TwoDPCA,
    ZeroCovarianceError,
    entropy_terms,
    fit_2deca,
    fit_2dpca,
    fit_eca,
    fit_pca,
    image_eigensystem,
    pca_eigensystem,
    project,
    rank_by_entropy,
    with_prefix,
)
from subspace_faces.numeric import SymEigen, eigh_desc, projector_distance

from conftest import make_faces


def cancellation_data():
    """Covariance 5 e1 e1^T + e2 e2^T with e1 = [1,-1]/sqrt2 orthogonal to the ones vector."""
    e1 = np.array([1.0, -1.0]) / np.sqrt(2)
    e2 = np.array([1.0, 1.0]) / np.sqrt(2)
    a, b = np.sqrt(10.0), np.sqrt(2.0)
    return np.array([a * e1, -a * e1, b * e2, -b * e2]), e1, e2


class TestPCA:
    def test_hand_case(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.5], [0.0, -0.5]])
        m = fit_pca(X, 1)
        np.testing.assert_allclose(m.eigenvalues, [0.5, 0.125])
        np.testing.assert_allclose(m.components[:, 0], [1.0, 0.0], atol=1e-15)

    def test_recovers_planted_axes(self):
        d = synth_gaussian(2000, 6, [9.0, 4.0], seed=2)
        m = fit_pca(d, 2)
        assert projector_distance(m.basis, true_axes(6, 2, seed=2)) < 0.1

    def test_gram_matches_direct(self):
        # oracle: dense d x d covariance decomposed with numpy directly
        for seed in range(5):
            X = np.random.default_rng(seed).standard_normal((10, 50))
            mean, eig, shape = pca_eigensystem(X)
            assert shape == (10, 10)
            Xc = X - X.mean(axis=0)
            lam, V = np.linalg.eigh(Xc.T @ Xc / 10)
            lam, V = lam[::-1][:9], V[:, ::-1][:, :9]
            np.testing.assert_allclose(eig.eigenvalues, lam, rtol=1e-8)
            assert projector_distance(eig.eigenvectors, V) < 1e-8
            np.testing.assert_allclose(eig.eigenvectors.T @ eig.eigenvectors, np.eye(9), atol=1e-10)

    def test_direct_path_shape(self):
        X = np.random.default_rng(0).standard_normal((30, 4))
        assert pca_eigensystem(X)[2] == (4, 4)

    def test_orl_shaped_eigenproblem(self):
        X = np.random.default_rng(0).random((200, 10304))
        assert fit_pca(X, 10).eigenproblem_shape == (200, 200)

    def test_transform_centers(self):
        X = np.random.default_rng(1).standard_normal((20, 5))
        m = fit_pca(X, 3)
        np.testing.assert_allclose(m.transform(X).mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(m.transform(X), (X - X.mean(0)) @ m.components)

    def test_projection_variance_ordering(self):
        X = np.random.default_rng(3).standard_normal((40, 6)) * [5, 4, 3, 2, 1, 0.5]
        V = fit_pca(X, 4).transform(X)
        assert np.all(np.diff(V.var(axis=0)) <= 1e-12)

    def test_dataset_input(self, faces):
        m = fit_pca(faces, 5)
        np.testing.assert_allclose(m.transform(faces), fit_pca(vectorize(faces)[0], 5).transform(vectorize(faces)[0]))

    def test_identical_samples(self):
        with pytest.raises(ZeroCovarianceError, match="zero covariance"):
            fit_pca(np.ones((5, 3)), 1)

    def test_k_too_large(self):
        with pytest.raises(ValueError, match="out of range"):
            fit_pca(np.random.default_rng(0).standard_normal((5, 20)), 5)

    def test_k_not_int(self):
        with pytest.raises(TypeError):
            fit_pca(np.random.default_rng(0).standard_normal((5, 3)), 1.5)

    def test_rank_short_of_k(self):
        X = np.zeros((6, 10))
        X[:, 0] = np.arange(6.0)
        with pytest.raises(ValueError, match="retained"):
            fit_pca(X, 3)

    def test_feature_count_checked(self):
        m = fit_pca(np.random.default_rng(0).standard_normal((6, 4)), 2)
        with pytest.raises(ValueError, match="features"):
            m.transform(np.zeros((2, 5)))


class TestECA:
    def test_entropy_prefers_cancelling_direction_last(self):
        X, e1, e2 = cancellation_data()
        pca, eca = fit_pca(X, 1), fit_eca(X, 1)
        np.testing.assert_allclose(pca.eigenvalues, [5, 1], atol=1e-12)
        assert abs(pca.components[:, 0] @ e1) == pytest.approx(1.0)
        assert abs(eca.components[:, 0] @ e2) == pytest.approx(1.0)
        np.testing.assert_allclose(eca.entropy_terms, [0.0, 2 / 4], atol=1e-12)
        assert list(eca.selected) == [1]

    def test_full_selection_same_span(self, faces):
        k = 20
        assert projector_distance(fit_pca(faces, k).basis, fit_eca(faces, k).basis) > 0
        n = len(faces)
        full = n - 1
        p = fit_pca(faces, full).basis
        e = fit_eca(faces, full).basis
        assert projector_distance(p, e) < 1e-8

    def test_terms_sorted_selection(self, faces):
        m = fit_eca(faces, 8)
        t = m.entropy_terms[m.selected]
        assert np.all(np.diff(t) <= 0)
        rest = np.delete(m.entropy_terms, m.selected)
        assert t.min() >= rest.max()

    def test_entropy_completeness(self):
        # sum over the full eigensystem equals 1^T C 1 / n^2
        rng = np.random.default_rng(0)
        A = rng.standard_normal((7, 7))
        C = A @ A.T
        terms = entropy_terms(eigh_desc(C))
        assert terms.sum() == pytest.approx(np.ones(7) @ C @ np.ones(7) / 49, rel=1e-10)


class TestEntropyTerms:
    def test_rejects_indefinite(self):
        eig = SymEigen(np.array([1.0, -0.5]), np.eye(2))
        with pytest.raises(ValueError, match="not PSD"):
            entropy_terms(eig)

    def test_round_off_negative_clamped(self):
        eig = SymEigen(np.array([1.0, -1e-12]), np.eye(2))
        np.testing.assert_allclose(entropy_terms(eig), [0.25, 0.0])

    def test_ones_length_checked(self):
        with pytest.raises(ValueError, match="length"):
            entropy_terms(SymEigen(np.ones(2), np.eye(2)), np.ones(3))

    def test_ties_lower_index(self):
        assert list(rank_by_entropy([1.0, 2.0, 2.0, 0.5], 2)) == [1, 2]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 8))
    def test_nonnegative_and_complete_on_psd(self, seed, n):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((n, n + 2))
        C = A @ A.T
        terms = entropy_terms(eigh_desc(C))
        assert np.all(terms >= 0)
        assert abs(terms.sum() - C.sum() / n**2) <= 1e-8 * max(1.0, np.abs(C).sum())


class TestTwoD:
    def test_covariance_matches_columns(self, faces):
        # oracle: every column of every centered image as an r-vector sample
        _, eig, shape = image_eigensystem(faces.images)
        F = faces.images
        cols = columns_of(F - F.mean(axis=0))
        C = cols.T @ cols / len(faces)
        assert shape == (24, 24)
        np.testing.assert_allclose(eig.reconstruct(), C, atol=1e-12)

    def test_transform_shape_and_values(self, faces):
        m = fit_2dpca(faces, 3)
        Y = m.transform(faces)
        assert Y.shape == (len(faces), 3, 18)
        F = faces.images
        np.testing.assert_allclose(Y[4], m.components.T @ (F[4] - F.mean(axis=0)), atol=1e-13)

    def test_orl_shaped_eigenproblem(self):
        F = np.random.default_rng(0).random((20, 112, 92))
        assert fit_2dpca(F, 5).eigenproblem_shape == (112, 112)

    def test_k_bounded_by_rows(self, faces):
        fit_2dpca(faces, 24)
        with pytest.raises(ValueError, match="out of range"):
            fit_2dpca(faces, 25)

    def test_2deca_cancellation(self):
        # images with a single column reduce 2DECA to ECA
        X, e1, e2 = cancellation_data()
        m = fit_2deca(X[:, :, None], 1)
        assert abs(m.components[:, 0] @ e2) == pytest.approx(1.0)
        assert abs(fit_2dpca(X[:, :, None], 1).components[:, 0] @ e1) == pytest.approx(1.0)

    def test_identical_images(self):
        with pytest.raises(ZeroCovarianceError):
            fit_2deca(np.ones((3, 4, 4)), 1)

    def test_image_shape_checked(self, faces):
        m = fit_2dpca(faces, 2)
        with pytest.raises(ValueError, match="shape"):
            m.transform(np.zeros((1, 10, 10)))


class TestHelpers:
    def test_with_prefix(self, faces):
        m = fit_eca(faces, 6)
        p = with_prefix(m, 3)
        np.testing.assert_array_equal(p.components, m.components[:, :3])
        np.testing.assert_array_equal(p.selected, m.selected[:3])
        with pytest.raises(ValueError):
            with_prefix(m, 7)

    def test_project_labels(self, faces):
        fs = project(fit_pca(faces, 4), faces)
        assert len(fs) == len(faces) and list(fs.labels) == list(faces.labels)
        assert project(fit_pca(faces, 4), vectorize(faces)[0]).labels[-1] == len(faces) - 1


class TestEstimators:
    @pytest.mark.parametrize("cls", [PCA, ECA])
    def test_vector_attributes(self, cls, faces):
        X = vectorize(faces)[0]
        est = cls(n_components=4).fit(X)
        assert est.components_.shape == (4, X.shape[1])
        assert est.n_features_in_ == X.shape[1]
        assert est.fit_transform(X).shape == (len(X), 4)

    @pytest.mark.parametrize("cls", [TwoDPCA, TwoDECA])
    def test_image_attributes(self, cls, faces):
        est = cls(n_components=2).fit(faces.images)
        assert est.components_.shape == (2, 24)
        assert est.transform(faces.images).shape == (len(faces), 2, 18)

    def test_image_estimator_rejects_vectors(self):
        with pytest.raises(ValueError, match="rows, cols"):
            TwoDPCA(1).fit(np.zeros((3, 4)))

    def test_matches_functional(self, faces):
        est = ECA(n_components=5).fit(faces)
        np.testing.assert_array_equal(est.model_.components, fit_eca(faces, 5).components)
