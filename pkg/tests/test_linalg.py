import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnreg.exceptions import (
    DimensionMismatchError,
    NonSymmetricError,
    SingularGramError,
)
from attnreg.linalg import (
    DesignMatrix,
    factor_scores,
    ols_fit,
    ols_predict_attention,
    spectral_embedding,
    weight_decomposition,
)


class TestSpectralEmbedding:
    def test_identity_gram(self):
        emb = spectral_embedding(np.eye(2))
        np.testing.assert_allclose(emb.eigenvalues, [1.0, 1.0])
        # equal eigenvalues leave column order free; embedding must still whiten
        np.testing.assert_allclose(emb.embedding @ emb.embedding.T, np.eye(2),
                                   atol=1e-12)

    def test_diagonal_gram(self):
        emb = spectral_embedding(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(emb.eigenvalues, [4.0, 1.0])
        np.testing.assert_allclose(np.abs(emb.embedding), np.diag([0.5, 1.0]), atol=1e-12)

    def test_whitening_identity(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(10, 3))
        G = A.T @ A
        emb = spectral_embedding(G)
        np.testing.assert_allclose(emb.embedding.T @ G @ emb.embedding, np.eye(3),
                                   atol=1e-8)

    def test_reconstruction(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(12, 4))
        G = A.T @ A
        emb = spectral_embedding(G)
        recon = emb.eigenvectors @ np.diag(emb.eigenvalues) @ emb.eigenvectors.T
        np.testing.assert_allclose(recon, G, rtol=1e-8, atol=1e-8)

    def test_orthonormal_eigenvectors(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(20, 5))
        emb = spectral_embedding(A.T @ A)
        np.testing.assert_allclose(emb.eigenvectors.T @ emb.eigenvectors, np.eye(5),
                                   atol=1e-10)
        assert np.all(np.diff(emb.eigenvalues) <= 0)

    def test_asymmetric_raises(self):
        with pytest.raises(NonSymmetricError):
            spectral_embedding(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_singular_raises(self):
        with pytest.raises(SingularGramError):
            spectral_embedding(np.diag([1.0, 0.0]))

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(15, 4))
        G = A.T @ A
        e1 = spectral_embedding(G)
        e2 = spectral_embedding(G.copy())
        np.testing.assert_array_equal(e1.eigenvectors, e2.eigenvectors)
        for col in e1.eigenvectors.T:
            assert col[np.argmax(np.abs(col))] > 0


class TestFactorScores:
    def test_identity(self):
        emb = spectral_embedding(np.eye(3))
        F = factor_scores(np.eye(3), emb)
        np.testing.assert_allclose(F @ F.T, np.eye(3), atol=1e-12)

    def test_train_scores_orthonormal(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 3))
        emb = spectral_embedding(X.T @ X)
        F = factor_scores(X, emb)
        np.testing.assert_allclose(F.T @ F, np.eye(3), atol=1e-8)

    def test_test_scores_not_orthonormal(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(20, 3))
        emb = spectral_embedding(X.T @ X)
        F_test = factor_scores(rng.normal(size=(5, 3)), emb)
        assert np.all(np.isfinite(F_test))
        assert not np.allclose(F_test.T @ F_test, np.eye(3))

    def test_dimension_mismatch(self):
        emb = spectral_embedding(np.eye(3))
        with pytest.raises(DimensionMismatchError):
            factor_scores(np.ones((4, 2)), emb)


class TestOlsFit:
    def test_single_column_through_origin(self):
        fit = ols_fit(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]))
        np.testing.assert_allclose(fit.coefficients, [1.0])

    def test_intercept_only_is_mean(self):
        fit = ols_fit(np.ones((4, 1)), np.array([1.0, 2.0, 3.0, 4.0]))
        np.testing.assert_allclose(fit.coefficients, [2.5])

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(50, 4))
        y = rng.normal(size=50)
        fit = ols_fit(X, y)
        expected = np.linalg.solve(X.T @ X, X.T @ y)
        np.testing.assert_allclose(fit.coefficients, expected, rtol=1e-10, atol=1e-12)
        # normal equations residual
        np.testing.assert_allclose(fit.gram @ fit.coefficients, X.T @ y,
                                   rtol=1e-8)

    def test_underdetermined_raises(self):
        with pytest.raises(SingularGramError):
            ols_fit(np.ones((2, 3)), np.ones(2))


class TestOlsPredictAttention:
    def test_exact_fit_through_origin(self):
        pred, _ = ols_predict_attention(np.array([[3.0]]), np.array([[1.0], [2.0]]),
                                        np.array([1.0, 2.0]))
        np.testing.assert_allclose(pred, [3.0])

    def test_matches_direct_ols(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(30, 3))
        y = rng.normal(size=30)
        Xt = rng.normal(size=(7, 3))
        pred, weights = ols_predict_attention(Xt, X, y)
        beta = np.linalg.solve(X.T @ X, X.T @ y)
        np.testing.assert_allclose(pred, Xt @ beta, rtol=1e-10, atol=1e-12)
        assert weights.values.shape == (7, 30)
        assert weights.activation == "identity"

    def test_hat_rows_sum_to_one_with_intercept(self):
        rng = np.random.default_rng(8)
        X = np.column_stack([np.ones(25), rng.normal(size=(25, 3))])
        y = rng.normal(size=25)
        _, weights = ols_predict_attention(X, X, y)
        np.testing.assert_allclose(weights.values.sum(axis=1), np.ones(25), atol=1e-8)

    def test_weight_symmetry(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(12, 3))
        _, weights = ols_predict_attention(X, X, np.zeros(12))
        np.testing.assert_allclose(weights.values, weights.values.T, atol=1e-10)

    @settings(deadline=None, max_examples=40)
    @given(st.integers(0, 10_000), st.integers(1, 6), st.integers(0, 30))
    def test_equivalence_property(self, seed, p, extra):
        rng = np.random.default_rng(seed)
        n = p + 2 + extra
        X = rng.normal(size=(n, p))
        y = rng.normal(size=n)
        Xt = rng.normal(size=(4, p))
        try:
            pred, _ = ols_predict_attention(Xt, X, y)
        except SingularGramError:
            return
        beta = np.linalg.solve(X.T @ X, X.T @ y)
        direct = Xt @ beta
        np.testing.assert_allclose(pred, direct,
                                   rtol=1e-8, atol=1e-8 * max(1.0, np.abs(direct).max()))


class TestWeightDecomposition:
    def test_orthogonal(self):
        scale, cosine, weight = weight_decomposition([1.0, 0.0], [0.0, 1.0])
        assert cosine == 0.0
        assert weight == 0.0

    def test_parallel_unit(self):
        scale, cosine, weight = weight_decomposition([1.0, 0.0], [1.0, 0.0])
        assert (scale, cosine, weight) == (1.0, 1.0, 1.0)

    def test_hand_value(self):
        scale, cosine, weight = weight_decomposition([3.0, 4.0], [3.0, 4.0])
        assert scale == pytest.approx(25.0)
        assert cosine == pytest.approx(1.0)
        assert weight == pytest.approx(25.0)

    def test_zero_norm_convention(self):
        scale, cosine, weight = weight_decomposition([0.0, 0.0], [1.0, 2.0])
        assert scale == 0.0 and cosine == 0.0 and weight == 0.0

    @settings(deadline=None, max_examples=50)
    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=6),
           st.integers(0, 10_000))
    def test_scale_times_cosine_is_inner(self, q, seed):
        rng = np.random.default_rng(seed)
        k = rng.normal(size=len(q))
        q = np.asarray(q)
        scale, cosine, weight = weight_decomposition(q, k)
        assert weight == pytest.approx(float(q @ k), abs=1e-12)
        if scale > 0:
            assert scale * cosine == pytest.approx(weight, rel=1e-12, abs=1e-12)


class TestDesignMatrix:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            DesignMatrix(np.array([[np.nan]]))

    def test_shape_properties(self):
        d = DesignMatrix(np.ones((3, 2)), has_intercept=False)
        assert d.n_rows == 3 and d.n_cols == 2
