import numpy as np
import pytest

from proprpca.data import ObservedMatrix
from proprpca.exceptions import NotComplete
from proprpca.reducers import FitOptions, RankOnePCA, pca_fit

from conftest import random_observed


def principal_angle(a, b):
    """Largest principal angle between the column spaces of a and b."""
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    s = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.arccos(np.clip(s.min(), -1.0, 1.0))


class TestPcaFit:
    def test_axis_aligned_variance(self):
        # column means already zero; variance concentrated on the first axis
        x = ObservedMatrix(np.array([[3.0, 0.0], [-3.0, 0.0], [0.0, 1.0], [0.0, -1.0]]))
        res = pca_fit(x, FitOptions(q=1))
        v = res.components[0].loading
        np.testing.assert_allclose(np.abs(v), [1.0, 0.0], atol=1e-10)
        np.testing.assert_allclose(res.components[0].score, [3.0, -3.0, 0.0, 0.0], atol=1e-10)

    def test_reconstruction_equals_tail_singular_energy(self, rng):
        x = rng.standard_normal((20, 6))
        res = pca_fit(ObservedMatrix(x), FitOptions(q=2))
        xc = x - res.column_means
        recon = res.scores @ res.loadings.T
        tail = np.linalg.svd(xc, compute_uv=False)[2:]
        np.testing.assert_allclose(
            np.linalg.norm(xc - recon), np.sqrt(np.sum(tail**2)), atol=1e-8
        )

    def test_matches_svd_oracle_on_50x8(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            x = rng.standard_normal((50, 8))
            res = pca_fit(ObservedMatrix(x), FitOptions(q=3))
            xc = x - res.column_means
            _, _, vt = np.linalg.svd(xc, full_matrices=False)
            assert principal_angle(res.loadings, vt[:3].T) < 1e-6

    def test_loadings_orthonormal(self, rng):
        x = rng.standard_normal((40, 7))
        res = pca_fit(ObservedMatrix(x), FitOptions(q=4))
        v = res.loadings
        np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-8)

    def test_unit_norm_on_random_instances(self):
        for seed in range(25):
            rng = np.random.default_rng(1000 + seed)
            x = rng.standard_normal((rng.integers(10, 40), rng.integers(3, 8)))
            res = pca_fit(ObservedMatrix(x), FitOptions(q=2))
            for comp in res.components:
                assert abs(np.linalg.norm(comp.loading) - 1.0) < 1e-10

    def test_sign_canonicalization(self, rng):
        x = rng.standard_normal((30, 5))
        res = pca_fit(ObservedMatrix(x), FitOptions(q=2))
        for comp in res.components:
            assert comp.loading[np.argmax(np.abs(comp.loading))] > 0

    def test_missing_data_rejected(self, rng):
        x = random_observed(rng, 20, 4, miss=0.2)
        with pytest.raises(NotComplete):
            pca_fit(x, FitOptions(q=1))

    def test_score_is_projection(self, rng):
        x = rng.standard_normal((25, 4))
        res = pca_fit(ObservedMatrix(x), FitOptions(q=1))
        xc = x - res.column_means
        np.testing.assert_allclose(
            res.components[0].score, xc @ res.components[0].loading, atol=1e-12
        )


class TestRankOnePCAEstimator:
    def test_fit_transform_matches_scores(self, rng):
        x = rng.standard_normal((30, 5))
        est = RankOnePCA(n_components=2)
        scores = est.fit_transform(x)
        np.testing.assert_array_equal(scores, est.scores_)
        assert est.components_.shape == (2, 5)

    def test_transform_on_training_data(self, rng):
        x = rng.standard_normal((30, 5))
        est = RankOnePCA(n_components=2).fit(x)
        np.testing.assert_allclose(est.transform(x), est.scores_, atol=1e-10)

    def test_get_params_roundtrip(self):
        est = RankOnePCA(n_components=3, tol=1e-8)
        params = est.get_params()
        assert params["n_components"] == 3 and params["tol"] == 1e-8
        est2 = RankOnePCA(**params)
        assert est2.n_components == 3
