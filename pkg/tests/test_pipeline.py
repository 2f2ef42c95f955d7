import numpy as np
import pytest

from proprpca.data import ObservedMatrix, SiteFrame
from proprpca.exceptions import ConfigError, NonpositiveMass, NoSurvivors
from proprpca.pipeline import (
    ExperimentSpec,
    build_experiment_spec,
    filter_gis_covariates,
    gis_pca,
    parse_config_file,
    preprocess_components,
    run_experiment,
    run_loocv,
    summarize_results,
    true_test_scores,
)
from proprpca.simulate import ScenarioConfig


class TestExperimentSpec:
    def test_missing_with_pca_requires_imputer(self):
        sc = ScenarioConfig(kind="three_pollutant_corr", missing="mcar:0.3")
        with pytest.raises(ConfigError, match="soft_impute"):
            ExperimentSpec(scenario=sc, methods=("pca",), imputer="none")

    def test_missing_with_spline_needs_no_imputer(self):
        sc = ScenarioConfig(kind="three_pollutant_corr", missing="mcar:0.3")
        spec = ExperimentSpec(scenario=sc, methods=("proprpca_spline",))
        assert spec.imputer == "none"

    def test_unknown_method_rejected(self):
        sc = ScenarioConfig(kind="three_pollutant_corr")
        with pytest.raises(ConfigError, match="unknown methods"):
            ExperimentSpec(scenario=sc, methods=("nope",))

    def test_bad_replications(self):
        sc = ScenarioConfig(kind="three_pollutant_corr")
        with pytest.raises(ConfigError):
            ExperimentSpec(scenario=sc, replications=0)


class TestConfigParsing:
    def test_parse_file_and_build(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            "# comment line\n"
            "scenario=three_pollutant_corr\n"
            "missing=mcar:0.35\n"
            "methods=proprpca_spline\n"
            "replications=3\n"
            "seed=7\n"
            "q=1\n"
        )
        spec = build_experiment_spec(parse_config_file(str(cfg)))
        assert spec.scenario.missing == "mcar:0.35"
        assert spec.replications == 3
        assert spec.base_seed == 7

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            build_experiment_spec({"scenario": "three_pollutant_corr", "bogus": "1"})

    def test_missing_scenario_rejected(self):
        with pytest.raises(ConfigError, match="scenario"):
            build_experiment_spec({"q": "1"})

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="integer"):
            build_experiment_spec(
                {"scenario": "three_pollutant_corr", "replications": "many"}
            )


def small_spec(**kw):
    defaults = dict(
        scenario=ScenarioConfig(
            kind="three_pollutant_corr", grid_size=40, n_train=60, n_test=25
        ),
        methods=("pca", "predpca"),
        q=1,
        replications=3,
        base_seed=99,
        k_tilde=6,
        uk_nm_maxiter=40,
        workers=1,
    )
    defaults.update(kw)
    return ExperimentSpec(**defaults)


class TestRunExperiment:
    def test_row_counts_and_schema(self):
        agg = run_experiment(small_spec())
        assert len(agg.results) == 3 * 2  # reps x methods x q
        assert len(agg.loadings) == 3 * 2 * 3  # ... x p
        assert len(agg.similarity) == 3  # one pair, q=1
        assert not agg.failures
        assert {r[1] for r in agg.results} == {"pca", "predpca"}

    def test_deterministic_given_seed(self):
        a = run_experiment(small_spec())
        b = run_experiment(small_spec())
        assert a.results == b.results
        assert a.loadings == b.loadings
        assert a.summary == b.summary

    def test_missing_arm_with_imputer(self):
        spec = small_spec(
            scenario=ScenarioConfig(
                kind="three_pollutant_corr",
                grid_size=40,
                n_train=60,
                n_test=25,
                missing="mcar:0.2",
            ),
            methods=("predpca", "proprpca_spline"),
            imputer="soft_impute",
        )
        agg = run_experiment(spec)
        assert len(agg.results) == 3 * 2
        assert not agg.failures

    def test_outputs_written(self, tmp_path):
        spec = small_spec(output_dir=str(tmp_path / "out"))
        run_experiment(spec)
        for name in ("results.csv", "summary.csv", "loadings.csv", "similarity.csv", "timings.csv"):
            assert (tmp_path / "out" / name).exists()

    def test_summary_matches_results(self):
        agg = run_experiment(small_spec())
        summary = summarize_results(agg.results)
        med = [s for s in summary if s[0] == "pca"][0][3]
        vals = agg.r2_values("pca", 1)
        assert med == pytest.approx(np.median(vals))


class TestTrueTestScores:
    def test_orthonormal_loadings_reduce_to_projection(self, rng):
        x = rng.standard_normal((10, 4))
        v, _ = np.linalg.qr(rng.standard_normal((4, 2)))
        u = true_test_scores(x, v)
        np.testing.assert_allclose(u, x @ v, atol=1e-10)

    def test_sequential_deflation_for_oblique_loadings(self, rng):
        x = rng.standard_normal((10, 4))
        v = rng.standard_normal((4, 2))
        v /= np.linalg.norm(v, axis=0)
        u = true_test_scores(x, v)
        u0 = x @ v[:, 0]
        x1 = x - np.outer(u0, v[:, 0])
        np.testing.assert_allclose(u[:, 1], x1 @ v[:, 1], atol=1e-12)


class TestPreprocessComponents:
    def test_log_proportion(self):
        out = preprocess_components(np.array([[2.0, 4.0], [5.0, 5.0]]), np.array([20.0, 10.0]))
        assert out.values[0, 0] == pytest.approx(np.log(0.1))
        assert out.values[1, 1] == pytest.approx(np.log(0.5))

    def test_component_equal_total_gives_zero(self):
        out = preprocess_components(
            np.array([[20.0, 2.0], [5.0, 1.0]]), np.array([20.0, 5.0])
        )
        assert out.values[0, 0] == pytest.approx(0.0)

    def test_missing_stays_missing(self):
        comp = np.array([[2.0, np.nan], [3.0, 4.0], [1.0, 5.0]])
        out = preprocess_components(comp, np.array([10.0, 10.0, 10.0]))
        assert not out.mask[0, 1]
        assert out.mask[1, 1]

    def test_nonpositive_component_rejected(self):
        with pytest.raises(NonpositiveMass):
            preprocess_components(np.array([[0.0, 1.0], [2.0, 1.0]]), np.array([5.0, 5.0]))

    def test_nonpositive_total_rejected(self):
        with pytest.raises(NonpositiveMass):
            preprocess_components(np.array([[1.0, 1.0], [2.0, 1.0]]), np.array([5.0, 0.0]))


class TestFilterGisCovariates:
    def make_fixture(self, rng):
        n = 100
        good = rng.standard_normal((n, 6))
        all_missing = np.full((n, 1), np.nan)
        mostly_const = np.where(rng.random((n, 1)) < 0.85, 1.5, rng.standard_normal((n, 1)))
        outlier_heavy = rng.standard_normal((n, 1))
        outlier_heavy[:3, 0] = 100.0  # 3% far outliers
        landuse_low = rng.uniform(0, 8, size=(n, 1))  # max below 10
        covars = np.hstack([good, all_missing, mostly_const, outlier_heavy, landuse_low])
        land_use = np.zeros(10, dtype=bool)
        land_use[9] = True
        return covars, land_use

    def test_exactly_the_violators_removed(self, rng):
        covars, land_use = self.make_fixture(rng)
        surv, kept, report = filter_gis_covariates(covars, land_use)
        assert kept == [0, 1, 2, 3, 4, 5]
        assert surv.shape == (100, 6)
        rules = dict(report)
        assert rules[6] == "all_missing"
        assert rules[7] == "mostly_constant"
        assert rules[8] == "outlier_heavy"
        assert rules[9] == "low_max_landuse"

    def test_constant_column_removed(self, rng):
        covars = np.hstack([rng.standard_normal((50, 2)), np.ones((50, 1))])
        _, kept, report = filter_gis_covariates(covars)
        assert kept == [0, 1]
        assert report == [(2, "mostly_constant")]

    def test_no_survivors(self):
        with pytest.raises(NoSurvivors):
            filter_gis_covariates(np.ones((30, 2)))


class TestGisPca:
    def test_orthonormal_input_spans_same_subspace(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
        scores = gis_pca(q * rng.uniform(1, 2, 5), n_components=5)
        # principal cosines in cosine space: arccos would amplify roundoff
        qa, _ = np.linalg.qr(scores)
        qb, _ = np.linalg.qr(q - q.mean(axis=0))
        s = np.linalg.svd(qa.T @ qb, compute_uv=False)
        assert 1.0 - s.min() < 1e-12

    def test_five_columns_explain_everything(self, rng):
        x = rng.standard_normal((30, 5))
        scores = gis_pca(x, n_components=5)
        z = (x - x.mean(0)) / x.std(0)
        np.testing.assert_allclose(
            np.sum(scores**2), np.sum(z**2), rtol=1e-10
        )

    def test_matches_svd_oracle(self, rng):
        x = rng.standard_normal((100, 20))
        scores = gis_pca(x, n_components=5)
        z = (x - x.mean(0)) / x.std(0)
        u, s, _ = np.linalg.svd(z, full_matrices=False)
        np.testing.assert_allclose(np.abs(scores), np.abs(u[:, :5] * s[:5]), atol=1e-8)

    def test_too_few_columns(self, rng):
        with pytest.raises(ValueError):
            gis_pca(rng.standard_normal((30, 3)), n_components=5)


class TestRunLoocv:
    def realizable_dataset(self, rng, n=26, k=2):
        coords = rng.uniform(0, 50, size=(n, 2))
        covars = rng.standard_normal((n, k))
        u = 2.0 * covars[:, 0] - (covars[:, 1] if k > 1 else 0.0)
        v0 = np.array([3.0, 1.0, -2.0])
        v0 = v0 / np.linalg.norm(v0)
        x = np.outer(u, v0)
        x += 1e-6 * rng.standard_normal(x.shape)  # break exact degeneracy
        return ObservedMatrix(x), SiteFrame(coords, covars)

    def test_realizable_case_pooled_r2(self, rng):
        data, frame = self.realizable_dataset(rng)
        rows, summary, failures = run_loocv(
            data, frame, ("pca",), q=1, k_tilde=4, uk_nm_maxiter=30
        )
        assert not failures
        assert len(rows) == 26
        r2 = summary[0][3]
        assert r2 > 0.99

    def test_permuted_negative_control(self, rng):
        # permutation null: scores exchangeable over sites (equivalently iid
        # against the frame), so pooled predictions carry no signal; needs
        # many folds relative to the kriging design width, since all folds
        # share one spurious regression with chance R^2 ~ columns/folds
        n = 220
        coords = rng.uniform(0, 50, size=(n, 2))
        u = rng.standard_normal(n)
        v0 = np.array([3.0, 1.0, -2.0])
        v0 = v0 / np.linalg.norm(v0)
        x = np.outer(u, v0) + 1e-6 * rng.standard_normal((n, 3))
        rows, summary, failures = run_loocv(
            ObservedMatrix(x), SiteFrame(coords), ("pca",), q=1, k_tilde=4,
            uk_phi_starts=3, uk_nm_maxiter=25,
        )
        assert summary[0][3] < 0.05

    def test_fold_count_equals_complete_sites(self, rng):
        data, frame = self.realizable_dataset(rng, n=24)
        vals = data.values.copy()
        vals[0, 0] = np.nan  # one incomplete site
        data2 = ObservedMatrix(vals)
        rows, summary, _ = run_loocv(
            data2, frame, ("proprpca_spline",), q=1, k_tilde=4, uk_nm_maxiter=30
        )
        assert summary[0][2] == 23

    def test_too_few_complete_sites(self, rng):
        data, frame = self.realizable_dataset(rng, n=10)
        with pytest.raises(ConfigError):
            run_loocv(data, frame, ("pca",), q=1)

    def test_full_training_uses_incomplete_sites(self, rng):
        # 'full' training keeps incomplete sites: pca folds then run on the
        # imputed matrix and still recover the realizable structure
        data, frame = self.realizable_dataset(rng, n=30)
        vals = data.values.copy()
        vals[:4, 0] = np.nan
        data2 = ObservedMatrix(vals)
        rows, summary, failures = run_loocv(
            data2, frame, ("pca",), q=1, training="full",
            k_tilde=4, uk_nm_maxiter=30,
        )
        assert not failures
        assert summary[0][2] == 26  # folds = complete sites only
        assert summary[0][3] > 0.9

    def test_invalid_training_mode(self, rng):
        data, frame = self.realizable_dataset(rng)
        with pytest.raises(ConfigError):
            run_loocv(data, frame, ("pca",), q=1, training="bogus")
