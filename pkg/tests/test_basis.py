import numpy as np
import pytest

from proprpca.basis import (
    build_design,
    eval_design_at,
    select_knots,
    tps_basis,
    tps_radial,
)
from proprpca.data import SiteFrame
from proprpca.exceptions import (
    CollinearDesign,
    DuplicateKnots,
    SchemaMismatch,
    TooManyKnots,
)

from conftest import random_frame


class TestSelectKnots:
    def test_saturation_returns_all_sites(self, rng):
        coords = rng.uniform(0, 10, size=(7, 2))
        knots = select_knots(coords, 7, seed=0)
        assert sorted(map(tuple, knots)) == sorted(map(tuple, coords))

    def test_square_corners(self):
        corners = np.array([[0.0, 0.0], [0.0, 9.0], [9.0, 0.0], [9.0, 9.0]])
        knots = select_knots(corners, 4, seed=3)
        assert sorted(map(tuple, knots)) == sorted(map(tuple, corners))

    def test_deterministic(self, rng):
        coords = rng.uniform(0, 100, size=(100, 2))
        a = select_knots(coords, 10, seed=42)
        b = select_knots(coords, 10, seed=42)
        np.testing.assert_array_equal(a, b)

    def test_too_many_knots(self, rng):
        with pytest.raises(TooManyKnots):
            select_knots(rng.uniform(0, 1, (5, 2)), 6, seed=0)


class TestTpsRadial:
    def test_zero_at_origin(self):
        assert tps_radial(np.array([0.0]))[0] == 0.0

    def test_zero_at_unit_distance(self):
        assert abs(tps_radial(np.array([1.0]))[0]) < 1e-15

    def test_scalar_formula(self):
        np.testing.assert_allclose(
            tps_radial(np.array([2.0]))[0], 4.0 * np.log(2.0), rtol=1e-12
        )


class TestTpsBasis:
    def test_duplicate_knots_rejected(self):
        knots = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DuplicateKnots):
            tps_basis(np.array([[0.5, 0.5], [2.0, 2.0]]), knots)

    def test_columns_standardized(self, rng):
        coords = rng.uniform(0, 50, size=(40, 2))
        knots = select_knots(coords, 5, seed=1)
        b = tps_basis(coords, knots)
        np.testing.assert_allclose(b.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(b.std(axis=0), 1.0, atol=1e-10)

    def test_translation_invariant_raw(self, rng):
        from proprpca.basis import _tps_raw

        coords = rng.uniform(0, 50, size=(30, 2))
        knots = select_knots(coords, 6, seed=2)
        shift = np.array([123.4, -56.7])
        raw = _tps_raw(coords, knots)
        raw_shifted = _tps_raw(coords + shift, knots + shift)
        np.testing.assert_allclose(raw, raw_shifted, atol=1e-10)


class TestBuildDesign:
    def test_zero_splines(self, rng):
        frame = random_frame(rng, 30, k=2)
        d = build_design(frame, 0, seed=0)
        assert d.width == 2 and d.k_tilde == 0
        np.testing.assert_allclose(d.z.mean(axis=0), 0.0, atol=1e-10)

    def test_zero_covariates(self, rng):
        frame = random_frame(rng, 30, k=0)
        d = build_design(frame, 5, seed=0)
        assert d.width == 5 and d.k == 0

    def test_full_size_and_statistics(self, rng):
        frame = random_frame(rng, 400, k=3)
        d = build_design(frame, 10, seed=7)
        assert d.z.shape == (400, 13)
        np.testing.assert_allclose(d.z.mean(axis=0), 0.0, atol=1e-10)
        np.testing.assert_allclose(d.z.std(axis=0), 1.0, atol=1e-10)

    def test_deterministic(self, rng):
        frame = random_frame(rng, 60, k=1)
        a = build_design(frame, 8, seed=9)
        b = build_design(frame, 8, seed=9)
        np.testing.assert_array_equal(a.z, b.z)
        np.testing.assert_array_equal(a.knots, b.knots)

    def test_collinear_rejected(self):
        coords = np.arange(20, dtype=float).reshape(10, 2)
        covars = np.column_stack([np.arange(10.0), np.arange(10.0) * 2.0 + 1e-9])
        with pytest.raises(CollinearDesign):
            build_design(SiteFrame(coords, covars), 0, seed=0)


class TestEvalDesignAt:
    def test_training_frame_roundtrip(self, rng):
        frame = random_frame(rng, 50, k=2)
        d = build_design(frame, 6, seed=4)
        z2 = eval_design_at(d, frame)
        np.testing.assert_allclose(z2, d.z, atol=1e-12)

    def test_recomputation_oracle(self, rng):
        from proprpca.basis import _tps_raw

        frame = random_frame(rng, 50, k=2)
        d = build_design(frame, 6, seed=4)
        new = random_frame(rng, 9, k=2)
        z_new = eval_design_at(d, new)
        expected_cov = (new.covars - d.covar_means) / d.covar_sds
        expected_spl = (_tps_raw(new.coords, d.knots) - d.spline_means) / d.spline_sds
        np.testing.assert_allclose(z_new, np.hstack([expected_cov, expected_spl]), atol=1e-12)

    def test_schema_mismatch(self, rng):
        frame = random_frame(rng, 40, k=2)
        d = build_design(frame, 4, seed=0)
        with pytest.raises(SchemaMismatch):
            eval_design_at(d, random_frame(rng, 5, k=3))
