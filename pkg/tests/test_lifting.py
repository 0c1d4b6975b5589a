import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from iokoopman import _kernels
from iokoopman.embedding import EmbeddedState, TimeSeriesDataset, build_embedded_sequence
from iokoopman.errors import ConfigMismatch, DimensionMismatch
from iokoopman.lifting import (FULL_ZETA, OUTPUT_ONLY, LiftingConfig, Variant, bilinear_term,
                               lift_scheduling, lift_state, polyharmonic_rbf, polynomial_lift,
                               random_configs, rbf_features)

vec = lambda n: arrays(float, n, elements=st.floats(-10, 10, allow_nan=False))


def state(n_y=6, n_w=8, seed=0):
    rng = np.random.default_rng(seed)
    return EmbeddedState(rng.normal(size=n_y), rng.normal(size=n_w), 2)


class TestRbf:
    def test_values(self):
        assert polyharmonic_rbf([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert polyharmonic_rbf([1.0, 0.0], [0.0, 0.0]) == 0.0
        assert polyharmonic_rbf([math.e, 0.0], [0.0, 0.0]) == pytest.approx(math.e, rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            polyharmonic_rbf([1.0, 2.0], [1.0])

    def test_continuity_at_zero(self):
        x = np.array([1e-8, 0.0, 0.0])
        assert abs(polyharmonic_rbf(x, np.zeros(3))) < 1e-6
        assert np.isfinite(polyharmonic_rbf(np.zeros(3), np.zeros(3)))

    @given(vec(4), vec(4))
    def test_feature_matrix_matches_scalar(self, x, c):
        F = rbf_features(x[None, :], np.vstack([c, x]))
        assert F[0, 0] == pytest.approx(polyharmonic_rbf(x, c), rel=1e-12, abs=1e-12)
        assert F[0, 1] == 0.0


class TestPolynomial:
    def test_examples(self):
        np.testing.assert_array_equal(polynomial_lift([2.0], 3), [2.0, 4.0, 8.0])
        assert not np.any(polynomial_lift([0.0, 0.0], 7))
        out = polynomial_lift([1.0], 10)
        assert out.size == 10 and np.all(out == 1.0)

    def test_grouped_by_power(self):
        np.testing.assert_array_equal(polynomial_lift([2.0, 3.0], 3), [2, 3, 4, 9, 8, 27])

    def test_order_check(self):
        with pytest.raises(ConfigMismatch):
            LiftingConfig.polynomial(1)


class TestBilinear:
    def test_examples(self):
        np.testing.assert_array_equal(bilinear_term([1.0, 2.0], [3.0]), [3.0, 6.0])
        np.testing.assert_array_equal(bilinear_term([1.0, 2.0], [3.0, 4.0]), [3, 6, 4, 8])
        assert not np.any(bilinear_term([1.0, 2.0, 3.0], [0.0, 0.0]))

    @given(vec(5), vec(3), vec(3), st.floats(-5, 5), st.floats(-5, 5))
    def test_linear_in_input(self, z, w1, w2, a, b):
        lhs = bilinear_term(z, a * w1 + b * w2)
        rhs = a * bilinear_term(z, w1) + b * bilinear_term(z, w2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))

    @given(arrays(float, (6, 4), elements=st.floats(-5, 5)), arrays(float, (6, 2), elements=st.floats(-5, 5)))
    def test_rowwise_matches_vector(self, Z, W):
        rows = bilinear_term(Z, W)
        for i in range(len(Z)):
            np.testing.assert_array_equal(rows[i], bilinear_term(Z[i], W[i]))


class TestLiftState:
    def test_hdmd_identity(self):
        s = state()
        np.testing.assert_array_equal(lift_state(s, LiftingConfig.identity(), "HDMD"), s.zeta)

    def test_gblk_dimensions(self):
        s = EmbeddedState(np.arange(6.0), np.arange(8.0), 2)
        psi, phi = random_configs("GBLK", 14, 6, 5, 5, np.random.default_rng(1))
        z = lift_state(s, psi, "GBLK")
        assert z.size == 19
        np.testing.assert_array_equal(z[:14], s.zeta)
        assert lift_scheduling(s, phi, "GBLK").size == 19

    def test_center_dimension_mismatch(self):
        with pytest.raises(ConfigMismatch):
            lift_state(state(), LiftingConfig.rbf(np.zeros((3, 5))), "LK")
        with pytest.raises(ConfigMismatch):
            lift_state(state(), LiftingConfig.rbf(np.zeros((3, 14))), "GBLK")

    def test_variant_mismatch(self):
        with pytest.raises(ConfigMismatch):
            lift_state(state(), LiftingConfig.identity(), "LK")
        with pytest.raises(ConfigMismatch):
            lift_state(state(), LiftingConfig.rbf(np.zeros((3, 14)), OUTPUT_ONLY), "BLK")

    @pytest.mark.parametrize("variant", list(Variant))
    def test_leading_block_is_zeta(self, variant):
        s = state(seed=3)
        psi, _ = random_configs(variant, 14, 6, 10, 5, np.random.default_rng(2), poly_order=4)
        np.testing.assert_array_equal(lift_state(s, psi, variant)[:14], s.zeta)

    def test_sequence_input(self):
        rng = np.random.default_rng(0)
        data = TimeSeriesDataset(rng.normal(size=(20, 2)), rng.normal(size=(20, 2)), rng.normal(size=(20, 1)))
        seq = build_embedded_sequence(data, 2)
        psi, _ = random_configs("LK", 12, 6, 4, 0, rng)
        Z = lift_state(seq, psi, "LK")
        assert Z.shape == (len(seq), 16)
        np.testing.assert_array_equal(Z[5], lift_state(seq[5], psi, "LK"))

    @given(vec(8), vec(8))
    def test_gblk_ignores_input_history(self, w1, w2):
        y = np.linspace(-1, 1, 6)
        psi, _ = random_configs("GBLK", 14, 6, 5, 5, np.random.default_rng(4))
        a = lift_state(EmbeddedState(y, w1, 2), psi, "GBLK")
        b = lift_state(EmbeddedState(y, w2, 2), psi, "GBLK")
        assert np.array_equal(a[14:], b[14:])


class TestScheduling:
    def test_blk_equals_state_lift(self):
        s = state(seed=5)
        psi, phi = random_configs("BLK", 14, 6, 10, 0, np.random.default_rng(5))
        assert phi is psi
        np.testing.assert_array_equal(lift_scheduling(s, phi, "BLK"), lift_state(s, psi, "BLK"))

    @pytest.mark.parametrize("variant", ["LK", "HDMD"])
    def test_linear_variants_have_none(self, variant):
        with pytest.raises(ConfigMismatch):
            lift_scheduling(state(), LiftingConfig.identity(), variant)

    def test_gblk_scheduling_uses_full_zeta(self):
        psi, phi = random_configs("GBLK", 14, 6, 5, 5, np.random.default_rng(6))
        assert phi.argument == FULL_ZETA and phi.centers.shape == (5, 14)
        a = lift_scheduling(EmbeddedState(np.zeros(6), np.zeros(8), 2), phi, "GBLK")
        b = lift_scheduling(EmbeddedState(np.zeros(6), np.ones(8), 2), phi, "GBLK")
        assert not np.array_equal(a[14:], b[14:])


@pytest.mark.parametrize("variant", list(Variant))
def test_compiled_lift_matches_numpy(variant):
    rng = np.random.default_rng(7)
    s = state(seed=8)
    psi, phi = random_configs(variant, 14, 6, 5, 5, rng, poly_order=5)
    for cfg, name in ((psi, "psi"), (phi, "phi")):
        if cfg is None:
            continue
        ref = (lift_scheduling if name == "phi" else lift_state)(s, cfg, variant)
        kind = {"identity": 0, "polyharmonic_rbf": 1, "polynomial": 2}[cfg.kind]
        out = np.empty(ref.size)
        centers = np.ascontiguousarray(cfg.centers) if cfg.centers.size else np.zeros((0, 0))
        _kernels.lift_into(s.zeta, kind, cfg.arg_dim(14, 6), centers, cfg.polynomial_order, out)
        np.testing.assert_allclose(out, ref, rtol=1e-13, atol=1e-13)


def test_config_dict_round_trip():
    psi, phi = random_configs("GBLK", 14, 6, 5, 5, np.random.default_rng(9))
    back = LiftingConfig.from_dict(psi.to_dict())
    assert back.kind == psi.kind and back.argument == psi.argument
    assert np.array_equal(back.centers, psi.centers)
    with pytest.raises(ValueError):
        psi.centers[0, 0] = 1.0
