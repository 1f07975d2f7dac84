"""Reward schemes and stake transforms."""

import numpy as np
import pytest

from yumalab.interventions import (
    SchemeParams,
    TransformSpec,
    apply_stake_transform,
    bonus_rewards,
    composite_ranks,
    nearest_rank_percentile,
    perf_weighted_rewards,
    unit_rescale,
    whale_penalty,
)
from yumalab.model import Role, ValidationError


class TestSchemeParams:
    def test_defaults(self):
        params = SchemeParams()
        assert params.base_validator_share == 0.25
        assert params.perf_sensitivity == 0.0
        assert params.rank_weight == 1.0
        assert params.trust_bonus == 0.0

    @pytest.mark.parametrize("field,value", [
        ("base_validator_share", 1.5),
        ("rank_weight", -0.1),
        ("perf_sensitivity", -1.0),
        ("trust_bonus", -0.5),
    ])
    def test_validation(self, field, value):
        with pytest.raises(ValidationError):
            SchemeParams(**{field: value})


class TestTransformSpec:
    def test_cap_label(self):
        spec = TransformSpec(kind="cap", cap_percentile=88.0)
        assert spec.label == "cap:88"
        assert spec.param == 88.0

    def test_power_label(self):
        spec = TransformSpec(kind="power", power_exponent=0.5)
        assert spec.label == "power:0.5"

    def test_log_has_no_param(self):
        spec = TransformSpec(kind="log")
        assert spec.label == "log"
        assert spec.param is None

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            TransformSpec(kind="sqrt")

    def test_cap_requires_percentile(self):
        with pytest.raises(ValidationError):
            TransformSpec(kind="cap")

    def test_power_exponent_range(self):
        with pytest.raises(ValidationError):
            TransformSpec(kind="power", power_exponent=1.5)

    def test_log_rejects_params(self):
        with pytest.raises(ValidationError):
            TransformSpec(kind="log", cap_percentile=50.0)


class TestPerfWeightedRewards:
    def test_zero_sensitivity_scales_validators_uniformly(self):
        out = perf_weighted_rewards([(Role.VALIDATOR, 100.0, 0.9)], sensitivity=0.0)
        assert out[0] == pytest.approx(25.0, abs=0)

    def test_full_sensitivity_miner(self):
        out = perf_weighted_rewards([(Role.MINER, 100.0, 0.5)], sensitivity=1.0)
        assert out[0] == pytest.approx(125.0, abs=0)

    def test_zero_perf_miner(self):
        out = perf_weighted_rewards([(Role.MINER, 100.0, 0.0)], sensitivity=2.0)
        assert out[0] == pytest.approx(75.0, abs=0)

    def test_negative_sensitivity_rejected(self):
        with pytest.raises(ValidationError):
            perf_weighted_rewards([(Role.MINER, 1.0, 0.5)], sensitivity=-0.1)


class TestCompositeRanks:
    def test_identity_endpoint_is_exact_copy(self):
        ranks = np.array([0.2, 0.7, 1.0])
        perfs = np.array([0.9, 0.1, 0.5])
        out = composite_ranks(ranks, perfs, 1.0)
        np.testing.assert_array_equal(out, ranks)
        assert out is not ranks

    def test_perf_endpoint_is_exact_copy(self):
        ranks = np.array([0.2, 0.7])
        perfs = np.array([0.9, 0.1])
        np.testing.assert_array_equal(composite_ranks(ranks, perfs, 0.0), perfs)

    def test_mix_formula(self):
        out = composite_ranks(np.array([0.5]), np.array([1.0]), 0.8)
        assert out[0] == pytest.approx(0.6, abs=1e-15)

    def test_inputs_must_be_unit_scaled(self):
        with pytest.raises(ValidationError):
            composite_ranks(np.array([1.5]), np.array([0.5]), 0.5)


class TestBonusRewards:
    def test_zero_rate_is_exact_copy(self):
        rewards = np.array([3.0, 5.0])
        out = bonus_rewards(rewards, np.array([0.5, 0.9]), 0.0)
        np.testing.assert_array_equal(out, rewards)

    def test_formula(self):
        out = bonus_rewards(np.array([100.0]), np.array([0.5]), 0.2)
        assert out[0] == pytest.approx(110.0, rel=1e-12)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValidationError):
            bonus_rewards(np.array([1.0]), np.array([0.5]), -0.2)


class TestUnitRescale:
    def test_minmax(self):
        out = unit_rescale(np.array([2.0, 4.0, 6.0]))
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0])

    def test_constant_maps_to_half(self):
        np.testing.assert_array_equal(unit_rescale(np.full(3, 9.0)), np.full(3, 0.5))


class TestStakeTransforms:
    def test_nearest_rank_percentile(self):
        values = [1.0, 2.0, 3.0, 100.0]
        # ceil(0.50 * 4) = 2nd ascending value
        assert nearest_rank_percentile(values, 50.0) == 2.0
        assert nearest_rank_percentile(values, 75.0) == 3.0
        assert nearest_rank_percentile(values, 100.0) == 100.0

    def test_cap_transform(self):
        out = apply_stake_transform([1.0, 2.0, 3.0, 100.0], TransformSpec(kind="cap", cap_percentile=50.0))
        np.testing.assert_allclose(out, [1.0, 2.0, 2.0, 2.0])

    def test_cap_at_100_is_identity(self):
        stakes = np.array([5.0, 1.0, 9.0])
        out = apply_stake_transform(stakes, TransformSpec(kind="cap", cap_percentile=100.0))
        np.testing.assert_array_equal(out, stakes)

    def test_power_transform(self):
        out = apply_stake_transform([4.0, 9.0], TransformSpec(kind="power", power_exponent=0.5))
        np.testing.assert_allclose(out, [2.0, 3.0])

    def test_log_transform(self):
        out = apply_stake_transform([0.0, np.e - 1.0], TransformSpec(kind="log"))
        np.testing.assert_allclose(out, [0.0, 1.0], atol=1e-15)

    def test_lower_cap_never_decreases_penalty(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            stakes = rng.pareto(1.3, size=200) + 0.5
            penalties = []
            for pct in (99.0, 90.0, 75.0, 50.0):
                capped = apply_stake_transform(stakes, TransformSpec(kind="cap", cap_percentile=pct))
                penalties.append(whale_penalty(stakes, capped))
            assert all(b >= a - 1e-12 for a, b in zip(penalties, penalties[1:]))

    def test_smaller_exponent_never_decreases_penalty(self):
        rng = np.random.default_rng(32)
        for _ in range(50):
            stakes = rng.pareto(1.3, size=200) + 1.0
            penalties = []
            for exponent in (1.0, 0.8, 0.6, 0.5):
                powered = apply_stake_transform(stakes, TransformSpec(kind="power", power_exponent=exponent))
                penalties.append(whale_penalty(stakes, powered))
            assert all(b >= a - 1e-12 for a, b in zip(penalties, penalties[1:]))


class TestWhalePenalty:
    def test_half_trim(self):
        # 100 wallets: top 1% is exactly the single largest wallet
        original = np.ones(100)
        original[17] = 10.0
        transformed = original.copy()
        transformed[17] = 5.0
        assert whale_penalty(original, transformed) == pytest.approx(0.5, abs=1e-15)

    def test_identity_is_zero(self):
        original = np.array([5.0, 1.0, 2.0])
        assert whale_penalty(original, original.copy()) == 0.0

    def test_top_group_rounds_up(self):
        # 150 wallets -> ceil(1.5) = top 2 by original stake
        original = np.ones(150)
        original[0], original[1] = 30.0, 20.0
        transformed = original.copy()
        transformed[0], transformed[1] = 15.0, 10.0
        assert whale_penalty(original, transformed) == pytest.approx(0.5, rel=1e-12)

    def test_inflating_transform_goes_negative(self):
        original = np.array([2.0, 1.0])
        transformed = np.array([4.0, 1.0])
        assert whale_penalty(original, transformed) == pytest.approx(-1.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            whale_penalty(np.ones(3), np.ones(4))
