"""Emission pipeline oracles and invariants.

The canonical 2x2 instance used throughout: validators v1 (stake 3) and
v2 (stake 1) weighting miners m1/m2 as [[0.5, 0.5], [0.9, 0.1]], kappa
0.5, alpha 0.1, beta 0.5, block emission 100. All frozen numbers below
were derived by hand as exact fractions.
"""

import math

import numpy as np
import pytest

from yumalab.consensus import (
    BondState,
    Delegation,
    consensus_clip,
    delegator_rewards,
    miner_emission_shares,
    run_tempo,
    split_block_emission,
    validator_bonds,
    validator_emission_shares,
)
from yumalab.model import EmissionParams, ValidationError, WeightMatrix

PARAMS = EmissionParams(alpha=0.1, beta=0.5, kappa=0.5)


def canonical_wm() -> WeightMatrix:
    return WeightMatrix(
        validators=(("v1", 3.0), ("v2", 1.0)),
        miners=("m1", "m2"),
        weights=np.array([[0.5, 0.5], [0.9, 0.1]]),
    )


def random_wm(rng, max_side=10, allow_zero_stake=False) -> WeightMatrix:
    n_val = int(rng.integers(1, max_side + 1))
    n_min = int(rng.integers(1, max_side + 1))
    stakes = rng.uniform(0.1, 10.0, size=n_val)
    if allow_zero_stake and n_val > 1 and rng.random() < 0.3:
        stakes[int(rng.integers(0, n_val))] = 0.0
    weights = np.clip(rng.random((n_val, n_min)) + 0.05, 0.0, 1.0)
    return WeightMatrix(
        validators=tuple((f"v{i}", float(s)) for i, s in enumerate(stakes)),
        miners=tuple(f"m{j}" for j in range(n_min)),
        weights=weights,
    )


class TestSplit:
    def test_pools_are_exact(self):
        owner, miner, validator = split_block_emission(100.0, PARAMS)
        assert owner == 0.18 * 100.0
        assert miner == 0.41 * 100.0
        assert validator == 0.41 * 100.0

    def test_zero_emission(self):
        assert split_block_emission(0.0, PARAMS) == (0.0, 0.0, 0.0)

    def test_negative_emission_rejected(self):
        with pytest.raises(ValidationError):
            split_block_emission(-1.0, PARAMS)


class TestConsensusClip:
    def test_canonical_benchmarks(self):
        benchmarks, clipped = consensus_clip(canonical_wm(), kappa=0.5)
        np.testing.assert_allclose(benchmarks, [0.5, 0.5], atol=0)
        np.testing.assert_allclose(clipped, [[0.5, 0.5], [0.5, 0.1]], atol=0)

    def test_clipped_never_exceeds_original(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            wm = random_wm(rng)
            _, clipped = consensus_clip(wm)
            assert np.all(clipped <= wm.weights + 1e-15)

    def test_benchmark_is_an_observed_weight(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            wm = random_wm(rng)
            benchmarks, _ = consensus_clip(wm)
            for j, bench in enumerate(benchmarks):
                assert bench in wm.weights[:, j]

    def test_zero_total_stake_rejected(self):
        wm = WeightMatrix(
            validators=(("v1", 0.0),), miners=("m1",), weights=np.array([[0.5]])
        )
        with pytest.raises(ValidationError):
            consensus_clip(wm)

    @pytest.mark.parametrize("kappa", [0.0, -0.5, 1.5])
    def test_kappa_range(self, kappa):
        with pytest.raises(ValidationError):
            consensus_clip(canonical_wm(), kappa=kappa)


class TestMinerShares:
    def test_canonical_shares(self):
        _, clipped = consensus_clip(canonical_wm())
        shares, flag = miner_emission_shares(clipped, canonical_wm().stakes)
        # R = [3*0.5 + 1*0.5, 3*0.5 + 1*0.1] = [2.0, 1.6]
        np.testing.assert_allclose(shares, [5.0 / 9.0, 4.0 / 9.0], rtol=1e-15)
        assert not flag

    def test_all_zero_weights_flagged(self):
        shares, flag = miner_emission_shares(np.zeros((2, 3)), np.array([1.0, 2.0]))
        assert flag
        np.testing.assert_array_equal(shares, np.zeros(3))

    def test_shares_sum_to_one(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            wm = random_wm(rng)
            _, clipped = consensus_clip(wm)
            shares, flag = miner_emission_shares(clipped, wm.stakes)
            if not flag:
                assert math.fsum(shares) == pytest.approx(1.0, rel=1e-12)


class TestValidatorBonds:
    def test_canonical_first_step(self):
        wm = canonical_wm()
        _, clipped = consensus_clip(wm)
        state = validator_bonds(wm, clipped, beta=0.5, alpha=0.1, prev=BondState.initial(2, 2))
        # bond weights [[0.5, 0.5], [0.7, 0.1]]; bonded stake [[1.5, 1.5], [0.7, 0.1]]
        # column masses [2.2, 1.6]; EMA from zero scales by alpha=0.1
        expected = 0.1 * np.array([[1.5 / 2.2, 1.5 / 1.6], [0.7 / 2.2, 0.1 / 1.6]])
        np.testing.assert_allclose(state.bonds, expected, rtol=1e-15)
        assert state.tempo_index == 1

    def test_instant_bond_columns_normalize(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            wm = random_wm(rng)
            _, clipped = consensus_clip(wm)
            state = validator_bonds(wm, clipped, beta=0.3, alpha=1.0, prev=BondState.initial(wm.n_validators, wm.n_miners))
            sums = state.bonds.sum(axis=0)
            bonded = wm.stakes[:, None] * ((1 - 0.3) * wm.weights + 0.3 * clipped)
            has_mass = bonded.sum(axis=0) > 0
            np.testing.assert_allclose(sums[has_mass], 1.0, rtol=1e-12)
            np.testing.assert_array_equal(sums[~has_mass], 0.0)

    def test_ema_fixed_point(self):
        # When the instant bonds equal the previous state the EMA is a no-op.
        wm = canonical_wm()
        _, clipped = consensus_clip(wm)
        instant = validator_bonds(wm, clipped, 0.5, 1.0, BondState.initial(2, 2))
        again = validator_bonds(wm, clipped, 0.5, 0.37, instant)
        np.testing.assert_allclose(again.bonds, instant.bonds, rtol=1e-15)

    def test_geometric_convergence(self):
        # Constant weights: B_t = (1 - (1-alpha)^t) * instant.
        wm = canonical_wm()
        _, clipped = consensus_clip(wm)
        alpha = 0.1
        instant = validator_bonds(wm, clipped, 0.5, 1.0, BondState.initial(2, 2)).bonds
        state = BondState.initial(2, 2)
        for t in range(1, 12):
            state = validator_bonds(wm, clipped, 0.5, alpha, state)
            factor = 1.0 - (1.0 - alpha) ** t
            np.testing.assert_allclose(state.bonds, factor * instant, rtol=1e-12)
        assert state.tempo_index == 11

    def test_shape_mismatch_rejected(self):
        wm = canonical_wm()
        _, clipped = consensus_clip(wm)
        with pytest.raises(ValidationError):
            validator_bonds(wm, clipped, 0.5, 0.1, BondState.initial(3, 2))


class TestDelegatorRewards:
    def test_commission_and_prorata(self):
        payouts = delegator_rewards(
            [Delegation("v1", "d1", 1.0, 0.18)], validator_reward=32.0, validator_total_stake=4.0
        )
        assert payouts["d1"] == pytest.approx(0.82 * 0.25 * 32.0, rel=1e-15)

    def test_full_take_pays_nothing(self):
        payouts = delegator_rewards([Delegation("v1", "d1", 2.0, 1.0)], 10.0, 4.0)
        assert payouts["d1"] == 0.0

    def test_multiple_delegations_accumulate(self):
        payouts = delegator_rewards(
            [Delegation("v1", "d1", 1.0, 0.0), Delegation("v1", "d1", 1.0, 0.0)],
            10.0,
            4.0,
        )
        assert payouts["d1"] == pytest.approx(5.0, rel=1e-15)

    def test_overdelegation_rejected(self):
        with pytest.raises(ValidationError):
            delegator_rewards([Delegation("v1", "d1", 5.0, 0.0)], 10.0, 4.0)

    def test_payout_never_exceeds_reward(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            stake = float(rng.uniform(1.0, 50.0))
            k = int(rng.integers(1, 6))
            amounts = rng.uniform(0.0, stake / k, size=k)
            delegations = [
                Delegation("v", f"d{i}", float(a), float(rng.random())) for i, a in enumerate(amounts)
            ]
            reward = float(rng.uniform(0.0, 100.0))
            payouts = delegator_rewards(delegations, reward, stake)
            assert math.fsum(payouts.values()) <= reward * (1 + 1e-12)


class TestRunTempo:
    def test_canonical_outcome(self):
        out = run_tempo(canonical_wm(), BondState.initial(2, 2), PARAMS, 100.0,
                        delegations=(Delegation("v1", "d1", 1.0, 0.18),))
        assert out.owner_amount == pytest.approx(18.0, abs=0)
        assert out.miner_shares["m1"] == pytest.approx(5.0 / 9.0, rel=1e-12)
        assert out.miner_shares["m2"] == pytest.approx(4.0 / 9.0, rel=1e-12)
        assert out.miner_tao["m1"] == pytest.approx(41.0 * 5.0 / 9.0, rel=1e-12)
        # validator shares normalize to 35/44 and 9/44 (worked out by hand)
        assert out.validator_tao["v1"] == pytest.approx(41.0 * 35.0 / 44.0, rel=1e-12)
        assert out.validator_tao["v2"] == pytest.approx(41.0 * 9.0 / 44.0, rel=1e-12)
        assert out.delegator_rewards["d1"] == pytest.approx(
            0.82 * (1.0 / 3.0) * 41.0 * 35.0 / 44.0, rel=1e-12
        )
        assert out.tempo_index == 1
        assert not out.no_ranking_mass

    def test_conservation_across_random_instances(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            wm = random_wm(rng, allow_zero_stake=True)
            emission = float(rng.uniform(0.1, 1000.0))
            out = run_tempo(wm, BondState.initial(wm.n_validators, wm.n_miners), PARAMS, emission)
            if out.no_ranking_mass:
                continue
            total = out.owner_amount + math.fsum(out.miner_tao.values()) + math.fsum(
                out.validator_tao.values()
            )
            assert total == pytest.approx(emission, rel=1e-9)

    def test_zero_weights_flag_everything(self):
        wm = WeightMatrix(
            validators=(("v1", 2.0),), miners=("m1", "m2"), weights=np.zeros((1, 2))
        )
        out = run_tempo(wm, BondState.initial(1, 2), PARAMS, 100.0)
        assert out.no_ranking_mass
        assert all(v == 0.0 for v in out.miner_shares.values())
        assert all(v == 0.0 for v in out.miner_tao.values())
        assert all(v == 0.0 for v in out.validator_tao.values())
        assert out.owner_amount == pytest.approx(18.0)

    def test_unknown_delegation_target_rejected(self):
        with pytest.raises(ValidationError):
            run_tempo(canonical_wm(), BondState.initial(2, 2), PARAMS, 100.0,
                      delegations=(Delegation("nobody", "d1", 0.5, 0.0),))

    def test_rank_mix_rescales_ranks_at_weight_one(self):
        # The hook min-max rescales the rank leg, so weight 1 allocates
        # proportionally to rescaled ranks rather than to raw rankings.
        wm = canonical_wm()
        perfs = np.array([0.9, 0.1])
        out = run_tempo(wm, BondState.initial(2, 2), PARAMS, 100.0,
                        rank_mix_perfs=perfs, rank_mix_weight=1.0)
        # rankings [2.0, 1.6] rescale to [1.0, 0.0]
        assert out.miner_shares["m1"] == pytest.approx(1.0, abs=0)
        assert out.miner_shares["m2"] == pytest.approx(0.0, abs=0)

    def test_rank_mix_pure_perf_at_weight_zero(self):
        wm = canonical_wm()
        perfs = np.array([0.3, 0.1])
        out = run_tempo(wm, BondState.initial(2, 2), PARAMS, 100.0,
                        rank_mix_perfs=perfs, rank_mix_weight=0.0)
        np.testing.assert_allclose(
            [out.miner_shares["m1"], out.miner_shares["m2"]], [0.75, 0.25], rtol=1e-12
        )

    def test_rank_mix_length_checked(self):
        with pytest.raises(ValidationError):
            run_tempo(canonical_wm(), BondState.initial(2, 2), PARAMS, 100.0,
                      rank_mix_perfs=np.array([0.5]))

    def test_bonds_feed_forward(self):
        wm = canonical_wm()
        state = BondState.initial(2, 2)
        seen = []
        for _ in range(3):
            out = run_tempo(wm, state, PARAMS, 100.0)
            seen.append(out.validator_tao["v1"])
            state = BondState(bonds=out.bonds, tempo_index=out.tempo_index)
        assert state.tempo_index == 3
        # constant weights: normalized validator split is stable across tempos
        assert seen[0] == pytest.approx(seen[1], rel=1e-12)
        assert seen[1] == pytest.approx(seen[2], rel=1e-12)
