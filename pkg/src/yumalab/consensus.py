"""Yuma Consensus emission pipeline for one subnet and one tempo.

The pipeline: split the block emission into owner/miner/validator pools,
clip validator weights at the stake-backed consensus benchmark, rank miners
by stake-weighted clipped weights, update validator bonds as an EMA of the
per-miner normalized bonded stake, pay validators by bond-weighted miner
shares, and pass delegator payouts through each validator's commission.

All operations are pure functions; run_tempo composes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from yumalab import _kernels
from yumalab.interventions import composite_ranks, unit_rescale
from yumalab.model import (
    EmissionOutcome,
    EmissionParams,
    ValidationError,
    WeightMatrix,
    _readonly,
    _require_nonneg,
    _require_unit,
)

__all__ = [
    "BondState",
    "Delegation",
    "split_block_emission",
    "consensus_clip",
    "miner_emission_shares",
    "validator_bonds",
    "validator_emission_shares",
    "delegator_rewards",
    "run_tempo",
]

# Relative slack for delegated-stake and conservation comparisons.
REL_TOL = 1e-9


@dataclass(frozen=True)
class BondState:
    """EMA bond matrix (validator x miner) with its tempo counter."""

    bonds: np.ndarray
    tempo_index: int = 0

    def __post_init__(self) -> None:
        bonds = np.asarray(self.bonds, dtype=np.float64)
        if bonds.ndim != 2:
            raise ValidationError("bonds must be a 2-d matrix")
        if not np.all(np.isfinite(bonds)) or np.any(bonds < 0.0) or np.any(bonds > 1.0):
            raise ValidationError("bond entries must lie in [0, 1]")
        object.__setattr__(self, "bonds", _readonly(bonds))
        if int(self.tempo_index) < 0:
            raise ValidationError("tempo_index must be >= 0")
        object.__setattr__(self, "tempo_index", int(self.tempo_index))

    @classmethod
    def initial(cls, n_validators: int, n_miners: int) -> "BondState":
        """Zero bonds: the protocol's start state (nothing accrued yet)."""
        return cls(bonds=np.zeros((n_validators, n_miners)), tempo_index=0)


@dataclass(frozen=True)
class Delegation:
    """TAO delegated to a validator, subject to its commission (take)."""

    validator_id: str
    delegator_id: str
    amount: float
    take: float

    def __post_init__(self) -> None:
        if not self.validator_id or not self.delegator_id:
            raise ValidationError("validator_id and delegator_id must be non-empty")
        object.__setattr__(self, "amount", _require_nonneg("amount", self.amount))
        object.__setattr__(self, "take", _require_unit("take", self.take))


def split_block_emission(total: float, params: EmissionParams) -> tuple[float, float, float]:
    """Split one block's emission into (owner, miner pool, validator pool)."""
    total = float(total)
    if not math.isfinite(total) or total < 0.0:
        raise ValidationError(f"block emission must be >= 0, got {total}")
    return (
        params.owner_share * total,
        params.miner_share * total,
        params.validator_share * total,
    )


def consensus_clip(wm: WeightMatrix, kappa: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Clip weights at the per-miner consensus benchmark.

    The benchmark for miner j is the largest observed weight on j that is
    backed by at least a kappa fraction of total validator stake;
    zero-stake validators contribute candidate values but no backing.
    Returns (benchmarks, clipped matrix).
    """
    kappa = float(kappa)
    if not 0.0 < kappa <= 1.0:
        raise ValidationError(f"kappa must lie in (0, 1], got {kappa}")
    stakes = wm.stakes
    if float(np.sum(stakes)) <= 0.0:
        raise ValidationError("benchmark undefined: all validator stakes are zero")
    benchmarks = np.asarray(_kernels.clip_benchmarks(wm.weights, stakes, kappa))
    clipped = np.minimum(wm.weights, benchmarks[np.newaxis, :])
    return benchmarks, clipped


def miner_emission_shares(clipped: np.ndarray, stakes: np.ndarray) -> tuple[np.ndarray, bool]:
    """Normalize stake-weighted clipped weights into miner shares.

    Returns (shares, no_ranking_mass). When every miner's ranking is zero
    the shares are all zero and the flag is set instead of raising.
    """
    clipped = np.asarray(clipped, dtype=np.float64)
    stakes = np.asarray(stakes, dtype=np.float64)
    if clipped.ndim != 2 or stakes.shape != (clipped.shape[0],):
        raise ValidationError("clipped matrix and stake vector dimensions do not match")
    if np.any(stakes < 0.0):
        raise ValidationError("stakes must be nonnegative")
    rankings = stakes @ clipped
    total = float(np.sum(rankings))
    if total <= 0.0:
        return np.zeros(clipped.shape[1]), True
    return rankings / total, False


def validator_bonds(
    wm: WeightMatrix,
    clipped: np.ndarray,
    beta: float,
    alpha: float,
    prev: BondState,
) -> BondState:
    """One EMA step of the bond matrix.

    Bond weights blend raw and clipped weights (beta toward clipped), are
    normalized per miner over the validators' bonded stake, and smoothed
    into the previous state with factor alpha. Miners with no bonded stake
    keep zero bonds.
    """
    beta = _require_unit("beta", beta)
    alpha = _require_unit("alpha", alpha)
    clipped = np.asarray(clipped, dtype=np.float64)
    shape = (wm.n_validators, wm.n_miners)
    if clipped.shape != shape:
        raise ValidationError(f"clipped matrix shape {clipped.shape} does not match {shape}")
    if prev.bonds.shape != shape:
        raise ValidationError(f"previous bond shape {prev.bonds.shape} does not match {shape}")
    bond_weights = (1.0 - beta) * wm.weights + beta * clipped
    bonded = wm.stakes[:, np.newaxis] * bond_weights
    column_mass = np.sum(bonded, axis=0)
    instant = np.divide(
        bonded,
        column_mass[np.newaxis, :],
        out=np.zeros_like(bonded),
        where=column_mass[np.newaxis, :] > 0.0,
    )
    smoothed = alpha * instant + (1.0 - alpha) * prev.bonds
    return BondState(bonds=smoothed, tempo_index=prev.tempo_index + 1)


def validator_emission_shares(bonds: BondState, miner_shares: np.ndarray) -> np.ndarray:
    """Validator shares: bond-weighted sums of miner shares."""
    miner_shares = np.asarray(miner_shares, dtype=np.float64)
    if miner_shares.shape != (bonds.bonds.shape[1],):
        raise ValidationError("miner share vector does not match bond matrix width")
    return bonds.bonds @ miner_shares


def delegator_rewards(
    delegations: Sequence[Delegation],
    validator_reward: float,
    validator_total_stake: float,
) -> dict[str, float]:
    """Per-delegator payouts from one validator's reward.

    Each delegator receives its stake fraction of the reward after the
    validator's commission. The validator's self-stake is not treated as a
    delegation, so commission applies to external delegations only; whether
    the protocol also takes commission on self-stake is unobservable here
    because both flows pay the same wallet.
    """
    reward = _require_nonneg("validator_reward", validator_reward)
    stake = float(validator_total_stake)
    if stake <= 0.0:
        raise ValidationError("validator_total_stake must be positive")
    delegated = math.fsum(d.amount for d in delegations)
    if delegated > stake * (1.0 + REL_TOL):
        raise ValidationError(
            f"delegated stake {delegated} exceeds validator stake {stake}"
        )
    payouts: dict[str, float] = {}
    for delegation in delegations:
        payout = (1.0 - delegation.take) * (delegation.amount / stake) * reward
        payouts[delegation.delegator_id] = payouts.get(delegation.delegator_id, 0.0) + payout
    return payouts


def run_tempo(
    wm: WeightMatrix,
    prev: BondState,
    params: EmissionParams,
    block_emission: float,
    delegations: Sequence[Delegation] = (),
    rank_mix_perfs: Optional[np.ndarray] = None,
    rank_mix_weight: float = 1.0,
) -> EmissionOutcome:
    """Run the full emission pipeline for one tempo.

    Validator TAO is the validator pool allocated proportionally to the
    bond-weighted shares (normalized over their sum); when total validator
    share is zero the pool goes unallocated, mirroring the all-zero miner
    ranking case.

    `rank_mix_perfs` is a simulation hook: when given, miner shares are
    re-derived from a convex mix of the min-max rescaled rankings with
    these per-miner performance scores (weight `rank_mix_weight` on the
    rankings). Note the rescaling: even at weight 1 the hook yields shares
    proportional to rescaled ranks, which differs from the plain
    normalization used when the hook is off.
    """
    owner, miner_pool, validator_pool = split_block_emission(block_emission, params)
    _, clipped = consensus_clip(wm, params.kappa)
    miner_share_vec, no_ranking_mass = miner_emission_shares(clipped, wm.stakes)
    if rank_mix_perfs is not None:
        perfs = np.asarray(rank_mix_perfs, dtype=np.float64)
        if perfs.shape != (wm.n_miners,):
            raise ValidationError("rank_mix_perfs length does not match the miner count")
        mixed = composite_ranks(unit_rescale(wm.stakes @ clipped), perfs, rank_mix_weight)
        mass = float(np.sum(mixed))
        if mass > 0.0:
            miner_share_vec = mixed / mass
            no_ranking_mass = False
        else:
            miner_share_vec = np.zeros(wm.n_miners)
            no_ranking_mass = True
    bond_state = validator_bonds(wm, clipped, params.beta, params.alpha, prev)
    validator_share_vec = validator_emission_shares(bond_state, miner_share_vec)

    miner_tao = miner_pool * miner_share_vec
    share_total = float(np.sum(validator_share_vec))
    if share_total > 0.0:
        validator_tao = validator_pool * (validator_share_vec / share_total)
    else:
        validator_tao = np.zeros_like(validator_share_vec)

    validator_ids = wm.validator_ids
    stake_by_id = dict(wm.validators)
    tao_by_id = dict(zip(validator_ids, validator_tao))
    grouped: dict[str, list[Delegation]] = {}
    for delegation in delegations:
        if delegation.validator_id not in stake_by_id:
            raise ValidationError(f"unknown validator {delegation.validator_id!r} in delegation")
        grouped.setdefault(delegation.validator_id, []).append(delegation)
    delegator_payouts: dict[str, float] = {}
    for validator_id in validator_ids:
        group = grouped.get(validator_id)
        if not group:
            continue
        payouts = delegator_rewards(group, tao_by_id[validator_id], stake_by_id[validator_id])
        for delegator_id, payout in payouts.items():
            delegator_payouts[delegator_id] = delegator_payouts.get(delegator_id, 0.0) + payout

    return EmissionOutcome(
        block_emission=float(block_emission),
        owner_amount=owner,
        miner_shares=dict(zip(wm.miners, miner_share_vec)),
        validator_shares=dict(zip(validator_ids, validator_share_vec)),
        miner_tao=dict(zip(wm.miners, miner_tao)),
        validator_tao=tao_by_id,
        delegator_rewards=delegator_payouts,
        bonds=bond_state.bonds,
        tempo_index=bond_state.tempo_index,
        no_ranking_mass=no_ranking_mass,
    )
