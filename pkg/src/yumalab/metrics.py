"""Concentration, correlation, and attack-resilience metrics.

Thin validating wrappers around the numeric kernels, plus snapshot-level
report builders. Degenerate inputs split two ways: concentration metrics
on zero-mass vectors raise ValidationError, while a Pearson coefficient
with a zero-variance input is a legitimate "undefined" outcome and comes
back as None so callers can render gaps instead of crashing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from yumalab import _kernels
from yumalab.model import Role, SubnetSnapshot, ValidationError

__all__ = [
    "ROLE_FILTERS",
    "ConcentrationReport",
    "CorrelationProfile",
    "gini",
    "hhi",
    "top_share",
    "coalition_fraction",
    "pearson",
    "correlation_profile",
    "concentration_report",
]

ROLE_FILTERS = ("all", "miner", "validator")


def _as_nonneg_vector(values, name: str) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{name} must be finite")
    if np.any(x < 0.0):
        raise ValidationError(f"{name} must be nonnegative")
    return x


def gini(values) -> float:
    """Discrete Gini coefficient (mean absolute pairwise difference form)."""
    x = _as_nonneg_vector(values, "values")
    if float(np.sum(x)) <= 0.0:
        raise ValidationError("gini is undefined for an all-zero vector")
    return float(_kernels.gini(x))


def hhi(values) -> float:
    """Herfindahl-Hirschman index: sum of squared shares."""
    x = _as_nonneg_vector(values, "values")
    if float(np.sum(x)) <= 0.0:
        raise ValidationError("hhi is undefined for a zero-sum vector")
    return float(_kernels.hhi(x))


def top_share(values, fraction: float = 0.01) -> float:
    """Share of the total held by the top ceil(fraction * n) holders."""
    x = _as_nonneg_vector(values, "values")
    fraction = float(fraction)
    if not 0.0 < fraction <= 1.0:
        raise ValidationError(f"fraction must lie in (0, 1], got {fraction}")
    total = float(np.sum(x))
    if total <= 0.0:
        raise ValidationError("top_share is undefined for a zero-sum vector")
    k = math.ceil(fraction * x.shape[0])
    return float(_kernels.topk_sum(x, k)) / total


def coalition_fraction(stakes, threshold: float = 0.51) -> float:
    """Fraction of wallets needed to control `threshold` of total stake.

    Sorts stakes descending and returns m/n for the smallest m whose
    cumulative stake reaches threshold * total. Tie order among equal
    stakes cannot change m.
    """
    x = _as_nonneg_vector(stakes, "stakes")
    threshold = float(threshold)
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must lie in (0, 1], got {threshold}")
    if float(np.sum(x)) <= 0.0:
        raise ValidationError("coalition_fraction is undefined for a zero-sum vector")
    return int(_kernels.coalition_count(x, threshold)) / x.shape[0]


def pearson(x, y) -> Optional[float]:
    """Sample Pearson correlation; None when either variance is zero."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.ndim != 1 or ya.ndim != 1 or xa.shape != ya.shape:
        raise ValidationError("pearson requires two vectors of equal length")
    if xa.shape[0] < 2:
        raise ValidationError("pearson requires at least 2 observations")
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValidationError("pearson inputs must be finite")
    r = float(_kernels.pearson(xa, ya))
    return None if math.isnan(r) else r


@dataclass(frozen=True)
class CorrelationProfile:
    """The three pairwise correlations for one (netuid, role).

    r_sr: stake vs reward; r_sp: stake vs perf; r_pr: perf vs reward.
    Any of them may be None (undefined on zero-variance columns).
    """

    netuid: int
    role: Role
    n_wallets: int
    r_sr: Optional[float]
    r_sp: Optional[float]
    r_pr: Optional[float]


def correlation_profile(snap: SubnetSnapshot, role: Role) -> CorrelationProfile:
    """Stake/reward/perf correlations for one role within a snapshot."""
    stakes = snap.stakes(role)
    if stakes.shape[0] < 2:
        raise ValidationError(
            f"need at least 2 wallets with role {role.value} in netuid {snap.netuid}, "
            f"got {stakes.shape[0]}"
        )
    rewards = snap.rewards(role)
    perfs = snap.perfs(role)
    return CorrelationProfile(
        netuid=snap.netuid,
        role=role,
        n_wallets=stakes.shape[0],
        r_sr=pearson(stakes, rewards),
        r_sp=pearson(stakes, perfs),
        r_pr=pearson(perfs, rewards),
    )


@dataclass(frozen=True)
class ConcentrationReport:
    """Stake and reward concentration for one (netuid, role filter).

    Metrics are None when undefined for the underlying vector (zero mass,
    or no wallets under the filter).
    """

    netuid: int
    role_filter: str
    n_wallets: int
    gini_stake: Optional[float]
    gini_reward: Optional[float]
    hhi_stake: Optional[float]
    hhi_reward: Optional[float]
    top1_stake_share: Optional[float]
    top1_reward_share: Optional[float]


def _guarded(metric, values) -> Optional[float]:
    if values.shape[0] == 0 or float(np.sum(values)) <= 0.0:
        return None
    return metric(values)


def concentration_report(snap: SubnetSnapshot, role_filter: str = "all") -> ConcentrationReport:
    """Table-style concentration metrics for one snapshot and role filter."""
    if role_filter not in ROLE_FILTERS:
        raise ValidationError(f"unknown role filter {role_filter!r}")
    role = None if role_filter == "all" else Role(role_filter)
    stakes = snap.stakes(role)
    rewards = snap.rewards(role)
    return ConcentrationReport(
        netuid=snap.netuid,
        role_filter=role_filter,
        n_wallets=stakes.shape[0],
        gini_stake=_guarded(gini, stakes),
        gini_reward=_guarded(gini, rewards),
        hhi_stake=_guarded(hhi, stakes),
        hhi_reward=_guarded(hhi, rewards),
        top1_stake_share=_guarded(top_share, stakes),
        top1_reward_share=_guarded(top_share, rewards),
    )
