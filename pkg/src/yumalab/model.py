"""Domain types shared across the package.

Every class here is an immutable value object: construction validates the
invariants and raises ValidationError on the first violation, so downstream
code can assume instances are well formed. Timestamps are normalized to
aware UTC datetimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "ValidationError",
    "Role",
    "SnapshotEvent",
    "SnapshotEntry",
    "SubnetSnapshot",
    "WeightMatrix",
    "EmissionParams",
    "EmissionOutcome",
]


class ValidationError(ValueError):
    """A value violated one of the domain invariants."""


class Role(str, Enum):
    """Wallet role on a subnet."""

    MINER = "miner"
    VALIDATOR = "validator"

    @classmethod
    def parse(cls, text: str) -> "Role":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValidationError(f"unknown role {text!r}") from None


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return value


def _require_nonneg(name: str, value: float) -> float:
    value = _require_finite(name, value)
    if value < 0.0:
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return value


def _require_unit(name: str, value: float) -> float:
    value = _require_finite(name, value)
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")
    return value


def _require_utc(name: str, value: datetime) -> datetime:
    if not isinstance(value, datetime) or value.tzinfo is None:
        raise ValidationError(f"{name} must be a timezone-aware datetime")
    return value.astimezone(timezone.utc)


def _readonly(array: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, slots=True)
class SnapshotEvent:
    """One observed wallet state on one subnet at one block.

    `trust` is the miner performance score and `validator_trust` the
    validator one; each is only meaningful for the matching role and must
    be absent (None) for the other. `reward` is the emission received
    since the previous event for the same wallet and subnet.
    """

    timestamp: datetime
    block_number: int
    netuid: int
    wallet: str
    role: Role
    stake: float
    reward: float
    trust: Optional[float] = None
    validator_trust: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamp", _require_utc("timestamp", self.timestamp))
        if int(self.block_number) < 0:
            raise ValidationError(f"block_number must be >= 0, got {self.block_number}")
        object.__setattr__(self, "block_number", int(self.block_number))
        if int(self.netuid) < 0:
            raise ValidationError(f"netuid must be >= 0, got {self.netuid}")
        object.__setattr__(self, "netuid", int(self.netuid))
        if not self.wallet:
            raise ValidationError("wallet must be a non-empty string")
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role.parse(str(self.role)))
        object.__setattr__(self, "stake", _require_nonneg("stake", self.stake))
        object.__setattr__(self, "reward", _require_nonneg("reward", self.reward))
        if self.trust is not None:
            if self.role is not Role.MINER:
                raise ValidationError(f"trust set on non-miner wallet {self.wallet!r}")
            object.__setattr__(self, "trust", _require_unit("trust", self.trust))
        if self.validator_trust is not None:
            if self.role is not Role.VALIDATOR:
                raise ValidationError(
                    f"validator_trust set on non-validator wallet {self.wallet!r}"
                )
            object.__setattr__(
                self, "validator_trust", _require_unit("validator_trust", self.validator_trust)
            )

    @property
    def perf(self) -> float:
        """Performance score for the wallet's role, 0.0 when unreported."""
        score = self.trust if self.role is Role.MINER else self.validator_trust
        return 0.0 if score is None else score


@dataclass(frozen=True, slots=True)
class SnapshotEntry:
    """Aggregated per-wallet state inside one snapshot window."""

    wallet: str
    role: Role
    stake: float
    reward: float
    perf: float

    def __post_init__(self) -> None:
        if not self.wallet:
            raise ValidationError("wallet must be a non-empty string")
        if not isinstance(self.role, Role):
            object.__setattr__(self, "role", Role.parse(str(self.role)))
        object.__setattr__(self, "stake", _require_nonneg("stake", self.stake))
        object.__setattr__(self, "reward", _require_nonneg("reward", self.reward))
        object.__setattr__(self, "perf", _require_unit("perf", self.perf))


@dataclass(frozen=True)
class SubnetSnapshot:
    """All wallets of one subnet aggregated over one time window."""

    netuid: int
    window_start: datetime
    window_end: datetime
    entries: tuple[SnapshotEntry, ...]

    def __post_init__(self) -> None:
        if int(self.netuid) < 0:
            raise ValidationError(f"netuid must be >= 0, got {self.netuid}")
        object.__setattr__(self, "netuid", int(self.netuid))
        start = _require_utc("window_start", self.window_start)
        end = _require_utc("window_end", self.window_end)
        if start >= end:
            raise ValidationError("window_start must precede window_end")
        object.__setattr__(self, "window_start", start)
        object.__setattr__(self, "window_end", end)
        object.__setattr__(self, "entries", tuple(self.entries))
        seen: set[str] = set()
        for entry in self.entries:
            if not isinstance(entry, SnapshotEntry):
                raise ValidationError("entries must be SnapshotEntry instances")
            if entry.wallet in seen:
                raise ValidationError(
                    f"duplicate wallet {entry.wallet!r} in snapshot for netuid {self.netuid}"
                )
            seen.add(entry.wallet)

    def _select(self, role: Optional[Role]) -> list[SnapshotEntry]:
        if role is None:
            return list(self.entries)
        return [e for e in self.entries if e.role is role]

    def wallets(self, role: Optional[Role] = None) -> list[str]:
        return [e.wallet for e in self._select(role)]

    def stakes(self, role: Optional[Role] = None) -> np.ndarray:
        return np.array([e.stake for e in self._select(role)], dtype=np.float64)

    def rewards(self, role: Optional[Role] = None) -> np.ndarray:
        return np.array([e.reward for e in self._select(role)], dtype=np.float64)

    def perfs(self, role: Optional[Role] = None) -> np.ndarray:
        return np.array([e.perf for e in self._select(role)], dtype=np.float64)

    def count(self, role: Optional[Role] = None) -> int:
        return len(self._select(role))


@dataclass(frozen=True)
class WeightMatrix:
    """Validator-to-miner weight assignments for one subnet.

    `validators` pairs each validator id with its stake; `weights[i, j]`
    is validator i's weight on miner j, each in [0, 1]. Rows are not
    required to sum to one.
    """

    validators: tuple[tuple[str, float], ...]
    miners: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self) -> None:
        validators = tuple((str(v), _require_nonneg(f"stake of {v!r}", s)) for v, s in self.validators)
        miners = tuple(str(m) for m in self.miners)
        if not validators:
            raise ValidationError("at least one validator is required")
        if not miners:
            raise ValidationError("at least one miner is required")
        if len({v for v, _ in validators}) != len(validators):
            raise ValidationError("validator ids must be unique")
        if len(set(miners)) != len(miners):
            raise ValidationError("miner ids must be unique")
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (len(validators), len(miners)):
            raise ValidationError(
                f"weights shape {weights.shape} does not match "
                f"{len(validators)} validators x {len(miners)} miners"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0.0) or np.any(weights > 1.0):
            raise ValidationError("weights must lie in [0, 1]")
        object.__setattr__(self, "validators", validators)
        object.__setattr__(self, "miners", miners)
        object.__setattr__(self, "weights", _readonly(weights))
        object.__setattr__(self, "_stakes", _readonly([s for _, s in validators]))

    @property
    def stakes(self) -> np.ndarray:
        return self._stakes  # type: ignore[attr-defined]

    @property
    def validator_ids(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.validators)

    @property
    def n_validators(self) -> int:
        return len(self.validators)

    @property
    def n_miners(self) -> int:
        return len(self.miners)


# Emission split used on Bittensor before dTAO: 18% of each block's issuance
# to the subnet owner and 41% each to miners and validators.
OWNER_SHARE = 0.18
MINER_SHARE = 0.41
VALIDATOR_SHARE = 0.41


@dataclass(frozen=True)
class EmissionParams:
    """Protocol parameters of one emission round (a tempo).

    alpha is the EMA smoothing factor for bonds, beta the weight the bond
    calculation places on clipped instead of raw weights, and kappa the
    consensus clipping threshold. The three pool shares must sum to 1
    exactly.
    """

    alpha: float
    beta: float
    kappa: float = 0.5
    owner_share: float = OWNER_SHARE
    miner_share: float = MINER_SHARE
    validator_share: float = VALIDATOR_SHARE
    tempo_blocks: int = 360

    def __post_init__(self) -> None:
        kappa = _require_finite("kappa", self.kappa)
        if not 0.0 < kappa <= 1.0:
            raise ValidationError(f"kappa must lie in (0, 1], got {kappa}")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "alpha", _require_unit("alpha", self.alpha))
        object.__setattr__(self, "beta", _require_unit("beta", self.beta))
        for name in ("owner_share", "miner_share", "validator_share"):
            object.__setattr__(self, name, _require_unit(name, getattr(self, name)))
        total = self.owner_share + self.miner_share + self.validator_share
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"pool shares must sum to 1, got {total!r}")
        if int(self.tempo_blocks) <= 0:
            raise ValidationError(f"tempo_blocks must be positive, got {self.tempo_blocks}")
        object.__setattr__(self, "tempo_blocks", int(self.tempo_blocks))


@dataclass(frozen=True)
class EmissionOutcome:
    """Result of one emission round.

    Shares are fractions of the respective pools; `miner_tao` and
    `validator_tao` are the resulting absolute amounts. `bonds` is the
    validator-by-miner bond matrix after the round's EMA update. When no
    miner received any stake-backed weight, `no_ranking_mass` is set and
    all miner shares are zero.
    """

    block_emission: float
    owner_amount: float
    miner_shares: Mapping[str, float]
    validator_shares: Mapping[str, float]
    miner_tao: Mapping[str, float]
    validator_tao: Mapping[str, float]
    delegator_rewards: Mapping[str, float]
    bonds: np.ndarray
    tempo_index: int
    no_ranking_mass: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "block_emission", _require_nonneg("block_emission", self.block_emission))
        object.__setattr__(self, "owner_amount", _require_nonneg("owner_amount", self.owner_amount))
        for name in ("miner_shares", "validator_shares", "miner_tao", "validator_tao", "delegator_rewards"):
            mapping = dict(getattr(self, name))
            for key, value in mapping.items():
                mapping[key] = _require_nonneg(f"{name}[{key!r}]", value)
            object.__setattr__(self, name, mapping)
        bonds = np.asarray(self.bonds, dtype=np.float64)
        if bonds.ndim != 2:
            raise ValidationError("bonds must be a 2-d matrix")
        if not np.all(np.isfinite(bonds)) or np.any(bonds < 0.0) or np.any(bonds > 1.0):
            raise ValidationError("bond entries must lie in [0, 1]")
        object.__setattr__(self, "bonds", _readonly(bonds))
        if int(self.tempo_index) < 0:
            raise ValidationError("tempo_index must be >= 0")
        object.__setattr__(self, "tempo_index", int(self.tempo_index))
        miner_total = math.fsum(self.miner_shares.values())
        if self.no_ranking_mass:
            if miner_total != 0.0:
                raise ValidationError("no_ranking_mass set but miner shares are non-zero")
        elif abs(miner_total - 1.0) > 1e-9:
            raise ValidationError(f"miner shares must sum to 1, got {miner_total!r}")
