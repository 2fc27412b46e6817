"""Scenario and user-configuration types plus derived channel constants.

Indexing convention used throughout the package: grids are 2x2 numpy arrays
indexed ``[i, j]`` with ``i`` the VR community and ``j`` the base station,
both 0-based. Community ``i`` is served by the computing server at BS ``i``,
so users of type ``(i, j)`` with ``i != j`` are cross-type. Entries for empty
types are NaN ("absent") and are skipped by every downstream sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np


class ModelError(ValueError):
    """Base class for invalid inputs to the latency model."""


class ValidationError(ModelError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InvalidAllocation(ModelError):
    pass


class EmptyGroupError(ModelError):
    pass


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical, channel and traffic constants.

    Power budgets are linear ratios P/sigma^2; use :func:`db_to_linear` (or
    :meth:`from_db`) for values quoted in dB. The backhaul Gamma shape is the
    numeric value of ``backhaul_length`` in meters.
    """

    snr_budget_up: float = 100.0
    snr_budget_dn: float = 1000.0
    pathloss_exp: float = 3.0
    user_distance: float = 15.0
    backhaul_length: float = 500.0
    backhaul_coeff: float = 1e-8
    clock_speed: float = 2e9
    msg_bits_up: float = 1000.0
    msg_bits_dn: float = 1000.0
    bandwidth_up: float = 1e9
    bandwidth_dn: float = 1e9
    target_success: float = 0.7
    total_users: int = 50

    @classmethod
    def from_db(cls, snr_budget_up_db=20.0, snr_budget_dn_db=30.0, **kwargs):
        return cls(snr_budget_up=db_to_linear(snr_budget_up_db),
                   snr_budget_dn=db_to_linear(snr_budget_dn_db), **kwargs)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def raise_if_invalid(self):
        if self.violations:
            raise ValidationError(self.violations)


_POSITIVE_FIELDS = (
    "snr_budget_up", "snr_budget_dn", "user_distance", "backhaul_length",
    "backhaul_coeff", "clock_speed", "msg_bits_up", "msg_bits_dn",
    "bandwidth_up", "bandwidth_dn", "total_users",
)


def validate_scenario(cfg: ScenarioConfig) -> ValidationResult:
    violations = []
    for name in _POSITIVE_FIELDS:
        value = getattr(cfg, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            violations.append(f"{name} must be finite and > 0")
    if not cfg.pathloss_exp >= 2:
        violations.append("pathloss_exp must be >= 2")
    if not 0.0 < cfg.target_success < 1.0:
        violations.append("target_success must lie in (0,1)")
    if cfg.user_distance > cfg.backhaul_length / 2:
        violations.append("user_distance exceeds D/2")
    if int(cfg.total_users) != cfg.total_users:
        violations.append("total_users must be an integer")
    return ValidationResult(tuple(violations))


@dataclass(frozen=True)
class UserConfiguration:
    """User counts ``counts[i][j]`` for community ``i`` attached to BS ``j``."""

    counts: tuple

    def __post_init__(self):
        grid = tuple(tuple(int(n) for n in row) for row in self.counts)
        if len(grid) != 2 or any(len(row) != 2 for row in grid):
            raise ModelError("counts must be a 2x2 grid")
        if any(n < 0 for row in grid for n in row):
            raise ModelError("counts must be non-negative")
        if any(n != float(m) for row, orig in zip(grid, self.counts)
               for n, m in zip(row, orig)):
            raise ModelError("counts must be integers")
        object.__setattr__(self, "counts", grid)

    @classmethod
    def from_flat(cls, n11, n12, n21, n22):
        return cls(((n11, n12), (n21, n22)))

    def flat(self):
        return (*self.counts[0], *self.counts[1])

    @property
    def array(self):
        return np.array(self.counts, dtype=np.int64)

    @property
    def total(self):
        return sum(self.flat())

    def community_size(self, i):
        return self.counts[i][0] + self.counts[i][1]

    def bs_load(self, j):
        return self.counts[0][j] + self.counts[1][j]

    def fractions(self):
        """Exact fractions p_ij as a nested tuple of :class:`Fraction`."""
        n = self.total
        return tuple(tuple(Fraction(c, n) for c in row) for row in self.counts)

    def probabilities(self):
        return self.array / float(self.total)

    def populated(self):
        return self.array > 0

    def validate(self, cfg: ScenarioConfig | None = None) -> ValidationResult:
        violations = []
        if self.total == 0:
            violations.append("configuration has no users")
        if cfg is not None and self.total != cfg.total_users:
            violations.append(
                f"counts sum to {self.total}, expected total_users={cfg.total_users}")
        return ValidationResult(tuple(violations))


def is_cross_type(i, j):
    return i != j


@dataclass(frozen=True, eq=False)
class SpectrumAllocation:
    """Per-user uplink bandwidths and per-group multicast downlink bandwidths (Hz)."""

    up: np.ndarray
    dn: np.ndarray

    def __post_init__(self):
        for name in ("up", "dn"):
            arr = np.array(getattr(self, name), dtype=np.float64).reshape(2, 2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, SpectrumAllocation):
            return NotImplemented
        return (np.array_equal(self.up, other.up, equal_nan=True)
                and np.array_equal(self.dn, other.dn, equal_nan=True))

    def violations(self, cfg: ScenarioConfig, users: UserConfiguration, rtol=1e-9):
        out = []
        counts = users.array
        for j in range(2):
            pop = counts[:, j] > 0
            if not pop.any():
                continue
            up = self.up[pop, j]
            dn = self.dn[pop, j]
            if np.isnan(up).any() or np.isnan(dn).any():
                out.append(f"BS {j + 1}: populated type has no allocation")
                continue
            if (up < 0).any() or (dn < 0).any():
                out.append(f"BS {j + 1}: negative bandwidth")
            used_up = math.fsum(up * counts[pop, j])
            if abs(used_up - cfg.bandwidth_up) > rtol * cfg.bandwidth_up:
                out.append(f"BS {j + 1}: uplink uses {used_up!r} Hz, expected {cfg.bandwidth_up!r}")
            used_dn = math.fsum(dn)
            if abs(used_dn - cfg.bandwidth_dn) > rtol * cfg.bandwidth_dn:
                out.append(f"BS {j + 1}: downlink uses {used_dn!r} Hz, expected {cfg.bandwidth_dn!r}")
        return out


def uplink_threshold(cfg: ScenarioConfig) -> float:
    # log base 2 as printed in the model, not the natural log of the fading derivation
    return cfg.snr_budget_up * math.log2(1.0 / cfg.target_success) / cfg.user_distance ** cfg.pathloss_exp


def downlink_threshold(cfg: ScenarioConfig, n_ij: int) -> float:
    if n_ij < 1:
        raise EmptyGroupError("downlink threshold undefined for an empty multicast group")
    return (cfg.snr_budget_dn * math.log2(1.0 / cfg.target_success)
            / (cfg.user_distance ** cfg.pathloss_exp * n_ij))


@dataclass(frozen=True, eq=False)
class ChannelDerived:
    theta_up: float
    theta_dn: np.ndarray
    per_bit_coeff_up: float

    @property
    def a(self):
        return self.per_bit_coeff_up


def derive_channel(cfg: ScenarioConfig, users: UserConfiguration) -> ChannelDerived:
    theta_up = uplink_threshold(cfg)
    theta_dn = np.full((2, 2), np.nan)
    for i in range(2):
        for j in range(2):
            if users.counts[i][j] > 0:
                theta_dn[i, j] = downlink_threshold(cfg, users.counts[i][j])
    theta_dn.setflags(write=False)
    a = cfg.msg_bits_up / math.log2(1.0 + theta_up)
    return ChannelDerived(theta_up, theta_dn, a)
