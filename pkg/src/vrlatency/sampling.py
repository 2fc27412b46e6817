"""Seedable HARQ attempt counts and backhaul delays.

Each variate is a pure function of ``(seed, sample_index, user_index, phase)``
(see :mod:`vrlatency._kernels_py` for the exact formula), so draws do not
depend on evaluation order or thread count and two allocations evaluated under
the same seed see the same scenarios.

Users are laid out in type order ``(1,1), (1,2), (2,1), (2,2)``; the layout is
a function of the counts alone, so identical counts give identical draws.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .model import ScenarioConfig, UserConfiguration

PHASE_UP_ATTEMPTS = 1
PHASE_UP_BACKHAUL = 2
PHASE_FADING = 3

_MASK64 = (1 << 64) - 1


def _seed64(seed):
    return int(seed) & _MASK64


@dataclass(frozen=True)
class RandomStream:
    seed: int
    stream_id: int

    @classmethod
    def for_user(cls, seed, sample_index, user_index, phase):
        sid = kernels.stream_ids(np.uint64(sample_index), np.uint64(user_index), phase)
        return cls(_seed64(seed), int(sid))

    def uniform(self, counter=0):
        return float(kernels.uniforms(self.seed, np.uint64(self.stream_id), np.uint64(counter)))

    def uniforms(self, n):
        """The first ``n`` variates of the stream."""
        return kernels.uniforms(self.seed, np.uint64(self.stream_id), np.arange(n, dtype=np.uint64))


def geometric_from_uniform(u, eta):
    """Inverse CDF of Geometric(eta) on {1, 2, ...}; ``u < eta`` gives 1."""
    m = np.ceil(np.log1p(-np.asarray(u, dtype=float)) / math.log1p(-eta))
    return np.maximum(m, 1).astype(np.int64)


def _check_eta(eta):
    if not 0.0 < eta < 1.0:
        raise ValueError(f"success probability must lie in (0,1), got {eta}")


def sample_geometric(stream: RandomStream, eta: float) -> int:
    _check_eta(eta)
    return int(kernels.geometric_variates(stream.seed, np.uint64(stream.stream_id), eta))


def sample_backhaul(stream: RandomStream, shape: float, scale: float) -> float:
    if not (shape > 0 and scale > 0):
        raise ValueError("gamma shape and scale must be > 0")
    return float(kernels.gamma_variates(stream.seed, np.uint64(stream.stream_id), shape, scale))


def geometric_batch(seed, stream_ids, eta):
    _check_eta(eta)
    return kernels.geometric_variates(_seed64(seed), np.asarray(stream_ids, dtype=np.uint64), eta)


def gamma_batch(seed, stream_ids, shape, scale):
    if not (shape > 0 and scale > 0):
        raise ValueError("gamma shape and scale must be > 0")
    return kernels.gamma_variates(_seed64(seed), np.asarray(stream_ids, dtype=np.uint64),
                                  float(shape), float(scale))


def stream_range(start, count, user_index=0, phase=PHASE_UP_ATTEMPTS):
    """Stream ids for ``count`` consecutive sample indices of one user."""
    samples = np.arange(start, start + count, dtype=np.uint64)
    return kernels.stream_ids(samples, np.uint64(user_index), phase)


def backhaul_params(cfg: ScenarioConfig, bits: float):
    """(shape, scale) of the backhaul delay for a message of ``bits`` bits."""
    return float(cfg.backhaul_length), cfg.backhaul_coeff * bits


class UserLayout(NamedTuple):
    community: np.ndarray   # community index per user
    bs: np.ndarray          # BS index per user
    cross: np.ndarray       # bool, community != bs
    bounds: np.ndarray      # (2, 2) user index range per community
    type_bounds: np.ndarray  # (2, 2, 2) user index range per (i, j)


def user_layout(users: UserConfiguration) -> UserLayout:
    community, bs = [], []
    type_bounds = np.zeros((2, 2, 2), dtype=np.int64)
    pos = 0
    for i in range(2):
        for j in range(2):
            n = users.counts[i][j]
            type_bounds[i, j] = (pos, pos + n)
            community += [i] * n
            bs += [j] * n
            pos += n
    community = np.array(community, dtype=np.int64)
    bs = np.array(bs, dtype=np.int64)
    bounds = np.array([[type_bounds[i, 0, 0], type_bounds[i, 1, 1]] for i in range(2)])
    return UserLayout(community, bs, community != bs, bounds, type_bounds)


class UploadDelaySample(NamedTuple):
    attempts: int
    backhaul_s: float


@dataclass(frozen=True, eq=False)
class UploadScenarios:
    """A block of pre-drawn upload scenarios, ``[sample, user]`` arrays."""

    attempts: np.ndarray
    backhaul: np.ndarray
    layout: UserLayout
    seed: int
    sample_start: int

    @property
    def n_samples(self):
        return self.attempts.shape[0]

    def __len__(self):
        return self.n_samples


def sample_chunks(start, count, threads):
    n = max(1, min(int(threads), count))
    edges = np.linspace(0, count, n + 1).astype(np.int64)
    return [(start + int(lo), int(hi - lo)) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]


def draw_upload_scenarios(cfg: ScenarioConfig, users: UserConfiguration, seed, n_samples,
                          sample_start=0, threads=1) -> UploadScenarios:
    """Draw ``n_samples`` upload scenarios for sample indices ``sample_start...``."""
    layout = user_layout(users)
    n_users = layout.community.shape[0]
    seed = _seed64(seed)
    shape, scale = backhaul_params(cfg, cfg.msg_bits_up)
    mask = layout.cross.astype(np.uint8)
    eta = cfg.target_success

    def block(args):
        start, count = args
        att = kernels.draw_attempts(seed, start, count, n_users, eta, PHASE_UP_ATTEMPTS)
        bh = kernels.draw_backhaul(seed, start, count, mask, shape, scale, PHASE_UP_BACKHAUL)
        return att, bh

    parts = sample_chunks(sample_start, n_samples, threads)
    if len(parts) > 1:
        with ThreadPoolExecutor(len(parts)) as pool:
            results = list(pool.map(block, parts))
    else:
        results = [block(p) for p in parts]
    if results:
        attempts = np.concatenate([r[0] for r in results])
        backhaul = np.concatenate([r[1] for r in results])
    else:
        attempts = np.zeros((0, n_users), dtype=np.int64)
        backhaul = np.zeros((0, n_users))
    return UploadScenarios(attempts, backhaul, layout, seed, sample_start)


def sample_upload_delays(cfg: ScenarioConfig, users: UserConfiguration, seed, sample_index):
    """One :class:`UploadDelaySample` per user for a single sample index."""
    sc = draw_upload_scenarios(cfg, users, seed, 1, sample_start=sample_index)
    return [UploadDelaySample(int(m), float(b)) for m, b in zip(sc.attempts[0], sc.backhaul[0])]


def empirical_success_probability(snr_budget, cfg: ScenarioConfig, theta, n_draws, seed=0,
                                  n_receivers=1):
    """Fraction of draws in which ``min`` receiver SNR under Exp(1) fading reaches ``theta``.

    Diagnostic for the SNR thresholds: with the base-2 log they do not yield
    success probability ``target_success`` under Rayleigh fading.
    """
    ids = kernels.stream_ids(np.arange(n_draws, dtype=np.uint64)[:, None],
                             np.arange(n_receivers, dtype=np.uint64)[None, :], PHASE_FADING)
    g = -np.log(kernels.uniforms(_seed64(seed), ids, np.uint64(0)))
    snr = snr_budget * cfg.user_distance ** (-cfg.pathloss_exp) * g
    return float(np.mean(snr.min(axis=1) >= theta))
