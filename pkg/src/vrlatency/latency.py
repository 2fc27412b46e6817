"""End-to-end latency: Monte-Carlo upload max-delay, closed-form compute and download."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import (ChannelDerived, EmptyGroupError, InvalidAllocation, ScenarioConfig,
                    SpectrumAllocation, UserConfiguration, derive_channel, downlink_threshold)
from .sampling import UploadScenarios, draw_upload_scenarios, sample_chunks

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000


def wireless_upload_delay(attempts, w_up, derived: ChannelDerived):
    if np.any(np.asarray(w_up) <= 0):
        raise InvalidAllocation("uplink bandwidth must be > 0 for a transmitting user")
    return attempts * (derived.per_bit_coeff_up / w_up)


def per_user_coefficients(w_up, layout, derived: ChannelDerived):
    """``a / w_l`` for every user, in layout order."""
    w = np.asarray(w_up, dtype=float)[layout.community, layout.bs]
    if w.size and not np.all(w > 0):
        raise InvalidAllocation("every populated type needs positive uplink bandwidth")
    return derived.per_bit_coeff_up / w


def upload_maxima(scenarios: UploadScenarios, coef, threads=1):
    """Per-sample worst upload delay and worst user for each community."""
    bounds = scenarios.layout.bounds
    if threads <= 1 or scenarios.n_samples < 2:
        return kernels.upload_maxima(scenarios.attempts, scenarios.backhaul, coef, bounds)
    parts = sample_chunks(0, scenarios.n_samples, threads)

    def block(part):
        lo, n = part
        return kernels.upload_maxima(scenarios.attempts[lo:lo + n],
                                     scenarios.backhaul[lo:lo + n], coef, bounds)

    with ThreadPoolExecutor(len(parts)) as pool:
        results = list(pool.map(block, parts))
    return np.concatenate([r[0] for r in results]), np.concatenate([r[1] for r in results])


def mean_and_stderr(x):
    """Order-independent mean and standard error (exactly rounded sums)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    mean = math.fsum(x) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((x - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def _scenarios_for(cfg, users, samples, seed, scenarios, threads):
    if scenarios is None:
        if samples is None or samples < 1:
            raise ValueError("samples must be >= 1")
        return draw_upload_scenarios(cfg, users, seed, samples, threads=threads)
    return scenarios


def estimate_upload_latency(cfg: ScenarioConfig, users: UserConfiguration,
                            alloc: SpectrumAllocation, samples=DEFAULT_SAMPLES, seed=0,
                            scenarios: UploadScenarios | None = None, threads=1):
    """Monte-Carlo estimate of the expected worst upload delay per community.

    Returns ``(mean, stderr)`` arrays of length 2. An empty community gets 0.
    Passing ``scenarios`` reuses pre-drawn samples (common random numbers).
    """
    sc = _scenarios_for(cfg, users, samples, seed, scenarios, threads)
    derived = derive_channel(cfg, users)
    coef = per_user_coefficients(alloc.up, sc.layout, derived)
    maxima, _ = upload_maxima(sc, coef, threads)
    mean = np.zeros(2)
    err = np.zeros(2)
    for i in range(2):
        if users.community_size(i) == 0:
            log.debug("community %d is empty; upload term set to 0", i + 1)
            continue
        mean[i], err[i] = mean_and_stderr(maxima[:, i])
    return mean, err


def compute_delay(cfg: ScenarioConfig, n_community):
    return cfg.msg_bits_up * n_community / cfg.clock_speed


def download_latency(cfg: ScenarioConfig, users: UserConfiguration,
                     alloc: SpectrumAllocation, i, j):
    n = users.counts[i][j]
    if n < 1:
        raise EmptyGroupError(f"type ({i + 1},{j + 1}) has no users")
    w = alloc.dn[i, j]
    if not w > 0:
        raise InvalidAllocation(f"type ({i + 1},{j + 1}) has no downlink bandwidth")
    theta = downlink_threshold(cfg, n)
    wireless = cfg.msg_bits_dn / (w * cfg.target_success * math.log2(1.0 + theta))
    backhaul = cfg.backhaul_coeff * cfg.msg_bits_dn * cfg.backhaul_length if i != j else 0.0
    return wireless + backhaul


@dataclass(frozen=True, eq=False)
class LatencyReport:
    upload_s: np.ndarray
    upload_stderr_s: np.ndarray
    compute_s: np.ndarray
    download_s: np.ndarray
    total_s: np.ndarray
    weighted_total_s: float
    weighted_stderr_s: float
    samples_used: int

    def type_records(self, users: UserConfiguration):
        """One flat record per non-empty type, then a summary record."""
        out = []
        for i in range(2):
            for j in range(2):
                if users.counts[i][j] == 0:
                    continue
                out.append({
                    "community": i + 1, "bs": j + 1, "count": users.counts[i][j],
                    "upload_s": float(self.upload_s[i]),
                    "upload_stderr_s": float(self.upload_stderr_s[i]),
                    "compute_s": float(self.compute_s[i]),
                    "download_s": float(self.download_s[i, j]),
                    "total_s": float(self.total_s[i, j]),
                })
        out.append({"summary": True, "weighted_total_s": self.weighted_total_s,
                    "stderr_s": self.weighted_stderr_s, "samples": self.samples_used})
        return out


def weighted_total(users: UserConfiguration, total_s):
    p = users.probabilities()
    return math.fsum(p[i, j] * total_s[i, j]
                     for i in range(2) for j in range(2) if users.counts[i][j] > 0)


def end_to_end_report(cfg: ScenarioConfig, users: UserConfiguration, alloc: SpectrumAllocation,
                      samples=DEFAULT_SAMPLES, seed=0, scenarios: UploadScenarios | None = None,
                      threads=1) -> LatencyReport:
    sc = _scenarios_for(cfg, users, samples, seed, scenarios, threads)
    derived = derive_channel(cfg, users)
    coef = per_user_coefficients(alloc.up, sc.layout, derived)
    maxima, _ = upload_maxima(sc, coef, threads)

    upload = np.zeros(2)
    upload_err = np.zeros(2)
    for i in range(2):
        if users.community_size(i) > 0:
            upload[i], upload_err[i] = mean_and_stderr(maxima[:, i])
    compute = np.array([compute_delay(cfg, users.community_size(i)) for i in range(2)])
    download = np.full((2, 2), np.nan)
    total = np.full((2, 2), np.nan)
    for i in range(2):
        for j in range(2):
            if users.counts[i][j] > 0:
                download[i, j] = download_latency(cfg, users, alloc, i, j)
                total[i, j] = upload[i] + compute[i] + download[i, j]

    # stderr of the population average: only the upload terms are random
    p = users.probabilities()
    per_sample = maxima @ p.sum(axis=1)
    _, weighted_err = mean_and_stderr(per_sample)
    for arr in (upload, upload_err, compute, download, total):
        arr.setflags(write=False)
    return LatencyReport(upload, upload_err, compute, download, total,
                         weighted_total(users, total), weighted_err, sc.n_samples)
