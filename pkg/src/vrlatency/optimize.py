"""Spectrum allocation: closed-form downlink split, SAA projected-subgradient uplink, baselines."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .latency import per_user_coefficients, upload_maxima
from .model import (ChannelDerived, InvalidAllocation, ModelError, ScenarioConfig,
                    SpectrumAllocation, UserConfiguration, derive_channel, downlink_threshold)
from .sampling import UploadScenarios, draw_upload_scenarios

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerSettings:
    t_samples: int = 50
    k_iters: int = 50
    step_size: float | None = None
    seed: int = 1
    # used only when step_size is None, see default_step_size
    step_scale: float = 2.0

    def __post_init__(self):
        if self.t_samples < 1 or self.k_iters < 1:
            raise ValueError("t_samples and k_iters must be >= 1")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be > 0")


@dataclass
class OptimizerTrace:
    iterates: list = field(default_factory=list)
    saa_objective: list = field(default_factory=list)
    step_size: float = float("nan")

    @property
    def best_index(self):
        return int(np.argmin(self.saa_objective))

    @property
    def best(self):
        return self.iterates[self.best_index]

    def records(self):
        out = []
        for k, (w, f) in enumerate(zip(self.iterates, self.saa_objective)):
            out.append({"iteration": k, "saa_objective": f,
                        "w_up_11": w[0, 0], "w_up_12": w[0, 1],
                        "w_up_21": w[1, 0], "w_up_22": w[1, 1],
                        "best_so_far": min(self.saa_objective[:k + 1])})
        return out


# -- downlink ---------------------------------------------------------------

def optimize_downlink(users: UserConfiguration, w_total) -> np.ndarray:
    """Square-root split of each BS's downlink band across its two multicast groups."""
    dn = np.full((2, 2), np.nan)
    for j in range(2):
        r1, r2 = math.sqrt(users.counts[0][j]), math.sqrt(users.counts[1][j])
        if r1 + r2 == 0:
            continue
        for i, r in enumerate((r1, r2)):
            if r > 0:
                dn[i, j] = w_total * r / (r1 + r2)
    return dn


def golden_section(f, lo, hi, tol, diff=None, max_iter=500):
    """Minimize a unimodal ``f`` on ``[lo, hi]``.

    ``diff(x, y)`` may supply a well-conditioned ``f(x) - f(y)`` so that points
    can be told apart below the sqrt(eps) resolution of raw function values.
    """
    if diff is None:
        def diff(x, y):
            return f(x) - f(y)
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if diff(c, d) < 0:
            b, d = d, c
            c = b - INV_PHI * (b - a)
        else:
            a, c = c, d
            d = a + INV_PHI * (b - a)
    return 0.5 * (a + b)


def _surrogate_diff(n1, n2, w_total):
    # f(x) = n1/x + n2/(W - x); difference factored to avoid cancellation
    def diff(x, y):
        return (n1 * (y - x) / (x * y)
                + n2 * (x - y) / ((w_total - x) * (w_total - y)))
    return diff


def downlink_kkt_oracle(users: UserConfiguration, w_total, tol=None) -> np.ndarray:
    """Golden-section minimizer of ``N1j/w1 + N2j/w2`` s.t. ``w1 + w2 = w_total``."""
    tol = w_total * 1e-13 if tol is None else tol
    dn = np.full((2, 2), np.nan)
    for j in range(2):
        n1, n2 = users.counts[0][j], users.counts[1][j]
        if n1 == 0 or n2 == 0:
            raise ModelError(f"BS {j + 1}: oracle needs both multicast groups populated")
        w1 = golden_section(lambda x: n1 / x + n2 / (w_total - x), 0.0, w_total, tol,
                            diff=_surrogate_diff(n1, n2, w_total))
        dn[0, j], dn[1, j] = w1, w_total - w1
    return dn


def exact_downlink(cfg: ScenarioConfig, users: UserConfiguration, tol=None) -> np.ndarray:
    """Numerical minimizer of the mean downlink wireless delay, group-size-dependent thresholds included.

    Diagnostic counterpart of :func:`optimize_downlink`, which drops the
    dependence of the multicast threshold on the group size.
    """
    w_total = cfg.bandwidth_dn
    tol = w_total * 1e-12 if tol is None else tol
    dn = np.full((2, 2), np.nan)
    for j in range(2):
        n = [users.counts[0][j], users.counts[1][j]]
        if n[0] == 0 and n[1] == 0:
            continue
        if n[0] == 0 or n[1] == 0:
            dn[0 if n[0] else 1, j] = w_total
            continue
        c = [n[i] / math.log2(1.0 + downlink_threshold(cfg, n[i])) for i in range(2)]

        def diff(x, y, c=c):
            return c[0] * (y - x) / (x * y) + c[1] * (x - y) / ((w_total - x) * (w_total - y))

        w1 = golden_section(None, 0.0, w_total, tol, diff=diff)
        dn[0, j], dn[1, j] = w1, w_total - w1
    return dn


# -- uplink -----------------------------------------------------------------

def project_uplink(w_tilde, n, w_total):
    """Euclidean projection of ``w_tilde`` onto ``{w >= 0 : n1 w1 + n2 w2 = w_total}``.

    Absent (zero-count) types come back as NaN.
    """
    w1, w2 = float(w_tilde[0]), float(w_tilde[1])
    n1, n2 = n
    if n1 == 0 and n2 == 0:
        raise InvalidAllocation("cannot allocate uplink bandwidth with no users")
    if n1 == 0:
        return math.nan, w_total / n2
    if n2 == 0:
        return w_total / n1, math.nan
    if w1 < (w2 - w_total / n2) * n1 / n2:
        return 0.0, w_total / n2
    if w2 < (w1 - w_total / n1) * n2 / n1:
        return w_total / n1, 0.0
    den = n1 * n1 + n2 * n2
    return ((n1 * w_total - n1 * n2 * w2 + n2 * n2 * w1) / den,
            (n2 * w_total - n1 * n2 * w1 + n1 * n1 * w2) / den)


def _project_all(w_tilde, users, w_total):
    out = np.full((2, 2), np.nan)
    for j in range(2):
        n = (users.counts[0][j], users.counts[1][j])
        if n[0] + n[1] == 0:
            continue
        out[0, j], out[1, j] = project_uplink(w_tilde[:, j], n, w_total)
    return out


def equal_uplink(users: UserConfiguration, w_total) -> np.ndarray:
    up = np.full((2, 2), np.nan)
    for j in range(2):
        load = users.bs_load(j)
        for i in range(2):
            if users.counts[i][j] > 0:
                up[i, j] = w_total / load
    return up


def equal_downlink(users: UserConfiguration, w_total) -> np.ndarray:
    dn = np.full((2, 2), np.nan)
    for j in range(2):
        groups = [i for i in range(2) if users.counts[i][j] > 0]
        for i in groups:
            dn[i, j] = w_total / len(groups)
    return dn


def equal_baseline(users: UserConfiguration, cfg: ScenarioConfig) -> SpectrumAllocation:
    return SpectrumAllocation(equal_uplink(users, cfg.bandwidth_up),
                              equal_downlink(users, cfg.bandwidth_dn))


def _saa_terms(w_up, scenarios: UploadScenarios, users, derived):
    coef = per_user_coefficients(w_up, scenarios.layout, derived)
    return upload_maxima(scenarios, coef)


def saa_objective(w_up, scenarios: UploadScenarios, users: UserConfiguration,
                  derived: ChannelDerived) -> float:
    """Empirical ``sum_i N_Vi * mean_t max_l (a M/w_l + B)`` over fixed scenarios."""
    maxima, _ = _saa_terms(w_up, scenarios, users, derived)
    return _objective_from(maxima, users)


def _objective_from(maxima, users):
    t = maxima.shape[0]
    return math.fsum(users.community_size(i) * math.fsum(maxima[:, i]) / t for i in range(2)
                     if users.community_size(i) > 0)


def _gradient_from(argmax, w_up, scenarios, users, derived):
    t = argmax.shape[0]
    layout = scenarios.layout
    g = np.full((2, 2), np.nan)
    for i in range(2):
        n_vi = users.community_size(i)
        if n_vi == 0:
            continue
        worst = argmax[:, i]
        m_worst = scenarios.attempts[np.arange(t), worst]
        bs_worst = layout.bs[worst]
        for j in range(2):
            if users.counts[i][j] == 0:
                continue
            total = math.fsum(m_worst[bs_worst == j])
            g[i, j] = -derived.per_bit_coeff_up * n_vi / (t * w_up[i, j] ** 2) * total
    return g


def saa_subgradient(w_up, scenarios: UploadScenarios, users: UserConfiguration,
                    derived: ChannelDerived) -> np.ndarray:
    """Subgradient of :func:`saa_objective`; NaN entries for empty types.

    Ties for the worst user go to the lowest user index.
    """
    w_up = np.asarray(w_up, dtype=float)
    _, argmax = _saa_terms(w_up, scenarios, users, derived)
    return _gradient_from(argmax, w_up, scenarios, users, derived)


def default_step_size(cfg: ScenarioConfig, derived: ChannelDerived, scale=2.0):
    """``scale * (W/N)**3 / (a N)``: moves an equal-share user by O(scale) of its share per unit of attempts."""
    share = cfg.bandwidth_up / cfg.total_users
    return scale * share ** 3 / (derived.per_bit_coeff_up * cfg.total_users)


def optimize_uplink(cfg: ScenarioConfig, users: UserConfiguration,
                    settings: OptimizerSettings = OptimizerSettings(),
                    scenarios: UploadScenarios | None = None):
    """Projected subgradient descent on the SAA upload objective.

    Starts at the equal split, keeps the ``t_samples`` scenarios fixed and
    returns the best iterate by SAA objective together with the trace.
    """
    for j in range(2):
        if users.bs_load(j) == 0:
            raise ModelError(f"BS {j + 1} has no users")
    derived = derive_channel(cfg, users)
    if scenarios is None:
        scenarios = draw_upload_scenarios(cfg, users, settings.seed, settings.t_samples)
    beta = settings.step_size
    if beta is None:
        beta = default_step_size(cfg, derived, settings.step_scale)

    trace = OptimizerTrace(step_size=beta)
    w = equal_uplink(users, cfg.bandwidth_up)
    for k in range(settings.k_iters + 1):
        maxima, argmax = _saa_terms(w, scenarios, users, derived)
        trace.iterates.append(w)
        trace.saa_objective.append(_objective_from(maxima, users))
        if k == settings.k_iters:
            break
        g = _gradient_from(argmax, w, scenarios, users, derived)
        w_next = _project_all(w - beta * np.nan_to_num(g), users, cfg.bandwidth_up)
        populated = users.populated()
        if not np.all(w_next[populated] > 0):
            # a populated type lost all bandwidth: objective is infinite from here on
            log.warning("iterate %d starved a populated type; stopping (step size too large?)", k + 1)
            trace.iterates.append(w_next)
            trace.saa_objective.append(math.inf)
            break
        w = w_next
    return trace.best.copy(), trace


def optimized_allocation(cfg, users, settings=OptimizerSettings(), uplink=True, downlink=True):
    """Allocation with the optimized uplink and/or downlink, equal split elsewhere."""
    trace = None
    if uplink:
        up, trace = optimize_uplink(cfg, users, settings)
    else:
        up = equal_uplink(users, cfg.bandwidth_up)
    dn = optimize_downlink(users, cfg.bandwidth_dn) if downlink else equal_downlink(users, cfg.bandwidth_dn)
    return SpectrumAllocation(up, dn), trace
