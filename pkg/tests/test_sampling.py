import math

import numpy as np
import pytest

from vrlatency.model import UserConfiguration
from vrlatency.sampling import (PHASE_UP_ATTEMPTS, RandomStream, draw_upload_scenarios,
                                empirical_success_probability, gamma_batch, geometric_batch,
                                geometric_from_uniform, sample_backhaul, sample_geometric,
                                sample_upload_delays, stream_range, user_layout)
from vrlatency.model import uplink_threshold

N_DRAWS = 10 ** 6


def test_geometric_mean_and_tail(backend):
    m = geometric_batch(42, stream_range(0, N_DRAWS), 0.7)
    assert m.min() >= 1
    assert abs(m.mean() - 1 / 0.7) <= 0.01 / 0.7
    tail = np.mean(m >= 3)
    se = math.sqrt(0.09 * 0.91 / N_DRAWS)
    assert abs(tail - 0.09) <= 3 * se


def test_geometric_pmf_small_support(backend):
    m = geometric_batch(5, stream_range(0, N_DRAWS), 0.7)
    for k in (1, 2, 3, 4):
        p = 0.3 ** (k - 1) * 0.7
        se = math.sqrt(p * (1 - p) / N_DRAWS)
        assert abs(np.mean(m == k) - p) <= 4 * se


def test_first_attempt_success_region():
    u = np.array([1e-12, 0.3, 0.69999999, 0.7000001, 0.91, 0.97])
    assert geometric_from_uniform(u, 0.7).tolist() == [1, 1, 1, 2, 3, 3]


def test_geometric_rejects_bad_eta():
    with pytest.raises(ValueError):
        sample_geometric(RandomStream(0, 1), 1.0)


def test_gamma_moments(backend):
    g = gamma_batch(42, stream_range(0, N_DRAWS, phase=2), 500.0, 1e-5)
    assert abs(g.mean() - 5e-3) <= 0.005 * 5e-3
    assert abs(g.var(ddof=1) - 5e-8) <= 0.05 * 5e-8
    se = math.sqrt(5e-8 / N_DRAWS)
    assert abs(g.mean() - 5e-3) <= 3 * se


@pytest.mark.parametrize("shape", [0.5, 1.0, 3.0])
def test_gamma_small_shape_moments(backend, shape):
    # skewed regime: mean and third central moment
    g = gamma_batch(7, stream_range(0, 400_000, phase=2), shape, 2.0)
    mean, var = shape * 2.0, shape * 4.0
    assert abs(g.mean() - mean) <= 4 * math.sqrt(var / g.size)
    assert g.var() == pytest.approx(var, rel=0.03)
    skew = np.mean((g - g.mean()) ** 3) / g.std() ** 3
    assert skew == pytest.approx(2 / math.sqrt(shape), rel=0.1)


def test_single_stream_ops():
    s = RandomStream.for_user(3, 10, 2, PHASE_UP_ATTEMPTS)
    assert sample_geometric(s, 0.7) == sample_geometric(s, 0.7) >= 1
    assert sample_backhaul(s, 500.0, 1e-5) > 0
    with pytest.raises(ValueError):
        sample_backhaul(s, 0.0, 1.0)


def test_stream_independence_proxy():
    a = RandomStream.for_user(1, 0, 0, PHASE_UP_ATTEMPTS).uniforms(10_000)
    b = RandomStream.for_user(1, 0, 1, PHASE_UP_ATTEMPTS).uniforms(10_000)
    c = RandomStream.for_user(1, 1, 0, PHASE_UP_ATTEMPTS).uniforms(10_000)
    for x, y in ((a, b), (a, c), (b, c)):
        assert abs(np.corrcoef(x, y)[0, 1]) < 0.01


def test_layout_orders_users_by_type():
    lay = user_layout(UserConfiguration.from_flat(2, 1, 0, 3))
    assert lay.community.tolist() == [0, 0, 0, 1, 1, 1]
    assert lay.bs.tolist() == [0, 0, 1, 1, 1, 1]
    assert lay.cross.tolist() == [False, False, True, False, False, False]
    assert lay.bounds.tolist() == [[0, 3], [3, 6]]


def test_no_cross_users_no_backhaul(reference_cfg):
    out = sample_upload_delays(reference_cfg, UserConfiguration.from_flat(25, 0, 0, 25), 1, 0)
    assert len(out) == 50
    assert all(s.backhaul_s == 0 and s.attempts >= 1 for s in out)


def test_cross_user_count(reference_cfg):
    users = UserConfiguration.from_flat(13, 12, 13, 12)  # 25 cross-type users
    out = sample_upload_delays(reference_cfg, users, 1, 17)
    assert sum(s.backhaul_s > 0 for s in out) == 25
    assert out == sample_upload_delays(reference_cfg, users, 1, 17)


def test_scenarios_independent_of_threads(reference_cfg, backend):
    users = UserConfiguration.from_flat(13, 12, 12, 13)
    one = draw_upload_scenarios(reference_cfg, users, 8, 5000)
    four = draw_upload_scenarios(reference_cfg, users, 8, 5000, threads=4)
    assert np.array_equal(one.attempts, four.attempts)
    assert np.array_equal(one.backhaul, four.backhaul)


def test_log2_threshold_diagnostic(reference_cfg):
    theta = uplink_threshold(reference_cfg)
    p = empirical_success_probability(reference_cfg.snr_budget_up, reference_cfg, theta, 400_000, seed=3)
    implied = 0.7 ** (1 / math.log(2))
    assert p == pytest.approx(implied, abs=4 * math.sqrt(implied * (1 - implied) / 400_000))
    # with the natural log the per-attempt success would be the target
    theta_ln = theta * math.log(2)
    assert empirical_success_probability(reference_cfg.snr_budget_up, reference_cfg, theta_ln,
                                         400_000, seed=3) == pytest.approx(0.7, abs=0.003)
