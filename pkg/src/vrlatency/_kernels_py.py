"""Pure numpy implementation of the compiled kernels.

Every variate is a pure function of ``(seed, stream_id, counter)``::

    mix64(z)        = SplitMix64 finalizer
    stream_id       = mix64(mix64(mix64(phase + G) ^ user) ^ sample)
    key             = mix64(seed ^ stream_id)
    uniform(k)      = ((mix64(key + (k + 1) * G) >> 11) + 0.5) * 2**-53

with ``G = 0x9E3779B97F4A7C15`` and all arithmetic modulo 2**64. Geometric
attempts use counter 0 through the inverse CDF. Gamma variates use
Marsaglia-Tsang rejection with attempt ``r`` consuming counters
``1 + 3r, 2 + 3r, 3 + 3r`` (Box-Muller pair, then the acceptance uniform);
counter 0 is the boost uniform for shape < 1.
"""

import numpy as np

BACKEND = "python"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 1.0 / 9007199254740992.0


def _mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _keys(seed, ids):
    return _mix64(np.uint64(seed) ^ np.asarray(ids, dtype=np.uint64))


def _uniform(keys, counter):
    bits = _mix64(keys + (np.asarray(counter, dtype=np.uint64) + np.uint64(1)) * GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def stream_ids(sample_idx, user_idx, phase):
    s = np.asarray(sample_idx, dtype=np.uint64)
    u = np.asarray(user_idx, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64(phase) + GOLDEN)
        return _mix64(_mix64(h ^ u) ^ s)


def uniforms(seed, ids, counters):
    with np.errstate(over="ignore"):
        return _uniform(_keys(seed, ids), counters)


def _geometric_from_keys(keys, eta):
    u = _uniform(keys, 0)
    m = np.ceil(np.log1p(-u) / np.log1p(-eta))
    return np.maximum(m, 1.0).astype(np.int64)


def _gamma_from_keys(keys, shape, scale):
    keys = np.asarray(keys, dtype=np.uint64).ravel()
    a = shape
    boost = np.ones(keys.shape[0])
    if a < 1.0:
        boost = _uniform(keys, 0) ** (1.0 / a)
        a = a + 1.0
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(keys.shape[0])
    pending = np.arange(keys.shape[0])
    r = 0
    while pending.size:
        k = keys[pending]
        base = np.uint64(3 * r)
        x = np.sqrt(-2.0 * np.log(_uniform(k, base + np.uint64(1)))) * np.cos(
            2.0 * np.pi * _uniform(k, base + np.uint64(2)))
        u = _uniform(k, base + np.uint64(3))
        v = 1.0 + c * x
        ok = v > 0.0
        v = np.where(ok, v, 1.0) ** 3
        ok &= np.log(u) < 0.5 * x * x + d - d * v + d * np.log(v)
        done = pending[ok]
        out[done] = d * v[ok] * boost[done] * scale
        pending = pending[~ok]
        r += 1
    return out


def geometric_variates(seed, ids, eta):
    with np.errstate(over="ignore"):
        return _geometric_from_keys(_keys(seed, ids), eta).reshape(np.shape(ids))


def gamma_variates(seed, ids, shape, scale):
    with np.errstate(over="ignore"):
        return _gamma_from_keys(_keys(seed, ids), shape, scale).reshape(np.shape(ids))


def draw_attempts(seed, sample_start, n_samples, n_users, eta, phase):
    samples = np.arange(sample_start, sample_start + n_samples, dtype=np.uint64)[:, None]
    users = np.arange(n_users, dtype=np.uint64)[None, :]
    return geometric_variates(seed, stream_ids(samples, users, phase), eta)


def draw_backhaul(seed, sample_start, n_samples, cross_mask, shape, scale, phase):
    mask = np.asarray(cross_mask, dtype=bool)
    out = np.zeros((n_samples, mask.shape[0]))
    cross = np.flatnonzero(mask).astype(np.uint64)
    if cross.size and n_samples:
        samples = np.arange(sample_start, sample_start + n_samples, dtype=np.uint64)[:, None]
        ids = stream_ids(samples, cross[None, :], phase)
        out[:, mask] = gamma_variates(seed, ids, shape, scale)
    return out


def upload_maxima(attempts, backhaul, coef, bounds):
    attempts = np.asarray(attempts, dtype=np.int64)
    backhaul = np.asarray(backhaul, dtype=np.float64)
    coef = np.asarray(coef, dtype=np.float64)
    bounds = np.asarray(bounds, dtype=np.int64).reshape(-1, 2)
    n_samples = attempts.shape[0]
    maxima = np.zeros((n_samples, bounds.shape[0]))
    argmax = np.full((n_samples, bounds.shape[0]), -1, dtype=np.int64)
    for g, (lo, hi) in enumerate(bounds):
        if hi <= lo:
            continue
        vals = attempts[:, lo:hi].astype(np.float64) * coef[lo:hi] + backhaul[:, lo:hi]
        idx = np.argmax(vals, axis=1)
        maxima[:, g] = vals[np.arange(n_samples), idx]
        argmax[:, g] = idx + lo
    return maxima, argmax
