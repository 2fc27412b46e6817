import numpy as np
import pytest

from vrlatency import kernels, _kernels_py

from conftest import available_backends
from oracles import reference_uniform

needs_cython = pytest.mark.skipif("cython" not in available_backends(),
                                  reason="compiled extension not built")


@pytest.mark.parametrize("seed,sample,user,phase,counter", [
    (0, 0, 0, 1, 0), (7, 3, 5, 1, 2), (2 ** 64 - 1, 10 ** 9, 49, 2, 31), (12345, 99999, 0, 3, 7),
])
def test_stream_formula_matches_reference(backend, seed, sample, user, phase, counter):
    sid = kernels.stream_ids(np.uint64(sample), np.uint64(user), phase)
    u = kernels.uniforms(seed, sid, np.uint64(counter))
    assert float(u) == reference_uniform(seed, sample, user, phase, counter)


def test_uniforms_open_interval(backend):
    ids = kernels.stream_ids(np.arange(10_000, dtype=np.uint64), np.uint64(0), 1)
    u = kernels.uniforms(3, ids, np.uint64(0))
    assert u.min() > 0.0 and u.max() < 1.0


@needs_cython
def test_backends_agree():
    cy = kernels.load_backend("cython")
    py = _kernels_py
    ids = py.stream_ids(np.arange(2000, dtype=np.uint64)[:, None], np.arange(7, dtype=np.uint64)[None, :], 1)
    assert np.array_equal(cy.stream_ids(np.arange(2000)[:, None], np.arange(7)[None, :], 1), ids)
    assert np.array_equal(cy.uniforms(11, ids, 4), py.uniforms(11, ids, 4))
    assert np.array_equal(cy.geometric_variates(11, ids, 0.3), py.geometric_variates(11, ids, 0.3))
    for shape in (0.3, 1.0, 2.5, 500.0):
        np.testing.assert_allclose(cy.gamma_variates(11, ids, shape, 2.0),
                                   py.gamma_variates(11, ids, shape, 2.0), rtol=1e-12)
    att_c = cy.draw_attempts(5, 100, 300, 20, 0.7, 1)
    assert np.array_equal(att_c, py.draw_attempts(5, 100, 300, 20, 0.7, 1))
    mask = np.zeros(20, np.uint8)
    mask[3:9] = 1
    bh_c = cy.draw_backhaul(5, 100, 300, mask, 500.0, 1e-5, 2)
    np.testing.assert_allclose(bh_c, py.draw_backhaul(5, 100, 300, mask, 500.0, 1e-5, 2), rtol=1e-12)
    coef = np.linspace(1e-3, 2e-3, 20)
    bounds = [(0, 9), (9, 20), (4, 4)]
    mc, ac = cy.upload_maxima(att_c, bh_c, coef, bounds)
    mp, ap = py.upload_maxima(att_c, bh_c, coef, bounds)
    assert np.array_equal(mc, mp) and np.array_equal(ac, ap)


def test_upload_maxima_ties_and_empty(backend):
    attempts = np.array([[2, 2, 1], [1, 3, 3]])
    backhaul = np.zeros((2, 3))
    coef = np.ones(3)
    maxima, argmax = kernels.upload_maxima(attempts, backhaul, coef, [(0, 3), (1, 1)])
    assert maxima[:, 0].tolist() == [2.0, 3.0]
    assert argmax[:, 0].tolist() == [0, 1]
    assert maxima[:, 1].tolist() == [0.0, 0.0]
    assert argmax[:, 1].tolist() == [-1, -1]


def test_draws_are_offset_consistent(backend):
    whole = kernels.draw_attempts(9, 0, 100, 4, 0.6, 1)
    tail = kernels.draw_attempts(9, 60, 40, 4, 0.6, 1)
    assert np.array_equal(whole[60:], tail)


def test_benchmark_script_runs():
    import pathlib
    import subprocess
    import sys

    script = pathlib.Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernels.py"
    out = subprocess.run([sys.executable, str(script), "--samples", "500", "--repeat", "1"],
                         capture_output=True, text=True, check=True).stdout
    assert "python" in out
