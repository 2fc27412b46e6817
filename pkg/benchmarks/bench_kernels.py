"""Compare the compiled and pure-Python kernel backends.

Usage: ``python3 benchmarks/bench_kernels.py [--samples 100000] [--repeat 3]``

Times upload-scenario drawing and the per-sample maxima for the symmetric
N = 50 configuration and checks that both backends agree.
"""

import argparse
import time

import numpy as np

from vrlatency import kernels
from vrlatency.harness import symmetric_configuration
from vrlatency.model import ScenarioConfig, derive_channel
from vrlatency.optimize import equal_uplink
from vrlatency.sampling import PHASE_UP_ATTEMPTS, PHASE_UP_BACKHAUL, backhaul_params, user_layout


def run(backend, cfg, users, samples):
    layout = user_layout(users)
    shape, scale = backhaul_params(cfg, cfg.msg_bits_up)
    coef = derive_channel(cfg, users).a / equal_uplink(users, cfg.bandwidth_up)[layout.community, layout.bs]
    timings = {}
    t0 = time.perf_counter()
    attempts = backend.draw_attempts(0, 0, samples, users.total, cfg.target_success, PHASE_UP_ATTEMPTS)
    timings["attempts"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    backhaul = backend.draw_backhaul(0, 0, samples, layout.cross, shape, scale, PHASE_UP_BACKHAUL)
    timings["backhaul"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    maxima, _ = backend.upload_maxima(attempts, backhaul, coef, layout.bounds)
    timings["maxima"] = time.perf_counter() - t0
    return timings, maxima


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--rho", type=float, default=0.48)
    args = p.parse_args()

    cfg = ScenarioConfig.from_db()
    users = symmetric_configuration(cfg.total_users, args.rho)
    names = ["python"]
    try:
        kernels.load_backend("cython")
        names.insert(0, "cython")
    except ImportError:
        print("compiled backend not built; timing the fallback only")

    results = {}
    for name in names:
        backend = kernels.load_backend(name)
        best = None
        for _ in range(args.repeat):
            timings, maxima = run(backend, cfg, users, args.samples)
            if best is None or sum(timings.values()) < sum(best.values()):
                best = timings
        results[name] = (best, maxima)
        parts = "  ".join(f"{k} {v * 1e3:8.1f} ms" for k, v in best.items())
        print(f"{name:7s} {parts}  total {sum(best.values()) * 1e3:8.1f} ms")

    if len(results) == 2:
        a, b = results["cython"][1], results["python"][1]
        speedup = sum(results["python"][0].values()) / sum(results["cython"][0].values())
        print(f"speedup {speedup:.2f}x, max relative difference in maxima "
              f"{float(np.max(np.abs(a - b) / np.abs(b))):.1e}")


if __name__ == "__main__":
    main()
