#!/usr/bin/env python3
"""Time the compiled filter kernels against the numpy fallback.

Runs the same estimates through both backends (identical draws, so the
results agree to round-off) and prints the per-call timings and speedup.

    python3 benchmarks/bench_backends.py [--repeats 20]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ssmsmc import DamperConfig, DamperModel, RngStream, ScalarLgss, bootstrap_pf, fully_adapted_apf
from ssmsmc import _kernels
from ssmsmc.damper import THETA_TRUE


def _time(fn, repeats: int) -> tuple[float, float]:
    values = []
    t0 = time.perf_counter()
    for r in range(repeats):
        values.append(fn(r))
    elapsed = (time.perf_counter() - t0) / repeats
    return elapsed, float(np.mean(values))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _kernels.backend() != "compiled":
        raise SystemExit(
            "compiled kernels are not available in this install; "
            "nothing to compare (reinstall with a working C compiler)"
        )

    damper = DamperModel(DamperConfig(horizon=500))
    damper_data = damper.simulate(seed=1, horizon=500)
    lgss = ScalarLgss()
    lgss_data = lgss.simulate(400, seed=2)
    lgss_theta = lgss.theta_true()

    cases = [
        (
            "bootstrap damper T=500 N=256",
            lambda r: bootstrap_pf(
                damper, THETA_TRUE, damper_data, 256, RngStream(9).child(r)
            )[0].log_z,
        ),
        (
            "bootstrap lgss   T=400 N=500",
            lambda r: bootstrap_pf(
                lgss, lgss_theta, lgss_data, 500, RngStream(9).child(r)
            )[0].log_z,
        ),
        (
            "adapted APF lgss T=400 N=500",
            lambda r: fully_adapted_apf(
                lgss, lgss_theta, lgss_data, 500, RngStream(9).child(r)
            ).log_z,
        ),
    ]

    print(f"{'case':32s} {'compiled':>12s} {'numpy':>12s} {'speedup':>8s}  agreement")
    for name, fn in cases:
        _kernels.force_backend("compiled")
        t_c, mean_c = _time(fn, args.repeats)
        _kernels.force_backend("python")
        t_py, mean_py = _time(fn, args.repeats)
        _kernels.force_backend("compiled")
        print(
            f"{name:32s} {t_c * 1e3:10.2f}ms {t_py * 1e3:10.2f}ms "
            f"{t_py / t_c:7.1f}x  |dlogz|={abs(mean_c - mean_py):.2e}"
        )


if __name__ == "__main__":
    main()
