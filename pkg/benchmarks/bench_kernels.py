"""Throughput comparison of the compiled and pure-numpy kernel backends.

Runs the three hot loops (delta modulation, windowed pulse-count detection,
HRAM row stepping) plus the refractory walk on a realistic 6 s recording
and reports per-call medians for both backends. The numba path is called
once before timing so compilation cost is not mixed into the numbers.

Usage: python benchmarks/bench_kernels.py [--repeats N] [--noise-level S]
"""

import argparse
import time
import statistics

import numpy as np

from ebnr_spd import DmConfig, GenConfig, default_templates, generate_recording, modulate
from ebnr_spd.core import bin_events
from ebnr_spd.hram_model import HramParams, nominal_cells
from ebnr_spd.kernels import get_backend


def time_call(fn, repeats):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7, help="timed repeats per kernel")
    ap.add_argument("--noise-level", type=float, default=0.1, help="recording noise std")
    args = ap.parse_args()

    gen = GenConfig(noise_level=args.noise_level, seed=0)
    signal, _ = generate_recording(default_templates(), gen)
    dm = DmConfig().resolved_for(signal)
    stream = modulate(signal, dm)
    counts = bin_events(stream, 125_000, duration_ns=signal.duration_ns)
    hp = HramParams()
    dv_eff, th_eff = nominal_cells(hp)
    times_ns = np.sort(
        np.random.default_rng(0).integers(0, signal.duration_ns, size=5000)
    ).astype(np.int64)

    cases = {
        "delta_mod_counts": lambda k: k.delta_mod_counts(
            signal.samples, dm.initial_level, dm.delta
        ),
        "detect_from_counts": lambda k: k.detect_from_counts(
            counts, 6, 5, 2, 125_000, 1_000_000
        ),
        "hram_run": lambda k: k.hram_run(
            counts, dv_eff, th_eff, hp.vdd, hp.leak_drop_v, hp.th_det,
            hp.t_bin_ns, hp.refractory_ns,
        ),
        "refractory_walk": lambda k: k.refractory_walk(times_ns, 1_000_000),
    }

    backends = {}
    for name in ("numpy", "numba"):
        try:
            backends[name] = get_backend(name)
        except (ImportError, ValueError):
            print(f"backend {name}: unavailable, skipped")

    print(f"signal: {signal.n_samples} samples, {len(stream)} pulses, "
          f"{counts.size} bins, noise {args.noise_level:g}")
    print(f"{'kernel':<20} " + " ".join(f"{b:>12}" for b in backends) +
          ("      speedup" if len(backends) == 2 else ""))
    for label, call in cases.items():
        meds = {}
        for bname, mod in backends.items():
            call(mod)  # warm-up (JIT compile on the numba path)
            meds[bname] = time_call(lambda: call(mod), args.repeats)
        row = f"{label:<20} " + " ".join(f"{meds[b] * 1e3:>10.3f}ms" for b in backends)
        if len(meds) == 2:
            row += f"   {meds['numpy'] / meds['numba']:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
