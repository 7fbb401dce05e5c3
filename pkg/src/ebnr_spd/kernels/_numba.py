"""Numba-compiled hot kernels; semantics identical to ``_numpy``.

All loops are sequential by nature (tracking level, refractory state,
circular pointer), which is exactly where @njit pays off. ``cache=True``
persists compilation across processes so CLI runs do not re-JIT.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def delta_mod_counts(samples, initial_level, delta):
    n = samples.shape[0]
    on = np.zeros(n, dtype=np.int64)
    off = np.zeros(n, dtype=np.int64)
    net = np.int64(0)
    for k in range(1, n):
        r = (samples[k] - initial_level) / delta
        up = np.int64(math.floor(r))
        down = np.int64(math.ceil(r))
        if net < up:
            on[k] = up - net
            net = up
        elif net > down:
            off[k] = net - down
            net = down
    return on, off


@njit(cache=True, nogil=True)
def detect_from_counts(counts, theta_bin, n_s, th_det, t_bin_ns, refractory_ns):
    n_bins = counts.shape[0]
    ring = np.zeros(n_s, dtype=np.int64)
    out = np.empty(n_bins, dtype=np.int64)
    n_out = 0
    wsum = 0
    last = np.int64(-(1 << 62))
    for k in range(n_bins):
        bit = 1 if counts[k] >= theta_bin else 0
        cell = k % n_s
        wsum += bit - ring[cell]
        ring[cell] = bit
        t_end = np.int64(k + 1) * t_bin_ns
        if t_end - last >= refractory_ns and wsum >= th_det:
            out[n_out] = t_end
            n_out += 1
            last = t_end
    return out[:n_out].copy()


@njit(cache=True, nogil=True)
def hram_run(counts, dv_eff, th_eff, vdd, leak_drop_v, th_det, t_bin_ns, refractory_ns):
    n_bins = counts.shape[0]
    n_s = dv_eff.shape[0]
    bits = np.zeros(n_s, dtype=np.int64)
    out = np.empty(n_bins, dtype=np.int64)
    n_out = 0
    wsum = 0
    last = np.int64(-(1 << 62))
    peak_v = 0.0
    for k in range(n_bins):
        cell = k % n_s
        v = counts[k] * dv_eff[cell]
        if v > vdd:
            v = vdd
        v -= leak_drop_v
        if v < 0.0:
            v = 0.0
        if v > peak_v:
            peak_v = v
        bit = 1 if v >= th_eff[cell] else 0
        wsum += bit - bits[cell]
        bits[cell] = bit
        t_end = np.int64(k + 1) * t_bin_ns
        if t_end - last >= refractory_ns and wsum >= th_det:
            out[n_out] = t_end
            n_out += 1
            last = t_end
    return out[:n_out].copy(), peak_v


@njit(cache=True, nogil=True)
def refractory_walk(times_ns, refractory_ns):
    n = times_ns.shape[0]
    out = np.empty(n, dtype=np.int64)
    n_out = 0
    last = np.int64(-(1 << 62))
    for i in range(n):
        t = times_ns[i]
        if t - last >= refractory_ns:
            out[n_out] = t
            n_out += 1
            last = t
    return out[:n_out].copy()