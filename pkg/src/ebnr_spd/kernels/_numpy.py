"""Pure numpy/Python reference implementations of the hot kernels.

These are the fallback path (``EBNR_SPD_NO_NUMBA=1`` or numba missing) and
the ground truth the numba versions are tested against. Semantics are
bit-identical between backends.
"""

import numpy as np


def delta_mod_counts(samples, initial_level, delta):
    """Per-sample ON/OFF pulse counts of an ideal delta modulator.

    The tracking level is ``initial_level + net * delta`` where ``net`` is the
    running ON-minus-OFF count; representing the level this way keeps the
    polarity-balance identity exact in floats. Sample 0 initializes the
    modulator and never emits. Per sample the level moves toward the input
    one delta at a time: upward while ``x - L >= delta`` (ON pulses),
    downward while ``L - x >= delta`` (OFF pulses), which closes at
    ``net = floor(r)`` resp. ``ceil(r)`` for ``r = (x - initial_level)/delta``.
    """
    n = samples.shape[0]
    on = np.zeros(n, dtype=np.int64)
    off = np.zeros(n, dtype=np.int64)
    r = (samples - initial_level) / delta
    up = np.floor(r).astype(np.int64)
    down = np.ceil(r).astype(np.int64)
    net = np.int64(0)
    for k in range(1, n):
        if net < up[k]:
            on[k] = up[k] - net
            net = up[k]
        elif net > down[k]:
            off[k] = net - down[k]
            net = down[k]
    return on, off


def detect_from_counts(counts, theta_bin, n_s, th_det, t_bin_ns, refractory_ns):
    """Two-stage threshold detector over per-bin pulse counts.

    Bin k is binarized at ``counts[k] >= theta_bin``; the trailing ``n_s``
    bits (zero history before bin 0) are summed and compared against
    ``th_det``. Bins whose end time falls inside the refractory window of the
    previous detection are not evaluated at all. Detections are stamped at
    the end of the triggering bin.
    """
    n_bins = counts.shape[0]
    bits = counts >= theta_bin
    # trailing window sum with implicit zero history before bin 0
    csum = np.concatenate(([0], np.cumsum(bits.astype(np.int64))))
    lo = np.maximum(np.arange(n_bins) - n_s + 1, 0)
    wsum = csum[1:] - csum[lo]
    candidates = np.nonzero(wsum >= th_det)[0]
    out = []
    last = np.int64(-(1 << 62))
    for k in candidates:
        t_end = np.int64(k + 1) * t_bin_ns
        if t_end - last >= refractory_ns:
            out.append(t_end)
            last = t_end
    return np.array(out, dtype=np.int64)


def hram_run(counts, dv_eff, th_eff, vdd, leak_drop_v, th_det, t_bin_ns, refractory_ns):
    """Step the HRAM row over a sequence of bin counts.

    Per bin: the cell at the circular pointer is reset, accumulates
    ``counts[k]`` voltage jumps (clamped at ``vdd``) minus the per-bin leak
    drop, latches its bit at that cell's trip voltage, and the row's bit sum
    is compared against ``th_det`` (equivalent to the detection-line voltage
    comparison) under the same refractory gating as the event detector.

    Returns ``(detection_times, peak_v)`` where ``peak_v`` is the maximum
    capacitor voltage seen over the whole run.
    """
    n_bins = counts.shape[0]
    n_s = dv_eff.shape[0]
    bits = np.zeros(n_s, dtype=np.int64)
    out = []
    last = np.int64(-(1 << 62))
    wsum = 0
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
            out.append(t_end)
            last = t_end
    return np.array(out, dtype=np.int64), peak_v


def refractory_walk(times_ns, refractory_ns):
    """Chronological refractory walk: keep each time that is at least
    ``refractory_ns`` past the previously kept one."""
    out = []
    last = -(1 << 62)
    for t in times_ns:
        if t - last >= refractory_ns:
            out.append(t)
            last = t
    return np.array(out, dtype=np.int64)
