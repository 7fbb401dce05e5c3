"""Behavioral model of a hybrid DRAM/SRAM counting array.

Each channel owns a ring of ``n_s`` cells. Per time bin the oldest cell is
reset and reused: pulses charge its capacitor in fixed voltage jumps
(saturating at the supply), an SRAM latch binarizes the settled voltage at a
trip point, and the row's latched bits are charge-shared onto a detection
line that a comparator checks against a reference. Per-cell fabrication
mismatch enters as a relative spread of the voltage jump and an absolute
spread of the trip point, drawn once per Monte Carlo run.

With zero mismatch the array reproduces the count-threshold detector in
``event_neo`` exactly, because ``k`` pulses trip the latch iff
``k >= ceil(th_sram / dv_per_pulse)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import DetectionSet, EventStream, ValidationError, bin_events


@dataclass(frozen=True)
class HramParams:
    vdd: float = 1.0
    dv_per_pulse: float = 0.100
    th_sram: float = 0.600
    leak_v_per_s: float = 0.0
    n_s: int = 5
    th_det: int = 2
    t_bin_ns: int = 125_000
    refractory_ns: int = 1_000_000

    def __post_init__(self):
        if self.vdd <= 0 or self.dv_per_pulse <= 0:
            raise ValidationError("vdd and dv_per_pulse must be > 0")
        if not 0.0 < self.th_sram < self.vdd:
            raise ValidationError(f"th_sram must lie in (0, vdd), got {self.th_sram}")
        if self.leak_v_per_s < 0:
            raise ValidationError("leak_v_per_s must be >= 0")
        if self.n_s < 1:
            raise ValidationError("n_s must be >= 1")
        if not 1 <= self.th_det <= self.n_s:
            raise ValidationError(f"th_det must be in [1, n_s], got {self.th_det}")
        if self.t_bin_ns <= 0 or self.refractory_ns < self.t_bin_ns:
            raise ValidationError("need t_bin_ns > 0 and refractory_ns >= t_bin_ns")

    @property
    def leak_drop_v(self) -> float:
        """Voltage lost to leakage over one bin."""
        return self.leak_v_per_s * self.t_bin_ns / 1e9

    @property
    def v_ref(self) -> float:
        """Detection-line reference, midway between adjacent charge-share levels."""
        return (self.th_det - 0.5) * self.vdd / self.n_s

    def theta_bin_equivalent(self) -> int:
        """Pulse count that first trips the latch at nominal dv_per_pulse."""
        return int(math.ceil(self.th_sram / self.dv_per_pulse))


@dataclass(frozen=True)
class MismatchModel:
    """Per-cell spread of the voltage jump (relative) and trip point (volts)."""

    sigma_dv_rel: float = 0.05
    sigma_th_v: float = 0.020
    seed: int = 0

    def __post_init__(self):
        if self.sigma_dv_rel < 0 or self.sigma_th_v < 0:
            raise ValidationError("mismatch sigmas must be >= 0")

    def draw(self, n_cells: int, params: HramParams, rng) -> tuple[np.ndarray, np.ndarray]:
        """One mismatch realization: (dv_eff, th_eff) arrays of length n_cells."""
        dv_eff = params.dv_per_pulse * (1.0 + self.sigma_dv_rel * rng.standard_normal(n_cells))
        th_eff = params.th_sram + self.sigma_th_v * rng.standard_normal(n_cells)
        return dv_eff, th_eff


def nominal_cells(params: HramParams) -> tuple[np.ndarray, np.ndarray]:
    """Mismatch-free per-cell parameters."""
    return (
        np.full(params.n_s, params.dv_per_pulse),
        np.full(params.n_s, params.th_sram),
    )


@dataclass
class HramCell:
    dv_eff: float
    th_eff: float
    v_cap: float = 0.0
    bit: int = 0


@dataclass
class HramArrayState:
    """One channel's ring of cells plus detection bookkeeping."""

    params: HramParams
    cells: list[HramCell] = field(default_factory=list)
    pointer: int = 0
    last_detection_ns: int | None = None
    bins_processed: int = 0

    def __post_init__(self):
        if not self.cells:
            dv_eff, th_eff = nominal_cells(self.params)
            self.cells = [HramCell(dv, th) for dv, th in zip(dv_eff, th_eff)]
        if len(self.cells) != self.params.n_s:
            raise ValidationError("need exactly n_s cells")


def accumulate_phase(cell: HramCell, n_pulses: int, params: HramParams) -> float:
    """Charge the (reset) cell by n_pulses jumps, saturating at vdd, then leak."""
    if n_pulses < 0:
        raise ValidationError("pulse count must be >= 0")
    v = min(params.vdd, n_pulses * cell.dv_eff) - params.leak_drop_v
    cell.v_cap = min(max(v, 0.0), params.vdd)
    return cell.v_cap


def threshold_phase(cell: HramCell) -> int:
    """Latch the binarized capacitor voltage and clear the capacitor."""
    cell.bit = 1 if cell.v_cap >= cell.th_eff else 0
    cell.v_cap = 0.0
    return cell.bit


def detection_phase(cells, params: HramParams) -> tuple[float, bool]:
    """Charge-share the row's bits onto the detection line and compare."""
    bit_sum = sum(c.bit for c in cells)
    v_dl = bit_sum / params.n_s * params.vdd
    return v_dl, v_dl >= params.v_ref


def step_bin(state: HramArrayState, channel_bin_count: int, bin_index: int) -> int | None:
    """Process one bin: reset the oldest cell, accumulate, latch, compare.

    Returns the detection time (bin end, ns) when the comparator fires
    outside the refractory window, else None. Bins must be fed in order.
    """
    if bin_index != state.bins_processed:
        raise ValidationError(
            f"bins must be fed in order: expected {state.bins_processed}, got {bin_index}"
        )
    p = state.params
    cell = state.cells[state.pointer]
    cell.v_cap = 0.0
    cell.bit = 0
    accumulate_phase(cell, channel_bin_count, p)
    threshold_phase(cell)
    state.pointer = (state.pointer + 1) % p.n_s
    state.bins_processed += 1

    t_end = (bin_index + 1) * p.t_bin_ns
    if state.last_detection_ns is not None and t_end - state.last_detection_ns < p.refractory_ns:
        return None
    _, spike = detection_phase(state.cells, p)
    if spike:
        state.last_detection_ns = t_end
        return t_end
    return None


def run_counts(
    counts: np.ndarray,
    params: HramParams,
    dv_eff: np.ndarray | None = None,
    th_eff: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Full-array run over a bin-count sequence.

    Returns (detection times ns, peak capacitor voltage seen anywhere).
    """
    if dv_eff is None or th_eff is None:
        dv_eff, th_eff = nominal_cells(params)
    return kernels.hram_run(
        np.asarray(counts, dtype=np.int64),
        np.asarray(dv_eff, dtype=np.float64),
        np.asarray(th_eff, dtype=np.float64),
        params.vdd,
        params.leak_drop_v,
        params.th_det,
        params.t_bin_ns,
        params.refractory_ns,
    )


def detect(
    stream: EventStream,
    params: HramParams,
    dv_eff: np.ndarray | None = None,
    th_eff: np.ndarray | None = None,
    duration_ns: int | None = None,
) -> DetectionSet:
    """Detector interface matching event_neo.detect, on the array model."""
    counts = bin_events(stream, params.t_bin_ns, duration_ns=duration_ns)
    if duration_ns is None and counts.size:
        counts = np.concatenate([counts, np.zeros(params.n_s - 1, dtype=counts.dtype)])
    times, _ = run_counts(counts, params, dv_eff, th_eff)
    return DetectionSet(times, min_gap_ns=params.refractory_ns)


def monte_carlo_peaks(
    noise_input: EventStream,
    spike_input: EventStream,
    params: HramParams,
    mismatch: MismatchModel,
    runs: int,
    duration_ns: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Peak capacitor voltage per mismatch realization, for both inputs.

    Each run draws a fresh set of per-cell parameters and simulates the
    accumulation of both segments; returns (noise_peaks, spike_peaks).
    Deterministic given mismatch.seed.
    """
    if runs < 1:
        raise ValidationError("runs must be >= 1")
    noise_counts = bin_events(noise_input, params.t_bin_ns, duration_ns=duration_ns)
    spike_counts = bin_events(spike_input, params.t_bin_ns, duration_ns=duration_ns)
    noise_peaks = np.empty(runs)
    spike_peaks = np.empty(runs)
    for run, child in enumerate(np.random.SeedSequence(mismatch.seed).spawn(runs)):
        rng = np.random.default_rng(child)
        dv_eff, th_eff = mismatch.draw(params.n_s, params, rng)
        _, noise_peaks[run] = run_counts(noise_counts, params, dv_eff, th_eff)
        _, spike_peaks[run] = run_counts(spike_counts, params, dv_eff, th_eff)
    return noise_peaks, spike_peaks
