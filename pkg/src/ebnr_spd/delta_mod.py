"""Ideal delta modulator: sampled signal -> ON/OFF event stream -> staircase.

The modulator is the noise-free abstraction of the event-based recording
frontend: one ON (OFF) pulse each time the input has risen (fallen) by a
fixed step ``delta`` since the last pulse. Comparisons run from sample 1;
sample 0 only initializes the tracking level (default: the first sample).

Pulses triggered by sample k are stamped inside the interval that ends at
sample k's timestamp, the last pulse exactly at it and earlier ones spaced
``pulse_width_ns`` apart backwards. That keeps every pulse caused by sample
k at ``t <= t_k``, so the staircase value at any sample time is the
modulator's tracking level at that sample.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .core import EventStream, SampledSignal, ValidationError


class SlewOverflowError(ValueError):
    """Input moved faster than pulses can be emitted within one sample interval."""


@dataclass(frozen=True)
class DmConfig:
    """Delta-modulator settings (amplitudes in normalized units)."""

    delta: float = 0.05
    pulse_width_ns: int = 1
    initial_level: float | None = None  # None: use the first sample

    def __post_init__(self):
        if self.delta <= 0:
            raise ValidationError(f"delta must be > 0, got {self.delta}")
        if self.pulse_width_ns <= 0:
            raise ValidationError(f"pulse_width_ns must be > 0, got {self.pulse_width_ns}")

    def resolved_for(self, signal: SampledSignal) -> "DmConfig":
        """Pin ``initial_level`` to the signal's first sample if unset."""
        if self.initial_level is not None:
            return self
        return replace(self, initial_level=float(signal.samples[0]))


def modulate(signal: SampledSignal, cfg: DmConfig) -> EventStream:
    """Encode a sampled trace into a sorted ON/OFF event stream."""
    cfg = cfg.resolved_for(signal)
    on, off = kernels.delta_mod_counts(signal.samples, cfg.initial_level, cfg.delta)
    m = on + off
    t = signal.times_ns()
    pw = np.int64(cfg.pulse_width_ns)

    if signal.n_samples > 1:
        dt = np.diff(t)
        over = np.nonzero(m[1:] * pw > dt)[0]
        if over.size:
            k = int(over[0]) + 1
            raise SlewOverflowError(
                f"sample {k}: {int(m[k])} pulses x {cfg.pulse_width_ns} ns "
                f"exceed the {int(dt[k - 1])} ns sample interval"
            )

    total = int(m.sum())
    if total == 0:
        return EventStream.empty()
    starts = np.cumsum(m) - m
    within = np.arange(total, dtype=np.int64) - np.repeat(starts, m)
    t_ev = np.repeat(t, m) - (np.repeat(m, m) - 1 - within) * pw
    pol = np.repeat(np.where(on > 0, 1, -1).astype(np.int8), m)
    return EventStream(t_ev, pol)


def reconstruct(
    stream: EventStream,
    cfg: DmConfig,
    n_samples: int,
    sample_rate_hz: float,
    t0_ns: int = 0,
) -> SampledSignal:
    """Stair-step reconstruction sampled on a uniform grid.

    Sample n takes the value ``initial_level + delta * net(t_n)`` where
    ``net(t)`` counts ON minus OFF pulses with timestamps ``<= t``.
    ``cfg.initial_level`` must be pinned (see ``DmConfig.resolved_for``);
    the stream alone does not know the encoder's starting level.
    """
    if cfg.initial_level is None:
        raise ValidationError("reconstruct needs cfg.initial_level pinned to the encoder's value")
    grid = SampledSignal(np.zeros(n_samples), sample_rate_hz=sample_rate_hz, t0_ns=t0_ns)
    t_grid = grid.times_ns()
    if len(stream) == 0:
        return replace(grid, samples=np.full(n_samples, cfg.initial_level, dtype=np.float64))
    net = np.cumsum(stream.polarity.astype(np.int64))
    idx = np.searchsorted(stream.t_ns, t_grid, side="right")
    net_at = np.where(idx > 0, net[np.maximum(idx - 1, 0)], 0)
    samples = cfg.initial_level + cfg.delta * net_at
    return replace(grid, samples=samples)
