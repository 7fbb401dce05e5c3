"""Software NEO spike detector on sampled signals.

The discrete Teager energy operator psi[n] = x[n]^2 - x[n-1]*x[n+1] is
smoothed with Bartlett-shaped weights and compared against a threshold set
as a multiple of its mean. Local maxima above threshold, spaced by a
refractory period, are reported as detections. Runs on the original
recording or on a stair-step reconstruction from a pulse stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import DetectionSet, SampledSignal, ValidationError


@dataclass(frozen=True)
class NeoParams:
    smooth_window: int = 7
    threshold_multiplier: float = 8.0
    refractory_ns: int = 1_000_000

    def __post_init__(self):
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValidationError("smooth_window must be an odd positive integer")
        if self.threshold_multiplier <= 0:
            raise ValidationError("threshold_multiplier must be > 0")
        if self.refractory_ns < 0:
            raise ValidationError("refractory_ns must be >= 0")


def neo(signal: SampledSignal) -> np.ndarray:
    """Teager energy of the signal; endpoints are set to 0."""
    x = signal.samples
    if x.size < 3:
        raise ValidationError("need at least 3 samples for the energy operator")
    psi = np.zeros_like(x)
    psi[1:-1] = x[1:-1] ** 2 - x[:-2] * x[2:]
    return psi


def smoothed_neo(signal: SampledSignal, p: NeoParams) -> np.ndarray:
    """Teager energy convolved with normalized Bartlett weights."""
    psi = neo(signal)
    if p.smooth_window == 1:
        return psi
    w = np.bartlett(p.smooth_window)
    return np.convolve(psi, w / w.sum(), mode="same")


def detect_neo(signal: SampledSignal, p: NeoParams) -> DetectionSet:
    """Threshold the smoothed energy at C times its mean.

    Detections sit at local maxima strictly above threshold (strict, so an
    all-zero signal yields none), then pass a chronological refractory walk.
    The detection time is the peak sample's timestamp.
    """
    return detect_from_smoothed(smoothed_neo(signal, p), signal.times_ns(), p)


def detect_from_smoothed(s: np.ndarray, times_ns: np.ndarray, p: NeoParams) -> DetectionSet:
    """Detection stage alone, for callers that sweep the multiplier over one
    precomputed smoothed-energy trace."""
    threshold = p.threshold_multiplier * s.mean()
    interior = s[1:-1]
    is_peak = (interior > s[:-2]) & (interior > s[2:]) & (interior > threshold)
    idx = np.flatnonzero(is_peak) + 1
    times = times_ns[idx]
    if p.refractory_ns > 0:
        times = kernels.refractory_walk(times, p.refractory_ns)
    return DetectionSet(times, min_gap_ns=p.refractory_ns if p.refractory_ns > 0 else None)
