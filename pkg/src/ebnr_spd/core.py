"""Shared domain types, event binning and file formats.

Conventions used throughout the package:

- Time is integer nanoseconds. Sample k of a trace sits at
  ``t0_ns + floor(k * 1e9 / sample_rate_hz)``.
- Amplitudes are dimensionless, normalized so a spike peak is ~1.0.
- Events falling exactly on a bin boundary belong to the later bin
  (half-open ``[k*t_bin, (k+1)*t_bin)`` intervals).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

NS_PER_S = 1_000_000_000

ON = 1
OFF = -1


class ValidationError(ValueError):
    """Raised when a domain object or input file violates an invariant."""


class ParseError(ValueError):
    """Raised when an input file cannot be parsed; message carries location."""


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled amplitude trace (normalized to unit spike peak)."""

    samples: np.ndarray
    sample_rate_hz: float = 24000.0
    t0_ns: int = 0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate_hz <= 0:
            raise ValidationError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if samples.ndim != 1 or samples.size < 1:
            raise ValidationError("samples must be a 1-D sequence with length >= 1")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("samples contain NaN or Inf")

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_ns(self) -> int:
        return int(np.floor(self.n_samples * NS_PER_S / self.sample_rate_hz))

    def times_ns(self) -> np.ndarray:
        """Timestamps of every sample, int64 nanoseconds."""
        k = np.arange(self.n_samples, dtype=np.float64)
        return self.t0_ns + np.floor(k * (NS_PER_S / self.sample_rate_hz)).astype(np.int64)


class Event(NamedTuple):
    """A single ON/OFF pulse."""

    t_ns: int
    polarity: int  # ON (+1) or OFF (-1)


@dataclass(frozen=True)
class EventStream:
    """Time-ordered ON/OFF pulse train for one channel.

    Stored as parallel arrays (int64 timestamps, int8 polarities) so the
    detection kernels can consume them directly.
    """

    t_ns: np.ndarray
    polarity: np.ndarray
    channel: int = 0

    def __post_init__(self):
        t = np.asarray(self.t_ns, dtype=np.int64)
        p = np.asarray(self.polarity, dtype=np.int8)
        object.__setattr__(self, "t_ns", t)
        object.__setattr__(self, "polarity", p)
        if t.shape != p.shape or t.ndim != 1:
            raise ValidationError("t_ns and polarity must be 1-D arrays of equal length")
        if t.size and np.any(np.diff(t) < 0):
            raise ValidationError("event stream is not sorted by t_ns")
        if t.size and t[0] < 0:
            raise ValidationError("event timestamps must be non-negative")
        if p.size and not np.all(np.isin(p, (ON, OFF))):
            raise ValidationError("polarity values must be +1 (ON) or -1 (OFF)")

    def __len__(self) -> int:
        return int(self.t_ns.size)

    def __iter__(self):
        for t, p in zip(self.t_ns.tolist(), self.polarity.tolist()):
            yield Event(t, p)

    @classmethod
    def empty(cls, channel: int = 0) -> "EventStream":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int8), channel)


def _check_spike_times(times: np.ndarray, what: str, min_gap_ns: int | None) -> np.ndarray:
    times = np.asarray(times, dtype=np.int64)
    if times.ndim != 1:
        raise ValidationError(f"{what} times must be a 1-D sequence")
    if times.size:
        gaps = np.diff(times)
        if np.any(gaps <= 0):
            raise ValidationError(f"{what} times must be strictly increasing")
        if min_gap_ns is not None and np.any(gaps < min_gap_ns):
            raise ValidationError(f"{what} times violate the minimum gap of {min_gap_ns} ns")
    return times


@dataclass(frozen=True)
class GroundTruth:
    """Sorted spike peak times of the generator, in nanoseconds."""

    spike_times_ns: np.ndarray
    min_gap_ns: int | None = None

    def __post_init__(self):
        times = _check_spike_times(self.spike_times_ns, "ground-truth spike", self.min_gap_ns)
        object.__setattr__(self, "spike_times_ns", times)

    def __len__(self) -> int:
        return int(self.spike_times_ns.size)


@dataclass(frozen=True)
class DetectionSet:
    """Sorted detector output times, in nanoseconds."""

    detected_times_ns: np.ndarray
    min_gap_ns: int | None = None

    def __post_init__(self):
        times = _check_spike_times(self.detected_times_ns, "detection", self.min_gap_ns)
        object.__setattr__(self, "detected_times_ns", times)

    def __len__(self) -> int:
        return int(self.detected_times_ns.size)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def bin_events(stream: EventStream, t_bin_ns: int, duration_ns: int | None = None) -> np.ndarray:
    """Count events (both polarities) per ``t_bin_ns`` bin.

    ``count[k]`` is the number of events with ``k*t_bin_ns <= t < (k+1)*t_bin_ns``.
    When ``duration_ns`` is given the result spans ``ceil(duration/t_bin)`` bins
    so trailing silence is represented; otherwise it runs through the bin of
    the last event.
    """
    if t_bin_ns <= 0:
        raise ValidationError(f"t_bin_ns must be > 0, got {t_bin_ns}")
    n_bins = 0
    if duration_ns is not None:
        n_bins = int(-(-int(duration_ns) // int(t_bin_ns)))
    if len(stream) == 0:
        return np.zeros(n_bins, dtype=np.int64)
    idx = stream.t_ns // t_bin_ns
    n_bins = max(n_bins, int(idx[-1]) + 1)
    return np.bincount(idx, minlength=n_bins).astype(np.int64)


def normalize_signal(signal: SampledSignal, spike_peak: float) -> SampledSignal:
    """Rescale a trace by ``1/spike_peak`` so the spike peak is 1.0."""
    if spike_peak <= 0:
        raise ValidationError(f"spike_peak must be > 0, got {spike_peak}")
    return replace(signal, samples=signal.samples / spike_peak)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------
# - Event file: CSV with header "t_ns,polarity", polarity in {+1, -1}.
# - Signal file: CSV "t_s,amplitude", or raw little-endian float32 with a
#   key = value sidecar ("<path>.meta") declaring sample_rate_hz and t0_ns.
# - Spike-time file: one integer nanosecond per line.

def save_events_csv(stream: EventStream, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write("t_ns,polarity\n")
        for t, p in zip(stream.t_ns.tolist(), stream.polarity.tolist()):
            fh.write(f"{t},{p:+d}\n")


def load_events_csv(path: str | Path, channel: int = 0) -> EventStream:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if header != "t_ns,polarity":
            raise ParseError(f"{path}:1: expected header 't_ns,polarity', got {header!r}")
        ts, ps = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                t_str, p_str = line.split(",")
                ts.append(int(t_str))
                ps.append(int(p_str))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad event row {line!r}") from exc
    try:
        return EventStream(np.array(ts, dtype=np.int64), np.array(ps, dtype=np.int8), channel)
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _write_keyvalue(path: Path, pairs: dict) -> None:
    with path.open("w") as fh:
        for key, value in pairs.items():
            fh.write(f"{key} = {value}\n")


def _read_keyvalue(path: Path) -> dict:
    pairs = {}
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
    return pairs


def save_signal(signal: SampledSignal, path: str | Path) -> None:
    """Write a trace either as CSV (``.csv``) or raw little-endian float32
    plus a ``<path>.meta`` sidecar (any other extension)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        times_s = signal.times_ns() / NS_PER_S
        with path.open("w") as fh:
            fh.write("t_s,amplitude\n")
            for t, a in zip(times_s, signal.samples):
                fh.write(f"{t:.9f},{float(a)!r}\n")
    else:
        signal.samples.astype("<f4").tofile(path)
        _write_keyvalue(
            path.with_name(path.name + ".meta"),
            {
                "sample_rate_hz": repr(float(signal.sample_rate_hz)),
                "t0_ns": int(signal.t0_ns),
                "n_samples": signal.n_samples,
            },
        )


def load_signal(path: str | Path) -> SampledSignal:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    if path.suffix.lower() == ".csv":
        ts, amps = [], []
        with path.open() as fh:
            header = fh.readline().strip()
            if header != "t_s,amplitude":
                raise ParseError(f"{path}:1: expected header 't_s,amplitude', got {header!r}")
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    t_str, a_str = line.split(",")
                    ts.append(float(t_str))
                    amps.append(float(a_str))
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: bad sample row {line!r}") from exc
        if len(ts) < 2:
            raise ParseError(f"{path}: need at least 2 samples to infer the sample rate")
        dt = np.median(np.diff(ts))
        if dt <= 0:
            raise ParseError(f"{path}: time column is not increasing")
        rate = 1.0 / dt
        return SampledSignal(np.array(amps), sample_rate_hz=rate, t0_ns=int(round(ts[0] * NS_PER_S)))
    meta_path = path.with_name(path.name + ".meta")
    if not meta_path.exists():
        raise ParseError(f"{meta_path}: sidecar not found for raw signal file")
    meta = _read_keyvalue(meta_path)
    try:
        rate = float(meta["sample_rate_hz"])
        t0 = int(meta["t0_ns"])
    except KeyError as exc:
        raise ParseError(f"{meta_path}: missing required key {exc}") from exc
    samples = np.fromfile(path, dtype="<f4").astype(np.float64)
    return SampledSignal(samples, sample_rate_hz=rate, t0_ns=t0)


def save_spike_times(times_ns: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for t in np.asarray(times_ns, dtype=np.int64).tolist():
            fh.write(f"{t}\n")


def load_spike_times(path: str | Path) -> np.ndarray:
    path = Path(path)
    times = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                times.append(int(line))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: expected an integer, got {line!r}") from exc
    arr = np.array(times, dtype=np.int64)
    if arr.size and np.any(np.diff(arr) <= 0):
        raise ParseError(f"{path}: spike times must be strictly increasing")
    return arr
