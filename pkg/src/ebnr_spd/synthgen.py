"""Synthetic extracellular recordings: templates placed by a thinned Poisson
process over spike-shaped (or band-limited Gaussian) background noise.

Conventions: spike templates are unit-peak, recordings are therefore already
normalized, and the noise level ``noise_level`` is the noise standard
deviation relative to that unit peak. Noise is rescaled post hoc so the
requested std is exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .core import (
    NS_PER_S,
    GroundTruth,
    SampledSignal,
    ValidationError,
    load_signal,
    load_spike_times,
    save_signal,
    save_spike_times,
)

TEMPLATE_SUPERPOSITION = "template_superposition"
BANDLIMITED_GAUSSIAN = "bandlimited_gaussian"

# Background activity for the template-superposition noise model: a dense
# mixture of distant-unit firings. Distant units arrive attenuated and
# broadened (tissue filtering), so each noise event is a randomly selected
# template scaled both in amplitude and in duration. The mixture is rescaled
# to the requested std afterwards, so these only shape the texture.
NOISE_EVENT_RATE_HZ = 6000.0
NOISE_DILATION_FACTORS = (1.7, 2.3, 2.85)
NOISE_AMP_RANGE = (0.3, 1.0)

NOISE_LOWPASS_HZ = 3000.0


@dataclass(frozen=True)
class SpikeTemplate:
    """Unit-peak spike waveform sampled at the recording rate."""

    waveform: np.ndarray
    peak_index: int = -1  # -1: locate the absolute peak
    name: str = ""

    def __post_init__(self):
        w = np.asarray(self.waveform, dtype=np.float64)
        object.__setattr__(self, "waveform", w)
        if w.ndim != 1 or w.size < 2:
            raise ValidationError("template waveform must be a 1-D sequence")
        peak = np.max(np.abs(w))
        if abs(peak - 1.0) > 1e-9:
            raise ValidationError(f"template {self.name!r} is not unit-peak (max |w| = {peak})")
        if self.peak_index < 0:
            object.__setattr__(self, "peak_index", int(np.argmax(np.abs(w))))
        elif self.peak_index >= w.size:
            raise ValidationError("peak_index outside the waveform")

    def __len__(self) -> int:
        return int(self.waveform.size)


@dataclass(frozen=True)
class GenConfig:
    duration_s: float = 6.0
    noise_level: float = 0.1
    firing_rate_hz: float = 20.0
    generator_refractory_ms: float = 2.0
    noise_model: str = TEMPLATE_SUPERPOSITION
    seed: int = 0
    sample_rate_hz: float = 24000.0

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValidationError("duration_s must be > 0")
        if not 0.0 <= self.noise_level <= 1.0:
            raise ValidationError(f"noise_level must be in [0, 1], got {self.noise_level}")
        if self.firing_rate_hz <= 0 or self.generator_refractory_ms <= 0:
            raise ValidationError("firing_rate_hz and generator_refractory_ms must be > 0")
        if self.firing_rate_hz * self.generator_refractory_ms >= 1000.0:
            raise ValidationError(
                "infeasible: firing_rate_hz * generator_refractory_ms must stay below 1000"
            )
        if self.noise_model not in (TEMPLATE_SUPERPOSITION, BANDLIMITED_GAUSSIAN):
            raise ValidationError(f"unknown noise_model {self.noise_model!r}")


def default_templates() -> list[SpikeTemplate]:
    """The three bundled spike shapes (64 samples at 24 kHz)."""
    tdir = resources.files("ebnr_spd").joinpath("templates")
    out = []
    for entry in sorted(tdir.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".csv"):
            w = np.array([float(line) for line in entry.read_text().splitlines() if line.strip()])
            out.append(SpikeTemplate(w, name=entry.name[: -len(".csv")]))
    if not out:
        raise RuntimeError("no bundled templates found")
    return out


def _dilate(waveform: np.ndarray, factor: float) -> np.ndarray:
    """Stretch a waveform in time by ``factor`` with linear interpolation."""
    n = int(round(len(waveform) * factor))
    return np.interp(
        np.linspace(0.0, len(waveform) - 1.0, n), np.arange(len(waveform)), waveform
    )


def make_noise(cfg: GenConfig, templates, n_samples: int, seed) -> np.ndarray:
    """Background noise with empirical std exactly ``cfg.noise_level``."""
    if n_samples <= 0:
        raise ValidationError("n_samples must be > 0")
    if cfg.noise_level == 0.0:
        return np.zeros(n_samples)
    rng = np.random.default_rng(seed)
    if cfg.noise_model == BANDLIMITED_GAUSSIAN:
        white = rng.standard_normal(n_samples)
        nyq = cfg.sample_rate_hz / 2.0
        if NOISE_LOWPASS_HZ < nyq:
            b, a = sps.butter(4, NOISE_LOWPASS_HZ / nyq, btype="low")
            noise = sps.filtfilt(b, a, white)
        else:
            noise = white
    else:
        bank = [
            _dilate(t.waveform, g) for t in templates for g in NOISE_DILATION_FACTORS
        ]
        max_len = max(len(w) for w in bank)
        n_events = max(1, int(round(NOISE_EVENT_RATE_HZ * n_samples / cfg.sample_rate_hz)))
        starts = rng.integers(-max_len, n_samples, size=n_events)
        which = rng.integers(0, len(bank), size=n_events)
        lo, hi = NOISE_AMP_RANGE
        amps = rng.uniform(lo, hi, size=n_events) * rng.choice((-1.0, 1.0), size=n_events)
        noise = np.zeros(n_samples)
        for variant, wf in enumerate(bank):
            mask = which == variant
            if not mask.any():
                continue
            idx = starts[mask][:, None] + np.arange(len(wf))[None, :]
            valid = (idx >= 0) & (idx < n_samples)
            noise += np.bincount(
                idx[valid],
                weights=(amps[mask][:, None] * wf[None, :])[valid],
                minlength=n_samples,
            )
    noise = noise - noise.mean()
    std = noise.std()
    if std == 0.0:
        raise RuntimeError("degenerate noise draw (zero variance)")
    return noise * (cfg.noise_level / std)


def draw_spike_peaks(cfg: GenConfig, template_len: int, max_peak_index: int, rng) -> np.ndarray:
    """Poisson arrivals thinned by the generator refractory, as sample indices.

    Spikes whose waveform would overhang the recording edges are dropped.
    The refractory is enforced on sample indices with one extra sample of
    slack so nanosecond truth gaps stay >= the nominal refractory after
    flooring.
    """
    n_samples = int(round(cfg.duration_s * cfg.sample_rate_hz))
    refr_samples = int(np.ceil(cfg.generator_refractory_ms / 1000.0 * cfg.sample_rate_hz)) + 1
    peaks = []
    t = 0.0
    last = -(1 << 60)
    while True:
        t += rng.exponential(1.0 / cfg.firing_rate_hz)
        if t >= cfg.duration_s:
            break
        s = int(round(t * cfg.sample_rate_hz))
        if s - last < refr_samples:
            continue
        if s - max_peak_index < 0 or s - max_peak_index + template_len > n_samples:
            continue
        peaks.append(s)
        last = s
    return np.array(peaks, dtype=np.int64)


def generate_recording(templates, cfg: GenConfig) -> tuple[SampledSignal, GroundTruth]:
    """Unit-peak spikes on noise; deterministic given (templates, cfg.seed)."""
    if not templates:
        raise ValidationError("need at least one spike template")
    lengths = {len(t) for t in templates}
    if len(lengths) != 1:
        raise ValidationError("all templates must share one length")
    template_len = lengths.pop()
    max_peak_index = max(t.peak_index for t in templates)

    ss = np.random.SeedSequence(cfg.seed)
    place_seed, noise_seed = ss.spawn(2)
    rng = np.random.default_rng(place_seed)

    n_samples = int(round(cfg.duration_s * cfg.sample_rate_hz))
    peaks = draw_spike_peaks(cfg, template_len, max_peak_index, rng)
    choices = rng.integers(0, len(templates), size=peaks.size)

    samples = np.zeros(n_samples)
    for s, w_i in zip(peaks, choices):
        tpl = templates[w_i]
        start = int(s) - tpl.peak_index
        samples[start : start + template_len] += tpl.waveform
    samples += make_noise(cfg, templates, n_samples, noise_seed)

    signal = SampledSignal(samples, sample_rate_hz=cfg.sample_rate_hz, t0_ns=0)
    period = NS_PER_S / cfg.sample_rate_hz
    truth_ns = np.floor(peaks * period).astype(np.int64)
    refr_ns = int(cfg.generator_refractory_ms * 1e6)
    truth = GroundTruth(truth_ns, min_gap_ns=refr_ns)
    return signal, truth


def save_recording(signal: SampledSignal, truth: GroundTruth, signal_path, truth_path) -> None:
    save_signal(signal, signal_path)
    save_spike_times(truth.spike_times_ns, truth_path)


def load_recording(signal_path, truth_path) -> tuple[SampledSignal, GroundTruth]:
    """Load a recording saved in the core formats; binary round-trips bit-exactly
    modulo the float32 on-disk precision."""
    signal = load_signal(signal_path)
    truth = GroundTruth(load_spike_times(Path(truth_path)))
    return signal, truth
