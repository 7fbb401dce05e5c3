"""Shared fixtures: spike templates, a reference noisy recording, and a
band-limited random signal factory used by the modulator and detector tests."""

import numpy as np
import pytest

import ebnr_spd as E

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def templates():
    return E.default_templates()


@pytest.fixture(scope="session")
def rec01(templates):
    """One default-length recording at noise level 0.10, seed 0, plus its
    delta-modulated event stream."""
    cfg = E.GenConfig(noise_level=0.10, seed=0)
    signal, truth = E.generate_recording(templates, cfg)
    stream = E.modulate(signal, E.DmConfig())
    return {"cfg": cfg, "signal": signal, "truth": truth, "stream": stream}


def bandlimited_signal(seed, n_samples=2000, sample_rate_hz=24000.0, scale=1.0):
    """Random smooth test input: white Gaussian noise low-passed by a running
    mean, so successive samples never jump more than a few delta steps."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(n_samples + 48)
    kernel = np.ones(49) / 49.0
    smooth = np.convolve(raw, kernel, mode="valid")
    smooth = smooth / max(1e-12, np.abs(smooth).max()) * scale
    return E.SampledSignal(samples=smooth, sample_rate_hz=sample_rate_hz)


@pytest.fixture
def bl_signal():
    return bandlimited_signal


def stream_from_bin_counts(counts, t_bin_ns, jitter_seed=None):
    """Build an event stream whose per-bin totals equal `counts`, spreading
    events inside each bin and alternating polarity."""
    times, pols = [], []
    rng = np.random.default_rng(jitter_seed) if jitter_seed is not None else None
    for b, c in enumerate(counts):
        c = int(c)
        if c == 0:
            continue
        if rng is None:
            offs = np.arange(c, dtype=np.int64) + 1
        else:
            offs = np.sort(rng.choice(np.arange(1, t_bin_ns - 1), size=c, replace=False))
        for j in range(c):
            times.append(b * t_bin_ns + int(offs[j]))
            pols.append(1 if (b + j) % 2 == 0 else -1)
    return E.EventStream(
        t_ns=np.asarray(times, dtype=np.int64),
        polarity=np.asarray(pols, dtype=np.int8),
    )
