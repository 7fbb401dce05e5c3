"""Software energy-operator detector on sampled traces."""

import numpy as np
import pytest

import ebnr_spd as E
from ebnr_spd.baseline_neo import (
    NeoParams,
    detect_from_smoothed,
    detect_neo,
    neo,
    smoothed_neo,
)
from ebnr_spd.core import ValidationError


def sig(samples, rate=24000.0):
    return E.SampledSignal(samples=np.asarray(samples, dtype=np.float64),
                           sample_rate_hz=rate)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValidationError):
            NeoParams(smooth_window=0)
        with pytest.raises(ValidationError):
            NeoParams(smooth_window=4)
        with pytest.raises(ValidationError):
            NeoParams(threshold_multiplier=0.0)
        with pytest.raises(ValidationError):
            NeoParams(refractory_ns=-1)


class TestEnergyOperator:
    def test_needs_three_samples(self):
        with pytest.raises(ValidationError):
            neo(sig([1.0, 2.0]))

    def test_endpoints_are_zero(self):
        psi = neo(sig(np.random.default_rng(0).standard_normal(50)))
        assert psi[0] == 0.0 and psi[-1] == 0.0

    def test_constant_has_zero_energy(self):
        psi = neo(sig(np.full(40, 3.7)))
        assert np.all(psi == 0.0)

    def test_impulse_energy(self):
        x = np.zeros(21)
        x[10] = 1.0
        psi = neo(sig(x))
        want = np.zeros(21)
        want[10] = 1.0
        assert np.array_equal(psi, want)

    def test_sinusoid_energy_is_constant(self):
        # psi[sin(w n)] = sin(w)^2 at every interior sample, amplitude a
        # contributing a^2.
        w, a = 0.3, 1.7
        n = np.arange(400)
        psi = neo(sig(a * np.sin(w * n + 0.5)))
        want = a * a * np.sin(w) ** 2
        assert np.abs(psi[1:-1] - want).max() < 1e-9

    def test_shift_equivariance(self):
        rng = np.random.default_rng(1)
        x = np.zeros(300)
        x[100:140] = rng.standard_normal(40)
        shifted = np.roll(x, 37)
        assert np.allclose(np.roll(neo(sig(x)), 37), neo(sig(shifted)))

    def test_amplitude_scaling_is_quadratic(self):
        x = np.random.default_rng(2).standard_normal(200)
        psi1 = neo(sig(x))
        psi3 = neo(sig(3.0 * x))
        assert np.allclose(psi3, 9.0 * psi1, rtol=1e-12, atol=1e-12)


class TestSmoothing:
    def test_window_one_is_identity(self):
        x = np.random.default_rng(0).standard_normal(64)
        p = NeoParams(smooth_window=1)
        assert np.array_equal(smoothed_neo(sig(x), p), neo(sig(x)))

    def test_impulse_response_is_normalized_bartlett(self):
        x = np.zeros(41)
        x[20] = 1.0
        p = NeoParams(smooth_window=7)
        got = smoothed_neo(sig(x), p)
        w = np.bartlett(7)
        w = w / w.sum()
        assert np.allclose(got[17:24], w)
        assert got[:17].max() == 0.0 and got[24:].max() == 0.0

    def test_mass_preserved_away_from_edges(self):
        x = np.zeros(101)
        x[50] = 1.0
        p = NeoParams(smooth_window=9)
        assert smoothed_neo(sig(x), p).sum() == pytest.approx(neo(sig(x)).sum())


class TestDetect:
    def test_all_zero_signal_yields_nothing(self):
        assert len(detect_neo(sig(np.zeros(100)), NeoParams())) == 0

    def test_constant_signal_yields_nothing(self):
        assert len(detect_neo(sig(np.full(100, 2.0)), NeoParams())) == 0

    def test_single_clean_spike_located(self, templates):
        x = np.zeros(4000)
        t0 = 1000
        x[t0: t0 + 64] = templates[0].waveform
        det = detect_neo(sig(x), NeoParams())
        assert len(det) == 1
        peak_ns = int(sig(x).times_ns()[t0 + templates[0].peak_index])
        assert abs(int(det.detected_times_ns[0]) - peak_ns) <= 500_000

    def test_detections_invariant_under_positive_scaling(self, templates):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(3000) * 0.05
        for t0 in (400, 1500, 2600):
            x[t0: t0 + 64] += templates[t0 % 3].waveform
        d1 = detect_neo(sig(x), NeoParams())
        d2 = detect_neo(sig(5.0 * x), NeoParams())
        assert np.array_equal(d1.detected_times_ns, d2.detected_times_ns)

    def test_threshold_multiplier_monotone(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(6000) * 0.1
        x[np.arange(500, 6000, 700)] += 2.0
        s = smoothed_neo(sig(x), NeoParams())
        t_ns = sig(x).times_ns()
        lens = [len(detect_from_smoothed(s, t_ns, NeoParams(threshold_multiplier=c)))
                for c in (1.0, 2.0, 4.0, 8.0, 16.0)]
        assert lens == sorted(lens, reverse=True)

    def test_refractory_merges_close_peaks(self):
        # Two sharp peaks 12 samples (0.5 ms) apart: only the first survives
        # a 1 ms refractory, both survive without one.
        x = np.zeros(200)
        x[60] = 1.0
        x[72] = 1.0
        with_refr = detect_neo(sig(x), NeoParams(refractory_ns=1_000_000))
        no_refr = detect_neo(sig(x), NeoParams(refractory_ns=0))
        assert len(no_refr) == 2
        assert len(with_refr) == 1
        assert with_refr.detected_times_ns[0] == no_refr.detected_times_ns[0]

    def test_detect_neo_equals_two_stage_call(self, templates):
        x = np.zeros(2000)
        x[300: 364] = templates[1].waveform
        x[900: 964] = templates[2].waveform
        p = NeoParams()
        s = smoothed_neo(sig(x), p)
        direct = detect_neo(sig(x), p)
        staged = detect_from_smoothed(s, sig(x).times_ns(), p)
        assert np.array_equal(direct.detected_times_ns, staged.detected_times_ns)

    def test_plateau_maxima_are_not_peaks(self):
        # A flat-topped energy profile has no strict local maximum.
        x = np.zeros(60)
        x[20:30] = 1.0  # step plateau
        psi = neo(sig(x))
        # psi spikes at the plateau edges only; smoothing keeps them separate
        det = detect_from_smoothed(psi, sig(x).times_ns(), NeoParams(refractory_ns=0))
        for t in det.detected_times_ns:
            k = int(np.searchsorted(sig(x).times_ns(), t))
            assert psi[k] > psi[k - 1] and psi[k] > psi[k + 1]
