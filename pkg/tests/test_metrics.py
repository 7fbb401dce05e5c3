"""Spike matching and the sensitivity / accuracy / FDR scores."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import ebnr_spd as E
from ebnr_spd.core import ValidationError
from ebnr_spd.metrics import EvalReport, MatchResult, evaluate, match_spikes

MS = 1_000_000


def truth(*ms):
    return E.GroundTruth(np.array([int(t * MS) for t in ms], dtype=np.int64))


def dets(*ms):
    return E.DetectionSet(np.array([int(t * MS) for t in ms], dtype=np.int64))


class TestMatchSpikes:
    def test_window_must_be_positive(self):
        with pytest.raises(ValidationError):
            match_spikes(truth(1), dets(1), 0)

    def test_hand_example(self):
        # Truth at 1, 10, 20 ms; detections at 1.2, 10.5, 30 ms; 1 ms window:
        # two matches, one missed truth, one spurious detection.
        m = match_spikes(truth(1, 10, 20), dets(1.2, 10.5, 30), MS)
        assert (m.tp, m.fp, m.fn) == (2, 1, 1)
        assert m.pairs == ((1 * MS, int(1.2 * MS)), (10 * MS, int(10.5 * MS)))

    def test_perfect_agreement(self):
        m = match_spikes(truth(1, 2, 3, 4), dets(1, 2, 3, 4), MS)
        assert (m.tp, m.fp, m.fn) == (4, 0, 0)

    def test_empty_detections(self):
        m = match_spikes(truth(1, 2, 3), dets(), MS)
        assert (m.tp, m.fp, m.fn) == (0, 0, 3)

    def test_empty_truth(self):
        m = match_spikes(truth(), dets(5, 6), MS)
        assert (m.tp, m.fp, m.fn) == (0, 2, 0)

    def test_both_empty(self):
        m = match_spikes(truth(), dets(), MS)
        assert (m.tp, m.fp, m.fn) == (0, 0, 0)

    def test_boundary_gap_matches(self):
        # A gap of exactly the window still matches.
        m = match_spikes(truth(10), dets(11), MS)
        assert m.tp == 1
        m = match_spikes(truth(10), dets(11.001), MS)
        assert (m.tp, m.fp, m.fn) == (0, 1, 1)

    def test_nearest_wins(self):
        m = match_spikes(truth(10, 12), dets(11.8), 4 * MS)
        assert m.pairs == ((12 * MS, int(11.8 * MS)),)

    def test_tie_goes_to_earlier_truth(self):
        m = match_spikes(truth(10, 12), dets(11), 4 * MS)
        assert m.pairs == ((10 * MS, 11 * MS),)

    def test_each_truth_matched_once(self):
        # Two detections near one truth spike: one match, one false positive.
        m = match_spikes(truth(10), dets(9.8, 10.2), MS)
        assert (m.tp, m.fp, m.fn) == (1, 1, 0)

    def test_chronological_greediness(self):
        # The earlier detection claims the earlier truth even when the later
        # detection sits closer to it.
        m = match_spikes(truth(10, 20), dets(12, 13), 4 * MS)
        assert m.pairs == ((10 * MS, 12 * MS),)
        assert (m.tp, m.fp, m.fn) == (1, 1, 1)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.integers(0, 500), max_size=40),
        st.lists(st.integers(0, 500), max_size=40),
        st.integers(1, 20),
    )
    def test_bookkeeping_identities(self, t_ms, d_ms, win_ms):
        t = np.unique(np.array(t_ms, dtype=np.int64)) * MS
        d = np.unique(np.array(d_ms, dtype=np.int64)) * MS
        m = match_spikes(E.GroundTruth(t), E.DetectionSet(d), win_ms * MS)
        assert m.tp + m.fn == t.size
        assert m.tp + m.fp == d.size
        for tt, dd in m.pairs:
            assert abs(tt - dd) <= win_ms * MS
        # matched truths and detections are unique
        assert len({p[0] for p in m.pairs}) == m.tp
        assert len({p[1] for p in m.pairs}) == m.tp

    def test_window_shrink_never_adds_matches(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            t = np.unique(rng.integers(0, 400, 25)) * MS
            d = np.unique(rng.integers(0, 400, 25)) * MS
            tps = [match_spikes(E.GroundTruth(t), E.DetectionSet(d), w).tp
                   for w in (8 * MS, 4 * MS, 2 * MS, 1 * MS)]
            assert tps == sorted(tps, reverse=True)


class TestScores:
    def test_hand_numbers(self):
        r = evaluate(MatchResult(2, 1, 1, pairs=((0, 0), (1, 1))))
        assert r.sensitivity == pytest.approx(2 / 3)
        assert r.accuracy == pytest.approx(0.5)
        assert r.fdr == pytest.approx(1 / 3)

    def test_perfect(self):
        r = evaluate(MatchResult(7, 0, 0, pairs=tuple((i, i) for i in range(7))))
        assert (r.sensitivity, r.accuracy, r.fdr) == (1.0, 1.0, 0.0)

    def test_total_failure(self):
        r = evaluate(MatchResult(0, 5, 3))
        assert (r.sensitivity, r.accuracy, r.fdr) == (0.0, 0.0, 1.0)

    def test_empty_everything_is_perfect(self):
        r = evaluate(MatchResult(0, 0, 0))
        assert (r.sensitivity, r.accuracy, r.fdr) == (1.0, 1.0, 0.0)

    def test_no_detections(self):
        r = evaluate(MatchResult(0, 0, 4))
        assert (r.sensitivity, r.accuracy, r.fdr) == (0.0, 0.0, 0.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_accuracy_bounded_by_sensitivity_and_precision(self, tp, fp, fn):
        r = evaluate(MatchResult(tp, fp, fn, pairs=tuple((i, i) for i in range(tp))))
        assert r.accuracy <= r.sensitivity + 1e-12
        assert r.accuracy <= 1.0 - r.fdr + 1e-12
        assert 0.0 <= r.fdr <= 1.0

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a = np.unique(rng.integers(0, 300, 20)) * MS
            b = np.unique(rng.integers(0, 300, 20)) * MS
            m1 = match_spikes(E.GroundTruth(a), E.DetectionSet(b), 2 * MS)
            m2 = match_spikes(E.GroundTruth(a), E.DetectionSet(b), 2 * MS)
            assert (m1.tp, m1.fp, m1.fn, m1.pairs) == (m2.tp, m2.fp, m2.fn, m2.pairs)


class TestValidation:
    def test_match_result_counts(self):
        with pytest.raises(ValidationError):
            MatchResult(-1, 0, 0)
        with pytest.raises(ValidationError):
            MatchResult(2, 0, 0, pairs=((0, 0),))

    def test_report_bounds(self):
        with pytest.raises(ValidationError):
            EvalReport(sensitivity=0.5, accuracy=0.9, fdr=0.0, tp=1, fp=0, fn=1)
        with pytest.raises(ValidationError):
            EvalReport(sensitivity=1.0, accuracy=0.9, fdr=0.5, tp=1, fp=1, fn=0)
        with pytest.raises(ValidationError):
            EvalReport(sensitivity=1.2, accuracy=0.5, fdr=0.0, tp=1, fp=0, fn=0)
