"""Detection scoring: one-to-one spike matching and the standard
sensitivity / accuracy / false-discovery-rate triple.

S = TP / (TP + FN), A = TP / (TP + FP + FN), FDR = FP / (TP + FP),
with the conventions S = 1 for empty truth, FDR = 0 for no detections,
and A = 1 when all three counts are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DetectionSet, GroundTruth, ValidationError


@dataclass(frozen=True)
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: tuple = ()

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValidationError("counts must be non-negative")
        if len(self.pairs) != self.tp:
            raise ValidationError("need exactly one matched pair per true positive")


@dataclass(frozen=True)
class EvalReport:
    sensitivity: float
    accuracy: float
    fdr: float
    tp: int
    fp: int
    fn: int
    detector: str = ""
    recording: str = ""
    noise_level: float = 0.0
    params_hash: str = ""

    def __post_init__(self):
        for name in ("sensitivity", "accuracy", "fdr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} outside [0, 1]: {v}")
        if self.accuracy > self.sensitivity + 1e-9:
            raise ValidationError("accuracy cannot exceed sensitivity")
        if self.tp + self.fp > 0 and self.accuracy > 1.0 - self.fdr + 1e-9:
            raise ValidationError("accuracy cannot exceed 1 - fdr")


def match_spikes(truth: GroundTruth, det: DetectionSet, window_ns: int) -> MatchResult:
    """Greedy chronological one-to-one matching within +-window_ns.

    Detections are walked in time order; each matches the nearest
    still-unmatched truth spike within the window (earlier wins ties).
    Unmatched detections are false positives, unmatched truths false
    negatives. Deterministic by construction.
    """
    if window_ns <= 0:
        raise ValidationError("window_ns must be > 0")
    t = truth.spike_times_ns
    d = det.detected_times_ns
    matched = np.zeros(t.size, dtype=bool)
    pairs = []
    lo = 0
    for dt in d.tolist():
        while lo < t.size and t[lo] < dt - window_ns:
            lo += 1
        hi = int(np.searchsorted(t, dt + window_ns, side="right"))
        best = -1
        best_gap = window_ns + 1
        for k in range(lo, hi):
            if matched[k]:
                continue
            gap = abs(int(t[k]) - dt)
            if gap < best_gap:
                best_gap = gap
                best = k
        if best >= 0:
            matched[best] = True
            pairs.append((int(t[best]), dt))
    tp = len(pairs)
    return MatchResult(tp=tp, fp=int(d.size) - tp, fn=int(t.size) - tp, pairs=tuple(pairs))


def evaluate(
    match: MatchResult,
    detector: str = "",
    recording: str = "",
    noise_level: float = 0.0,
    params_hash: str = "",
) -> EvalReport:
    """Score a match result; degenerate denominators fall back to the stated
    conventions instead of raising."""
    tp, fp, fn = match.tp, match.fp, match.fn
    sensitivity = 1.0 if tp + fn == 0 else tp / (tp + fn)
    fdr = 0.0 if tp + fp == 0 else fp / (tp + fp)
    accuracy = 1.0 if tp + fp + fn == 0 else tp / (tp + fp + fn)
    return EvalReport(
        sensitivity=sensitivity,
        accuracy=accuracy,
        fdr=fdr,
        tp=tp,
        fp=fp,
        fn=fn,
        detector=detector,
        recording=recording,
        noise_level=noise_level,
        params_hash=params_hash,
    )
