"""Experiment orchestration: pipeline runs, the threshold heatmap sweep, the
mismatch Monte Carlo study, and the three-detector comparison.

All outputs are CSV plus a `key = value` manifest, written deterministically:
jobs run on a bounded thread pool (the kernels release the GIL) and results
are collected in a fixed order before anything is written, so parallelism
never changes output bytes. Reruns with the same config are byte-identical.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, baseline_neo, delta_mod, event_neo, hram_model, kernels, synthgen
from .config import ExperimentConfig, config_lines
from .core import NS_PER_S, DetectionSet, SampledSignal, bin_events
from .metrics import EvalReport, evaluate, match_spikes

REPORT_HEADER = "recording,noise_level,detector,params_hash,tp,fp,fn,sensitivity,accuracy,fdr"
HEATMAP_HEADER = "th_sram_mv,th_det,mean_accuracy,mean_sensitivity,mean_fdr"
SWEEP_RUNS_HEADER = "th_sram_mv,th_det,noise_level,seed,tp,fp,fn,sensitivity,accuracy,fdr"
MC_HEADER = "run,input_kind,peak_v"
COMPARE_HEADER = "detector,noise_level,threshold_multiplier,mean_sensitivity,mean_accuracy,mean_fdr"


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and recording id."""

    def __init__(self, stage: str, recording: str, cause: BaseException):
        super().__init__(f"[stage {stage}, recording {recording}] {cause}")
        self.stage = stage
        self.recording = recording


def _run_stage(stage: str, recording: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, recording, exc) from exc


def worker_count(n_jobs: int) -> int:
    """Pool width: EBNR_SPD_THREADS if set, else the CPU count, capped by jobs."""
    env = os.environ.get("EBNR_SPD_THREADS", "").strip()
    limit = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(limit, n_jobs))


def _pool_map(fn, jobs: list) -> list:
    """Order-preserving parallel map (plain loop when one worker suffices)."""
    workers = worker_count(len(jobs))
    if workers == 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _fmt_level(x: float) -> str:
    return f"{x:g}"


def recording_id(noise_level: float, seed: int) -> str:
    return f"rec-s{seed}-n{_fmt_level(noise_level)}"


def params_hash(cfg: ExperimentConfig, kind: str) -> str:
    """Short stable digest of everything that defines the detector's behavior."""
    detector = {"event": cfg.event, "hram": cfg.hram}.get(kind, cfg.neo)
    text = f"{kind}|{detector!r}|{cfg.dm!r}|{cfg.match_window_ns}"
    return hashlib.sha1(text.encode()).hexdigest()[:10]


def _duration_ns(gen: synthgen.GenConfig) -> int:
    return int(round(gen.duration_s * NS_PER_S))


def prepare_recording(cfg: ExperimentConfig, noise_level: float, seed: int):
    """Generate and encode one recording; shared by every experiment op."""
    rec = recording_id(noise_level, seed)
    gen_cfg = replace(cfg.gen, noise_level=noise_level, seed=seed)
    templates = synthgen.default_templates()
    signal, truth = _run_stage("generate", rec, synthgen.generate_recording, templates, gen_cfg)
    stream = _run_stage("encode", rec, delta_mod.modulate, signal, cfg.dm)
    return rec, signal, truth, stream


def run_detector(cfg: ExperimentConfig, kind: str, signal: SampledSignal, stream,
                 duration_ns: int) -> DetectionSet:
    """Dispatch one detector kind over an already-encoded recording."""
    if kind == "event":
        return event_neo.detect(stream, cfg.event, duration_ns=duration_ns)
    if kind == "hram":
        return hram_model.detect(stream, cfg.hram, duration_ns=duration_ns)
    if kind in ("neo_original", "neo_reconstructed"):
        if kind == "neo_reconstructed":
            dm_res = cfg.dm.resolved_for(signal)
            signal = delta_mod.reconstruct(
                stream, dm_res, signal.samples.size, signal.sample_rate_hz, signal.t0_ns
            )
        return baseline_neo.detect_neo(signal, cfg.neo)
    raise ValueError(f"unknown detector kind {kind!r}")


def run_one(cfg: ExperimentConfig, noise_level: float, seed: int) -> EvalReport:
    """generate -> encode -> detect -> evaluate for a single recording."""
    rec, signal, truth, stream = prepare_recording(cfg, noise_level, seed)
    kind = cfg.detector_kind
    det = _run_stage("detect", rec, run_detector, cfg, kind, signal, stream, _duration_ns(cfg.gen))
    match = _run_stage("evaluate", rec, match_spikes, truth, det, cfg.match_window_ns)
    return evaluate(
        match,
        detector=cfg.detector_label or kind,
        recording=rec,
        noise_level=noise_level,
        params_hash=params_hash(cfg, kind),
    )


def report_rows(reports: list) -> list[str]:
    rows = []
    for r in reports:
        rows.append(",".join([
            r.recording, _fmt_level(r.noise_level), r.detector, r.params_hash,
            str(r.tp), str(r.fp), str(r.fn),
            _fmt(r.sensitivity), _fmt(r.accuracy), _fmt(r.fdr),
        ]))
    return rows


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(row + "\n")


def write_manifest(cfg: ExperimentConfig, command: str, extra: dict | None = None) -> Path:
    path = Path(cfg.output_dir) / "manifest.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        f.write("# experiment manifest\n")
        f.write(f"tool = ebnr-spd {__version__}\n")
        f.write(f"command = {command}\n")
        for line in config_lines(cfg):
            f.write(line + "\n")
        for key, value in (extra or {}).items():
            f.write(f"{key} = {value}\n")
    return path


def run_pipeline(cfg: ExperimentConfig) -> list[EvalReport]:
    """Evaluate the configured detector over every (noise level, seed) pair.

    Writes report.csv and manifest.txt under cfg.output_dir and returns the
    reports in (noise level, seed) order.
    """
    jobs = [(nl, sd) for nl in cfg.noise_levels for sd in cfg.seeds]
    reports = _pool_map(lambda job: run_one(cfg, job[0], job[1]), jobs)
    _write_csv(Path(cfg.output_dir) / "report.csv", REPORT_HEADER, report_rows(reports))
    write_manifest(cfg, "run")
    return reports


def theta_for_mv(th_sram_mv: int, dv_per_pulse: float) -> int:
    """Pulse-count threshold equivalent to a trip voltage given in millivolts."""
    return int(math.ceil(th_sram_mv / 1000.0 / dv_per_pulse))


def _sweep_job(cfg: ExperimentConfig, noise_level: float, seed: int) -> list[tuple]:
    rec, _, truth, stream = prepare_recording(cfg, noise_level, seed)
    p = cfg.hram
    counts = bin_events(stream, p.t_bin_ns, duration_ns=_duration_ns(cfg.gen))
    out = []
    for mv in cfg.sweep_th_sram_mv:
        theta = theta_for_mv(mv, p.dv_per_pulse)
        for th_det in cfg.sweep_th_det:
            times = _run_stage(
                "detect", rec, kernels.detect_from_counts,
                counts, theta, p.n_s, th_det, p.t_bin_ns, p.refractory_ns,
            )
            det = DetectionSet(times, min_gap_ns=p.refractory_ns)
            rep = evaluate(match_spikes(truth, det, cfg.match_window_ns))
            out.append((mv, th_det, noise_level, seed, rep))
    return out


def sweep_heatmap(cfg: ExperimentConfig) -> tuple[list[dict], dict]:
    """Accuracy heatmap over th_sram (mV) x th_det, averaged over noise levels
    and seeds; th_det must not exceed the window length n_s.

    Returns (per-cell aggregate rows, summary with the argmax cell and the
    size of the 2-point plateau). Writes sweep_runs.csv (one row per cell x
    noise x seed), heatmap.csv, sweep_summary.txt, manifest.txt.
    """
    if max(cfg.sweep_th_det) > cfg.hram.n_s:
        raise ValueError("sweep.th_det exceeds the window length n_s")
    jobs = [(nl, sd) for nl in cfg.noise_levels for sd in cfg.seeds]
    per_job = _pool_map(lambda job: _sweep_job(cfg, job[0], job[1]), jobs)

    keyed_rows = []
    cells: dict[tuple[int, int], list[EvalReport]] = {}
    for job_rows in per_job:
        for mv, th_det, noise_level, seed, rep in job_rows:
            row = ",".join([
                str(mv), str(th_det), _fmt_level(noise_level), str(seed),
                str(rep.tp), str(rep.fp), str(rep.fn),
                _fmt(rep.sensitivity), _fmt(rep.accuracy), _fmt(rep.fdr),
            ])
            keyed_rows.append(((mv, th_det, noise_level, seed), row))
            cells.setdefault((mv, th_det), []).append(rep)
    run_rows = [row for _, row in sorted(keyed_rows)]

    heat_rows = []
    for (mv, th_det) in sorted(cells):
        reps = cells[(mv, th_det)]
        heat_rows.append({
            "th_sram_mv": mv,
            "th_det": th_det,
            "mean_accuracy": float(np.mean([r.accuracy for r in reps])),
            "mean_sensitivity": float(np.mean([r.sensitivity for r in reps])),
            "mean_fdr": float(np.mean([r.fdr for r in reps])),
        })

    best = max(heat_rows, key=lambda r: r["mean_accuracy"])
    plateau = sum(1 for r in heat_rows if r["mean_accuracy"] >= best["mean_accuracy"] - 0.02)
    summary = {
        "best_th_sram_mv": best["th_sram_mv"],
        "best_th_det": best["th_det"],
        "best_mean_accuracy": _fmt(best["mean_accuracy"]),
        "cells_within_2pt": plateau,
        "grid_cells": len(heat_rows),
    }

    out = Path(cfg.output_dir)
    _write_csv(out / "sweep_runs.csv", SWEEP_RUNS_HEADER, run_rows)
    _write_csv(out / "heatmap.csv", HEATMAP_HEADER, [
        ",".join([str(r["th_sram_mv"]), str(r["th_det"]), _fmt(r["mean_accuracy"]),
                  _fmt(r["mean_sensitivity"]), _fmt(r["mean_fdr"])])
        for r in heat_rows
    ])
    with open(out / "sweep_summary.txt", "w") as f:
        for key, value in summary.items():
            f.write(f"{key} = {value}\n")
    write_manifest(cfg, "sweep")
    return heat_rows, summary


def mc_segments(cfg: ExperimentConfig) -> tuple[SampledSignal, SampledSignal]:
    """Build the two Monte Carlo input segments: noise-only, and one action
    potential (first bundled template) centered in the same kind of noise."""
    templates = synthgen.default_templates()
    rate = cfg.gen.sample_rate_hz
    n = int(round(cfg.mc_segment_ms / 1000.0 * rate))
    seg_cfg = replace(
        cfg.gen, duration_s=cfg.mc_segment_ms / 1000.0, noise_level=cfg.mc_noise_level,
    )
    ss = np.random.SeedSequence(cfg.seeds[0])
    noise_seed, ap_seed = ss.spawn(2)
    noise_samples = synthgen.make_noise(seg_cfg, templates, n, noise_seed)
    ap_samples = synthgen.make_noise(seg_cfg, templates, n, ap_seed)
    tpl = templates[0]
    start = n // 2 - tpl.peak_index
    ap_samples[start : start + len(tpl)] += tpl.waveform
    return (
        SampledSignal(noise_samples, sample_rate_hz=rate),
        SampledSignal(ap_samples, sample_rate_hz=rate),
    )


def mc_experiment(cfg: ExperimentConfig) -> dict:
    """Per-run peak capacitor voltages for a noise segment and an AP segment.

    Writes mc_peaks.csv (`run,input_kind,peak_v`), mc_summary.txt, and
    manifest.txt; returns the summary including the separation margin
    min(AP peaks) - max(noise peaks).
    """
    noise_sig, ap_sig = mc_segments(cfg)
    noise_stream = delta_mod.modulate(noise_sig, cfg.dm)
    ap_stream = delta_mod.modulate(ap_sig, cfg.dm)
    duration_ns = int(round(cfg.mc_segment_ms * 1e6))
    noise_peaks, ap_peaks = hram_model.monte_carlo_peaks(
        noise_stream, ap_stream, cfg.hram, cfg.mismatch, cfg.mc_runs, duration_ns=duration_ns
    )
    rows = []
    for run in range(cfg.mc_runs):
        rows.append(f"{run},noise,{_fmt(noise_peaks[run])}")
        rows.append(f"{run},ap,{_fmt(ap_peaks[run])}")
    summary = {
        "runs": cfg.mc_runs,
        "max_noise_peak_v": _fmt(float(noise_peaks.max())),
        "min_ap_peak_v": _fmt(float(ap_peaks.min())),
        "margin_v": _fmt(float(ap_peaks.min() - noise_peaks.max())),
    }
    out = Path(cfg.output_dir)
    _write_csv(out / "mc_peaks.csv", MC_HEADER, rows)
    with open(out / "mc_summary.txt", "w") as f:
        for key, value in summary.items():
            f.write(f"{key} = {value}\n")
    write_manifest(cfg, "montecarlo")
    return summary


def _compare_job(cfg: ExperimentConfig, noise_level: float, seed: int) -> dict:
    rec, signal, truth, stream = prepare_recording(cfg, noise_level, seed)
    duration_ns = _duration_ns(cfg.gen)
    out: dict[tuple, EvalReport] = {}

    det = _run_stage("detect", rec, run_detector, cfg, "event", signal, stream, duration_ns)
    out[("event", None)] = evaluate(match_spikes(truth, det, cfg.match_window_ns))

    dm_res = cfg.dm.resolved_for(signal)
    recon = delta_mod.reconstruct(
        stream, dm_res, signal.samples.size, signal.sample_rate_hz, signal.t0_ns
    )
    for label, sig in (("neo_original", signal), ("neo_reconstructed", recon)):
        smoothed = baseline_neo.smoothed_neo(sig, cfg.neo)
        times_ns = sig.times_ns()
        for c in cfg.compare_c_multipliers:
            p = replace(cfg.neo, threshold_multiplier=c)
            det = _run_stage("detect", rec, baseline_neo.detect_from_smoothed,
                             smoothed, times_ns, p)
            out[(label, c)] = evaluate(match_spikes(truth, det, cfg.match_window_ns))
    return out


def compare_detectors(cfg: ExperimentConfig) -> list[dict]:
    """Event-domain detector vs software NEO on the original and on the
    reconstructed signal, per noise level.

    The NEO threshold multiplier is swept and each baseline reports its own
    best mean accuracy per noise level (best case for the baseline). Writes
    compare.csv and manifest.txt; returns the rows.
    """
    jobs = [(nl, sd) for nl in cfg.noise_levels for sd in cfg.seeds]
    per_job = _pool_map(lambda job: _compare_job(cfg, job[0], job[1]), jobs)

    rows = []
    for detector in ("event", "neo_original", "neo_reconstructed"):
        for noise_level in cfg.noise_levels:
            job_reports = [
                per_job[i] for i, (nl, _) in enumerate(jobs) if nl == noise_level
            ]
            if detector == "event":
                reps = [jr[("event", None)] for jr in job_reports]
                c_best = None
            else:
                def mean_acc(c):
                    return float(np.mean([jr[(detector, c)].accuracy for jr in job_reports]))
                c_best = max(cfg.compare_c_multipliers, key=mean_acc)
                reps = [jr[(detector, c_best)] for jr in job_reports]
            rows.append({
                "detector": detector,
                "noise_level": noise_level,
                "threshold_multiplier": c_best,
                "mean_sensitivity": float(np.mean([r.sensitivity for r in reps])),
                "mean_accuracy": float(np.mean([r.accuracy for r in reps])),
                "mean_fdr": float(np.mean([r.fdr for r in reps])),
            })

    _write_csv(Path(cfg.output_dir) / "compare.csv", COMPARE_HEADER, [
        ",".join([
            r["detector"], _fmt_level(r["noise_level"]),
            "" if r["threshold_multiplier"] is None else _fmt_level(r["threshold_multiplier"]),
            _fmt(r["mean_sensitivity"]), _fmt(r["mean_accuracy"]), _fmt(r["mean_fdr"]),
        ])
        for r in rows
    ])
    write_manifest(cfg, "compare")
    return rows
