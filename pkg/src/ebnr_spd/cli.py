"""Command line entry point.

Subcommands form a pipeline over one working directory (--out): `generate`
writes the signal and ground truth there, `encode` turns the signal into a
pulse stream, the `detect-*` commands turn inputs into a detection file, and
`evaluate` scores detections against the truth. `sweep`, `montecarlo`, and
`compare` are self-contained experiment drivers. Every configuration field
can come from a `key = value` config file (--config) or a --set override.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, delta_mod, event_neo, hram_model, baseline_neo
from .config import ExperimentConfig, load_config
from .core import (
    DetectionSet,
    GroundTruth,
    ParseError,
    ValidationError,
    load_events_csv,
    load_signal,
    load_spike_times,
    save_events_csv,
    save_signal,
    save_spike_times,
)
from .harness import (
    REPORT_HEADER,
    StageError,
    compare_detectors,
    mc_experiment,
    params_hash,
    recording_id,
    report_rows,
    run_pipeline,
    sweep_heatmap,
    write_manifest,
)
from .metrics import evaluate as evaluate_match
from .metrics import match_spikes
from .synthgen import default_templates, generate_recording


def _paths(cfg: ExperimentConfig) -> dict[str, Path]:
    out = Path(cfg.output_dir)
    return {
        "signal": out / cfg.signal_name,
        "events": out / cfg.events_name,
        "truth": out / cfg.truth_name,
        "detections": out / cfg.detections_name,
        "report": out / "report.csv",
    }


def _ensure_out(cfg: ExperimentConfig) -> None:
    Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)


def cmd_generate(cfg: ExperimentConfig, args) -> int:
    _ensure_out(cfg)
    paths = _paths(cfg)
    signal, truth = generate_recording(default_templates(), cfg.gen)
    save_signal(signal, paths["signal"])
    save_spike_times(truth.spike_times_ns, paths["truth"])
    write_manifest(cfg, "generate")
    print(f"generated {signal.n_samples} samples at {cfg.gen.sample_rate_hz:g} Hz, "
          f"{len(truth)} spikes (noise {cfg.gen.noise_level:g}, seed {cfg.gen.seed})")
    print(f"wrote {paths['signal']} and {paths['truth']}")
    return 0


def cmd_encode(cfg: ExperimentConfig, args) -> int:
    paths = _paths(cfg)
    signal = load_signal(paths["signal"])
    stream = delta_mod.modulate(signal, cfg.dm)
    save_events_csv(stream, paths["events"])
    on = int((stream.polarity > 0).sum())
    print(f"encoded {len(stream)} pulses ({on} ON, {len(stream) - on} OFF, "
          f"delta {cfg.dm.delta:g}) -> {paths['events']}")
    return 0


def _save_detections(cfg: ExperimentConfig, det: DetectionSet, label: str) -> None:
    paths = _paths(cfg)
    save_spike_times(det.detected_times_ns, paths["detections"])
    print(f"{label}: {len(det)} detections -> {paths['detections']}")


def _signal_duration_ns(cfg: ExperimentConfig) -> int | None:
    """Recording length for the bin axis, when the signal file is present."""
    paths = _paths(cfg)
    try:
        signal = load_signal(paths["signal"])
    except OSError:
        return None
    return signal.duration_ns


def cmd_detect_event(cfg: ExperimentConfig, args) -> int:
    paths = _paths(cfg)
    stream = load_events_csv(paths["events"])
    det = event_neo.detect(stream, cfg.event, duration_ns=_signal_duration_ns(cfg))
    _save_detections(cfg, det, "event detector")
    return 0


def cmd_detect_hram(cfg: ExperimentConfig, args) -> int:
    paths = _paths(cfg)
    stream = load_events_csv(paths["events"])
    det = hram_model.detect(stream, cfg.hram, duration_ns=_signal_duration_ns(cfg))
    _save_detections(cfg, det, "hram detector (nominal cells)")
    return 0


def cmd_detect_neo(cfg: ExperimentConfig, args) -> int:
    paths = _paths(cfg)
    signal = load_signal(paths["signal"])
    if args.input == "reconstructed":
        stream = load_events_csv(paths["events"])
        dm_res = cfg.dm.resolved_for(signal)
        signal = delta_mod.reconstruct(
            stream, dm_res, signal.n_samples, signal.sample_rate_hz, signal.t0_ns
        )
    det = baseline_neo.detect_neo(signal, cfg.neo)
    _save_detections(cfg, det, f"software NEO ({args.input})")
    return 0


def cmd_evaluate(cfg: ExperimentConfig, args) -> int:
    paths = _paths(cfg)
    truth = GroundTruth(load_spike_times(paths["truth"]))
    det = DetectionSet(load_spike_times(paths["detections"]))
    match = match_spikes(truth, det, cfg.match_window_ns)
    kind = cfg.detector_kind
    report = evaluate_match(
        match,
        detector=cfg.detector_label or kind,
        recording=recording_id(cfg.gen.noise_level, cfg.gen.seed),
        noise_level=cfg.gen.noise_level,
        params_hash=params_hash(cfg, kind),
    )
    with open(paths["report"], "w") as f:
        f.write(REPORT_HEADER + "\n")
        f.write(report_rows([report])[0] + "\n")
    print(f"tp {report.tp}  fp {report.fp}  fn {report.fn}")
    print(f"sensitivity {report.sensitivity:.4f}  accuracy {report.accuracy:.4f}  "
          f"fdr {report.fdr:.4f}")
    print(f"wrote {paths['report']}")
    return 0


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    _, summary = sweep_heatmap(cfg)
    print(f"swept {summary['grid_cells']} cells over noise levels "
          f"{','.join(f'{v:g}' for v in cfg.noise_levels)} x {len(cfg.seeds)} seeds")
    print(f"best cell: th_sram {summary['best_th_sram_mv']} mV, "
          f"th_det {summary['best_th_det']} "
          f"(mean accuracy {summary['best_mean_accuracy']})")
    print(f"cells within 2 points of best: {summary['cells_within_2pt']}")
    print(f"wrote {Path(cfg.output_dir) / 'heatmap.csv'}")
    return 0


def cmd_montecarlo(cfg: ExperimentConfig, args) -> int:
    summary = mc_experiment(cfg)
    print(f"{summary['runs']} runs: max noise peak {summary['max_noise_peak_v']} V, "
          f"min AP peak {summary['min_ap_peak_v']} V")
    print(f"separation margin {summary['margin_v']} V")
    print(f"wrote {Path(cfg.output_dir) / 'mc_peaks.csv'}")
    return 0


def cmd_compare(cfg: ExperimentConfig, args) -> int:
    rows = compare_detectors(cfg)
    for r in rows:
        c = "" if r["threshold_multiplier"] is None else f" (C {r['threshold_multiplier']:g})"
        print(f"{r['detector']:<20} noise {r['noise_level']:<5g} "
              f"accuracy {r['mean_accuracy']:.4f}{c}")
    print(f"wrote {Path(cfg.output_dir) / 'compare.csv'}")
    return 0


def cmd_run(cfg: ExperimentConfig, args) -> int:
    reports = run_pipeline(cfg)
    by_level: dict[float, list] = {}
    for r in reports:
        by_level.setdefault(r.noise_level, []).append(r.accuracy)
    for level in cfg.noise_levels:
        accs = by_level[level]
        print(f"noise {level:g}: mean accuracy {sum(accs) / len(accs):.4f} "
              f"over {len(accs)} seeds")
    print(f"wrote {Path(cfg.output_dir) / 'report.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebnr-spd",
        description="Event-domain spike detection pipeline: synthetic recordings, "
        "delta-modulated pulse streams, count-threshold detection, and scoring.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    commands = [
        ("generate", cmd_generate, "synthesize a recording and its ground truth"),
        ("encode", cmd_encode, "delta-modulate the signal into an event stream"),
        ("detect-event", cmd_detect_event, "run the event-domain count detector"),
        ("detect-hram", cmd_detect_hram, "run the memory-array detector (nominal cells)"),
        ("detect-neo", cmd_detect_neo, "run software NEO on a sampled signal"),
        ("evaluate", cmd_evaluate, "score detections against ground truth"),
        ("sweep", cmd_sweep, "threshold heatmap over th_sram x th_det"),
        ("montecarlo", cmd_montecarlo, "per-cell mismatch Monte Carlo peak study"),
        ("compare", cmd_compare, "event detector vs software NEO baselines"),
        ("run", cmd_run, "full pipeline over all noise levels and seeds"),
    ]
    for name, fn, help_text in commands:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="FILE", help="key = value config file")
        p.add_argument("--seed", type=int, metavar="N",
                       help="single-seed mode: use only this seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default: out)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                       help="override one config field (repeatable)")
        if name == "detect-neo":
            p.add_argument("--input", choices=("original", "reconstructed"),
                           default="original",
                           help="run on the raw signal or its stair-step reconstruction")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, tuple(args.set), args.seed, args.out)
        return args.func(cfg, args)
    except (ValidationError, ParseError, StageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
