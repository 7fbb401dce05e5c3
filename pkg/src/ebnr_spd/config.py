"""Experiment configuration: a flat `key = value` text file with dotted key
groups, every field overridable from the command line via `--set key=value`.

Unknown keys are rejected rather than ignored so typos cannot silently run
a different experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .baseline_neo import NeoParams
from .core import ParseError, _read_keyvalue
from .delta_mod import DmConfig
from .event_neo import DetectorParams
from .hram_model import HramParams, MismatchModel
from .synthgen import GenConfig

DETECTOR_KINDS = ("event", "hram", "neo_original", "neo_reconstructed")


def _float_list(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.split(","))


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# dotted key -> (config group, field name, coercion from string)
SCHEMA = {
    "gen.duration_s": ("gen", "duration_s", float),
    "gen.noise_level": ("gen", "noise_level", float),
    "gen.firing_rate_hz": ("gen", "firing_rate_hz", float),
    "gen.generator_refractory_ms": ("gen", "generator_refractory_ms", float),
    "gen.noise_model": ("gen", "noise_model", str),
    "gen.seed": ("gen", "seed", int),
    "gen.sample_rate_hz": ("gen", "sample_rate_hz", float),
    "dm.delta": ("dm", "delta", float),
    "dm.pulse_width_ns": ("dm", "pulse_width_ns", int),
    "dm.initial_level": ("dm", "initial_level", float),
    "event.t_bin_ns": ("event", "t_bin_ns", int),
    "event.theta_bin": ("event", "theta_bin", int),
    "event.n_s": ("event", "n_s", int),
    "event.th_det": ("event", "th_det", int),
    "event.refractory_ns": ("event", "refractory_ns", int),
    "hram.vdd": ("hram", "vdd", float),
    "hram.dv_per_pulse": ("hram", "dv_per_pulse", float),
    "hram.th_sram": ("hram", "th_sram", float),
    "hram.leak_v_per_s": ("hram", "leak_v_per_s", float),
    "hram.n_s": ("hram", "n_s", int),
    "hram.th_det": ("hram", "th_det", int),
    "hram.t_bin_ns": ("hram", "t_bin_ns", int),
    "hram.refractory_ns": ("hram", "refractory_ns", int),
    "mismatch.sigma_dv_rel": ("mismatch", "sigma_dv_rel", float),
    "mismatch.sigma_th_v": ("mismatch", "sigma_th_v", float),
    "mismatch.seed": ("mismatch", "seed", int),
    "neo.smooth_window": ("neo", "smooth_window", int),
    "neo.threshold_multiplier": ("neo", "threshold_multiplier", float),
    "neo.refractory_ns": ("neo", "refractory_ns", int),
    "detector.kind": (None, "detector_kind", str),
    "noise_levels": (None, "noise_levels", _float_list),
    "seeds": (None, "seeds", _int_list),
    "eval.match_window_ns": (None, "match_window_ns", int),
    "eval.detector_label": (None, "detector_label", str),
    "sweep.th_sram_mv": (None, "sweep_th_sram_mv", _int_list),
    "sweep.th_det": (None, "sweep_th_det", _int_list),
    "mc.runs": (None, "mc_runs", int),
    "mc.noise_level": (None, "mc_noise_level", float),
    "mc.segment_ms": (None, "mc_segment_ms", float),
    "compare.c_multipliers": (None, "compare_c_multipliers", _float_list),
    "io.signal": (None, "signal_name", str),
    "io.events": (None, "events_name", str),
    "io.truth": (None, "truth_name", str),
    "io.detections": (None, "detections_name", str),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run depends on, seeds included."""

    gen: GenConfig = field(default_factory=GenConfig)
    dm: DmConfig = field(default_factory=DmConfig)
    event: DetectorParams = field(default_factory=DetectorParams)
    hram: HramParams = field(default_factory=HramParams)
    mismatch: MismatchModel = field(default_factory=MismatchModel)
    neo: NeoParams = field(default_factory=NeoParams)
    detector_kind: str = "event"
    noise_levels: tuple = (0.05, 0.10, 0.15, 0.20)
    seeds: tuple = tuple(range(10))
    match_window_ns: int = 1_000_000
    detector_label: str = ""
    sweep_th_sram_mv: tuple = (100, 200, 300, 400, 500, 600, 700, 800, 900)
    sweep_th_det: tuple = (1, 2, 3, 4, 5)
    mc_runs: int = 200
    mc_noise_level: float = 0.10
    mc_segment_ms: float = 10.0
    compare_c_multipliers: tuple = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0)
    output_dir: Path = Path("out")
    signal_name: str = "signal.f32"
    events_name: str = "events.csv"
    truth_name: str = "truth.txt"
    detections_name: str = "detections.txt"

    def __post_init__(self):
        if self.detector_kind not in DETECTOR_KINDS:
            raise ParseError(f"detector.kind must be one of {DETECTOR_KINDS}")
        for name in ("noise_levels", "seeds", "sweep_th_sram_mv", "sweep_th_det",
                     "compare_c_multipliers"):
            if len(getattr(self, name)) == 0:
                raise ParseError(f"{name} must be non-empty")
        if self.mc_runs < 1:
            raise ParseError("mc.runs must be >= 1")
        if self.match_window_ns <= 0:
            raise ParseError("eval.match_window_ns must be > 0")


def _coerce(key: str, raw: str):
    if key not in SCHEMA:
        raise ParseError(f"unknown config key {key!r}")
    _, _, conv = SCHEMA[key]
    try:
        return conv(raw)
    except ValueError as exc:
        raise ParseError(f"bad value for {key!r}: {exc}") from exc


def load_config(
    path: str | Path | None = None,
    sets: tuple = (),
    seed: int | None = None,
    out: str | Path | None = None,
) -> ExperimentConfig:
    """Build a config from an optional file plus `key=value` override strings.

    `seed` (from --seed) narrows the seeds list to a single entry and also
    seeds the generator; `out` (from --out) sets the output directory.
    """
    raw: dict[str, str] = {}
    if path is not None:
        raw.update(_read_keyvalue(Path(path)))
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep:
            raise ParseError(f"--set needs key=value, got {item!r}")
        raw[key.strip()] = value.strip()

    group_kwargs: dict[str, dict] = {"gen": {}, "dm": {}, "event": {}, "hram": {},
                                     "mismatch": {}, "neo": {}}
    top_kwargs: dict = {}
    for key, value in raw.items():
        typed = _coerce(key, value)
        group, field_name, _ = SCHEMA[key]
        if group is None:
            top_kwargs[field_name] = typed
        else:
            group_kwargs[group][field_name] = typed

    if seed is not None:
        top_kwargs["seeds"] = (int(seed),)
        group_kwargs["gen"]["seed"] = int(seed)
    if out is not None:
        top_kwargs["output_dir"] = Path(out)

    try:
        return ExperimentConfig(
            gen=GenConfig(**group_kwargs["gen"]),
            dm=DmConfig(**group_kwargs["dm"]),
            event=DetectorParams(**group_kwargs["event"]),
            hram=HramParams(**group_kwargs["hram"]),
            mismatch=MismatchModel(**group_kwargs["mismatch"]),
            neo=NeoParams(**group_kwargs["neo"]),
            **top_kwargs,
        )
    except TypeError as exc:
        raise ParseError(f"bad config: {exc}") from exc


def config_lines(cfg: ExperimentConfig) -> list[str]:
    """Render the full effective config as `key = value` lines (manifest body)."""
    groups = {"gen": cfg.gen, "dm": cfg.dm, "event": cfg.event, "hram": cfg.hram,
              "mismatch": cfg.mismatch, "neo": cfg.neo}
    lines = []
    for key in SCHEMA:
        group, field_name, _ = SCHEMA[key]
        obj = groups[group] if group is not None else cfg
        value = getattr(obj, field_name)
        if value is None:
            continue
        if isinstance(value, tuple):
            text = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return lines
