"""Event-domain neural spike detection pipeline.

Synthetic extracellular recordings are delta-modulated into ON/OFF pulse
streams; spikes are detected by per-bin pulse counting with two-stage
thresholding, either directly or through a behavioral model of a hybrid
DRAM/SRAM counting array, and scored against ground truth next to a
software NEO baseline.
"""

__version__ = "0.1.0"

from .core import (
    NS_PER_S,
    ON,
    OFF,
    DetectionSet,
    Event,
    EventStream,
    GroundTruth,
    ParseError,
    SampledSignal,
    ValidationError,
    bin_events,
    load_events_csv,
    load_signal,
    load_spike_times,
    normalize_signal,
    save_events_csv,
    save_signal,
    save_spike_times,
)
from .delta_mod import DmConfig, SlewOverflowError, modulate, reconstruct
from .synthgen import (
    BANDLIMITED_GAUSSIAN,
    TEMPLATE_SUPERPOSITION,
    GenConfig,
    SpikeTemplate,
    default_templates,
    generate_recording,
    load_recording,
    make_noise,
    save_recording,
)
from .event_neo import DetectorParams, detect, neo_prime
from .hram_model import (
    HramArrayState,
    HramCell,
    HramParams,
    MismatchModel,
    accumulate_phase,
    detection_phase,
    monte_carlo_peaks,
    step_bin,
    threshold_phase,
)
from .baseline_neo import NeoParams, detect_neo, neo, smoothed_neo
from .metrics import EvalReport, MatchResult, evaluate, match_spikes
from .config import ExperimentConfig, load_config
from .harness import (
    compare_detectors,
    mc_experiment,
    run_pipeline,
    sweep_heatmap,
)
from .kernels import BACKEND

__all__ = [
    "__version__",
    "NS_PER_S", "ON", "OFF",
    "SampledSignal", "Event", "EventStream", "GroundTruth", "DetectionSet",
    "ValidationError", "ParseError", "SlewOverflowError",
    "bin_events", "normalize_signal",
    "save_events_csv", "load_events_csv", "save_signal", "load_signal",
    "save_spike_times", "load_spike_times",
    "DmConfig", "modulate", "reconstruct",
    "GenConfig", "SpikeTemplate", "default_templates", "generate_recording",
    "make_noise", "save_recording", "load_recording",
    "TEMPLATE_SUPERPOSITION", "BANDLIMITED_GAUSSIAN",
    "DetectorParams", "neo_prime", "detect",
    "HramParams", "MismatchModel", "HramCell", "HramArrayState",
    "accumulate_phase", "threshold_phase", "detection_phase", "step_bin",
    "monte_carlo_peaks",
    "NeoParams", "neo", "smoothed_neo", "detect_neo",
    "MatchResult", "EvalReport", "match_spikes", "evaluate",
    "ExperimentConfig", "load_config",
    "run_pipeline", "sweep_heatmap", "mc_experiment", "compare_detectors",
    "BACKEND",
]
