"""Exposure fusion with radiance-guided hue correction."""

from .fusion import fuse
from .hueplane import (
    AchromaticError,
    HuePlaneCoords,
    correct_hue,
    correct_hue_image,
    decompose,
    max_saturated_color,
    reconstruct,
)
from .metrics import (
    ciede2000,
    evaluate_pair,
    mean_hue_difference,
    rgb_to_lab,
    tmqi,
)
from .pipeline import PipelineConfig, run_pipeline, tone_map_global
from .response import (
    EstimationFailed,
    ResponseCurve,
    estimate_crf_debevec,
    estimate_crf_mitsunaga,
    merge_hdr,
)
from .ssla import SslaConfig, segment_scene, ssla
from .stack import ExposureStack, load_stack, save_stack
from .synth import SynthConfig, generate_exposure, generate_stack

__version__ = "0.1.0"

__all__ = [
    "AchromaticError",
    "EstimationFailed",
    "ExposureStack",
    "HuePlaneCoords",
    "PipelineConfig",
    "ResponseCurve",
    "SslaConfig",
    "SynthConfig",
    "__version__",
    "ciede2000",
    "correct_hue",
    "correct_hue_image",
    "decompose",
    "estimate_crf_debevec",
    "estimate_crf_mitsunaga",
    "evaluate_pair",
    "fuse",
    "generate_exposure",
    "generate_stack",
    "load_stack",
    "max_saturated_color",
    "mean_hue_difference",
    "merge_hdr",
    "reconstruct",
    "rgb_to_lab",
    "run_pipeline",
    "save_stack",
    "segment_scene",
    "ssla",
    "tmqi",
    "tone_map_global",
]
