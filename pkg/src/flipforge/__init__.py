"""flipforge: mitosis-detection dataset synthesis from partial point annotations.

Builds fully labeled frame-pair datasets from a handful of annotated
divisions (frame-order flipping + alpha-blending pasting), renders heatmap
regression targets, decodes detections, and scores them with spatiotemporal
F1 matching. A built-in simulator provides sequences with exact ground
truth for end-to-end validation.
"""

__version__ = "0.1.0"

from .datagen import (
    BlendMask,
    CropPair,
    FramePair,
    GenConfig,
    LabeledPair,
    build_crop_bank,
    flip_pair,
    generate_dataset,
    generate_pair,
    make_blend_mask,
    paste_event,
    sample_partial_labels,
)
from .heatmap import (
    Detection,
    Heatmap,
    extract_peaks,
    load_heatmap,
    render_targets,
    save_heatmap,
)
from .imagecore import (
    AnnotationSet,
    Frame,
    MitosisEvent,
    Sequence,
    load_annotations,
    load_sequence,
    save_annotations,
    save_sequence,
)
from .metrics import MatchConfig, MatchResult, MetricsReport, match, score, sweep
from .simulate import SimConfig, simulate

__all__ = [
    "__version__",
    "AnnotationSet",
    "BlendMask",
    "CropPair",
    "Detection",
    "Frame",
    "FramePair",
    "GenConfig",
    "Heatmap",
    "LabeledPair",
    "MatchConfig",
    "MatchResult",
    "MetricsReport",
    "MitosisEvent",
    "Sequence",
    "SimConfig",
    "build_crop_bank",
    "extract_peaks",
    "flip_pair",
    "generate_dataset",
    "generate_pair",
    "load_annotations",
    "load_heatmap",
    "load_sequence",
    "make_blend_mask",
    "match",
    "paste_event",
    "render_targets",
    "sample_partial_labels",
    "save_annotations",
    "save_heatmap",
    "save_sequence",
    "score",
    "simulate",
    "sweep",
]
