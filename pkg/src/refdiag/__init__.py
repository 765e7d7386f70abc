"""Deterministic block-world referring-expression dataset engine.

Generates scenes, rasterized masks, functional programs, expression text and
per-step ground truth, and scores external predictions with a diagnostic
breakdown.
"""

from .config import GeneratorConfig, config_hash
from .errors import RefDiagError
from .executor import StepTrace, eval_node, execute
from .families import load_catalog
from .generate import (
    DatasetManifest,
    GenerationSettings,
    RefExpression,
    choose_attribute_combo,
    generate_dataset,
    generate_false_premise,
    realize_text,
    sample_expression,
)
from .evaluate import (
    BiasReport,
    EvalReport,
    PredictionRecord,
    bias_audit,
    iou,
    score_detection,
    score_segmentation,
    stepwise_iou,
)
from .masks import Mask, decode_rle, encode_rle
from .programs import Program, ProgramNode, emit_program, parse_program
from .raster import classify_visibility, occlusion_ratio, rasterize
from .scene import (
    CameraSpec,
    ObjectSpec,
    SceneConfig,
    SceneGraph,
    order_along,
    sample_scene,
    spatial_related,
)

__version__ = "0.1.0"

__all__ = [
    "BiasReport",
    "CameraSpec",
    "DatasetManifest",
    "EvalReport",
    "GenerationSettings",
    "GeneratorConfig",
    "Mask",
    "ObjectSpec",
    "PredictionRecord",
    "Program",
    "ProgramNode",
    "RefDiagError",
    "RefExpression",
    "SceneConfig",
    "SceneGraph",
    "StepTrace",
    "bias_audit",
    "choose_attribute_combo",
    "classify_visibility",
    "config_hash",
    "decode_rle",
    "emit_program",
    "encode_rle",
    "eval_node",
    "execute",
    "generate_dataset",
    "generate_false_premise",
    "iou",
    "load_catalog",
    "occlusion_ratio",
    "order_along",
    "parse_program",
    "rasterize",
    "realize_text",
    "sample_expression",
    "sample_scene",
    "scene_rng",
    "score_detection",
    "score_segmentation",
    "spatial_related",
    "stepwise_iou",
]

from .scene import scene_rng  # noqa: E402  (exported helper)
