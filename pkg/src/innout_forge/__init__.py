"""Frame In / Frame Out dataset curation, conditioning geometry and metrics."""

from .errors import CodecError, ManifestError, StageError, ValidationError
from .types import (
    CanvasBox,
    CanvasSpec,
    EmbeddingVec,
    MaskRLE,
    ObjectTrack,
    PatternKind,
    PatternRecord,
    PoseSample,
    TrackPoint,
    VideoRecord,
)
from .rle import mask_area, mask_box_overlap, rle_decode, rle_encode
from .config import PipelineConfig, load_config
from .pipeline import run_all, run_stage

__version__ = "0.1.0"

__all__ = [
    "CodecError", "ManifestError", "StageError", "ValidationError",
    "CanvasBox", "CanvasSpec", "EmbeddingVec", "MaskRLE", "ObjectTrack", "PatternKind",
    "PatternRecord", "PoseSample", "TrackPoint", "VideoRecord",
    "mask_area", "mask_box_overlap", "rle_decode", "rle_encode",
    "PipelineConfig", "load_config", "run_all", "run_stage",
]
