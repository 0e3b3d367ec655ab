"""Adapter emitting detection and embedding interchange files for evaluation."""

from .audio import AdapterError, embed, read_wav_16k
from .export import (
    DetectionSummary,
    default_label_map_path,
    export_detections,
    export_embeddings,
    load_label_map,
)
from .model import PrototypeTagger, TaggedEvent

__version__ = "0.1.0"
