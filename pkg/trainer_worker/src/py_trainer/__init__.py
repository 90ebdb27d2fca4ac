"""Reference trainer worker for the data-allocation scheduler's wire protocol."""

from .catalogue import UnknownFamilyError, build_classifier
from .manifest import (
    LearnerEntry,
    ManifestError,
    SplitDataset,
    WorkerManifest,
    load_dataset,
    load_manifest,
    subsample_indices,
)
from .server import PROTOCOL_VERSION, serve

__all__ = [
    "PROTOCOL_VERSION",
    "LearnerEntry",
    "ManifestError",
    "SplitDataset",
    "UnknownFamilyError",
    "WorkerManifest",
    "build_classifier",
    "load_dataset",
    "load_manifest",
    "serve",
    "subsample_indices",
]
