"""Worker manifest: dataset location, split parameters, and the learner catalogue."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml


class ManifestError(ValueError):
    """The manifest file is missing, malformed, or internally inconsistent."""


@dataclass(frozen=True)
class LearnerEntry:
    name: str
    family: str
    params: dict


@dataclass(frozen=True)
class WorkerManifest:
    """Dataset path, label column, seeded split ratio, and catalogue order."""

    dataset: Path
    label_column: str
    split_seed: int
    train_fraction: float
    learners: tuple[LearnerEntry, ...]

    def learner_names(self) -> list[str]:
        return [entry.name for entry in self.learners]


def load_manifest(path: str | Path) -> WorkerManifest:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"manifest {path} must be a mapping")

    dataset = Path(raw.get("dataset", ""))
    if not dataset.name:
        raise ManifestError("manifest needs a 'dataset' path")
    if not dataset.is_absolute():
        dataset = path.parent / dataset
    if not dataset.exists():
        raise ManifestError(f"dataset not found: {dataset}")

    entries = []
    for item in raw.get("learners") or []:
        if not isinstance(item, dict) or not item.get("name") or not item.get("family"):
            raise ManifestError(f"learner entry needs name and family: {item}")
        entries.append(
            LearnerEntry(str(item["name"]), str(item["family"]), dict(item.get("params") or {}))
        )
    if not entries:
        raise ManifestError("manifest needs a non-empty 'learners' list")
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise ManifestError(f"duplicate learner names: {names}")

    fraction = float(raw.get("train_fraction", 0.7))
    if not (0.0 < fraction < 1.0):
        raise ManifestError(f"train_fraction must lie in (0, 1), got {fraction}")
    return WorkerManifest(
        dataset=dataset,
        label_column=str(raw.get("label_column", "label")),
        split_seed=int(raw.get("split_seed", 0)),
        train_fraction=fraction,
        learners=tuple(entries),
    )


@dataclass(frozen=True)
class SplitDataset:
    """Feature/label arrays already divided into train and held-out parts."""

    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray

    @property
    def train_size(self) -> int:
        return len(self.y_train)


def load_dataset(manifest: WorkerManifest) -> SplitDataset:
    """Read the CSV and apply the seeded random split from the manifest."""
    with open(manifest.dataset, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if manifest.label_column not in header:
            raise ManifestError(
                f"label column {manifest.label_column!r} not in header {header}"
            )
        label_idx = header.index(manifest.label_column)
        features, labels = [], []
        for row in reader:
            labels.append(row[label_idx])
            features.append([float(v) for i, v in enumerate(row) if i != label_idx])

    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    order = np.random.default_rng(manifest.split_seed).permutation(len(y))
    cut = int(round(manifest.train_fraction * len(y)))
    train, val = order[:cut], order[cut:]
    return SplitDataset(X[train], y[train], X[val], y[val])


def subsample_indices(train_size: int, n: int, seed: int) -> np.ndarray:
    """Indices of the n training examples drawn for a request.

    A pure function of (n, seed) given the split, so identical requests
    train on identical subsets regardless of learner or request order.
    """
    if not (1 <= n <= train_size):
        raise ValueError(f"n must lie in [1, {train_size}], got {n}")
    return np.random.default_rng(seed).choice(train_size, size=n, replace=False)
