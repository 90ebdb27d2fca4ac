"""Fixtures: worker subprocess client and manifest paths."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from worker_client import RawWorker

BUNDLED_MANIFEST = str(resources.files("py_trainer") / "data" / "manifest.yaml")


@pytest.fixture
def bundled_manifest() -> str:
    return BUNDLED_MANIFEST


@pytest.fixture
def worker(bundled_manifest):
    w = RawWorker(bundled_manifest)
    yield w
    w.shutdown()


@pytest.fixture
def broken_manifest(tmp_path) -> str:
    """A catalogue whose second learner fails inside fit (negative C)."""
    dataset = Path(BUNDLED_MANIFEST).parent / "dataset.csv"
    path = tmp_path / "broken.yaml"
    path.write_text(
        "dataset: {}\n"
        "label_column: label\n"
        "split_seed: 7\n"
        "learners:\n"
        "  - name: tree\n"
        "    family: decision_tree\n"
        "    params: {{max_depth: 3}}\n"
        "  - name: doomed\n"
        "    family: logistic_regression\n"
        "    params: {{C: -1.0}}\n".format(dataset)
    )
    return str(path)
