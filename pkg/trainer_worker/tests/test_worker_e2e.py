"""End-to-end: the scheduler CLI drives this worker over the wire protocol.

The scheduler package is reached only through its installed command-line
interface, exactly as an external consumer would use it.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import time

import yaml


def test_full_allocation_run_over_bundled_dataset(bundled_manifest, tmp_path):
    daub = shutil.which("daub")
    assert daub, "scheduler CLI not on PATH"

    config = {
        "mode": "daub",
        "seed": 0,
        "params": {"r": 2.0, "b": 50, "N": 800},
        "worker": {
            "command": [sys.executable, "-m", "py_trainer.cli", "--manifest", bundled_manifest],
            "learners": ["tree", "logistic", "knn", "forest"],
            "timeout": 60.0,
        },
    }
    config_path = tmp_path / "run.yaml"
    config_path.write_text(yaml.safe_dump(config))

    out = tmp_path / "out"
    t0 = time.perf_counter()
    proc = subprocess.run(
        [daub, "run", "--config", str(config_path), "--out", str(out)],
        capture_output=True,
        text=True,
        timeout=120,
    )
    elapsed = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr or proc.stdout
    assert elapsed < 120.0

    records = [json.loads(line) for line in (out / "trace.jsonl").read_text().splitlines()]
    summary = next(r for r in records if r["type"] == "run_summary")
    allocations = [r for r in records if r["type"] == "allocation"]
    assert summary["selected"] in config["worker"]["learners"]
    assert summary["failures"] == {}
    # bootstrap covers all four learners at 50, 100, 200; someone reached N
    sizes = {(r["learner"], r["n"]) for r in allocations}
    for name in config["worker"]["learners"]:
        assert {(name, 50), (name, 100), (name, 200)} <= sizes
    assert any(r["n"] == 800 for r in allocations)
    assert all(r["cost"] >= 0.0 for r in allocations)
