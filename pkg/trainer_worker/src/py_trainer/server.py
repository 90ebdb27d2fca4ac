"""Request loop: newline-delimited JSON on stdio, one request in flight.

Requests: hello / train_eval / shutdown. Replies: hello / result /
error (codes "bad_request" and "train_failed"); either error leaves the
worker alive. Unknown request fields are ignored.
"""

from __future__ import annotations

import json
import time
from typing import IO

from .catalogue import build_classifier
from .manifest import SplitDataset, WorkerManifest, load_dataset, subsample_indices

PROTOCOL_VERSION = 1


def _error(code: str, message: str) -> dict:
    return {"op": "error", "code": code, "message": message}


def _handle_train_eval(
    request: dict, manifest: WorkerManifest, data: SplitDataset
) -> dict:
    entries = {entry.name: entry for entry in manifest.learners}
    name = request.get("learner")
    if name not in entries:
        return _error("bad_request", f"unknown learner {name!r}")
    try:
        n = int(request.get("n"))
        seed = int(request.get("seed", 0))
    except (TypeError, ValueError):
        return _error("bad_request", f"n and seed must be integers: {request}")
    if not (1 <= n <= data.train_size):
        return _error(
            "bad_request", f"n must lie in [1, {data.train_size}], got {n}"
        )

    entry = entries[name]
    idx = subsample_indices(data.train_size, n, seed)
    X, y = data.X_train[idx], data.y_train[idx]
    try:
        clf = build_classifier(entry.family, entry.params, seed)
        t0 = time.perf_counter()
        clf.fit(X, y)
        cost_seconds = time.perf_counter() - t0
        train_acc = float(clf.score(X, y))
        val_acc = float(clf.score(data.X_val, data.y_val))
    except Exception as exc:  # noqa: BLE001 -- any training failure maps to one code
        return _error("train_failed", f"{name}: {type(exc).__name__}: {exc}")
    return {
        "op": "result",
        "learner": name,
        "n": n,
        "train_acc": train_acc,
        "val_acc": val_acc,
        "cost_seconds": cost_seconds,
    }


def serve(manifest: WorkerManifest, stdin: IO[str], stdout: IO[str]) -> int:
    """Answer requests until shutdown or end of input; returns the exit code."""
    data = load_dataset(manifest)

    def reply(message: dict) -> None:
        stdout.write(json.dumps(message) + "\n")
        stdout.flush()

    for line in stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request is not an object")
        except ValueError as exc:
            reply(_error("bad_request", f"undecodable request: {exc}"))
            continue

        op = request.get("op")
        if op == "hello":
            version = request.get("version", PROTOCOL_VERSION)
            if version != PROTOCOL_VERSION:
                reply(_error("bad_request", f"unsupported protocol version {version!r}"))
                continue
            reply(
                {
                    "op": "hello",
                    "version": PROTOCOL_VERSION,
                    "learners": manifest.learner_names(),
                }
            )
        elif op == "train_eval":
            reply(_handle_train_eval(request, manifest, data))
        elif op == "shutdown":
            return 0
        else:
            reply(_error("bad_request", f"unknown op {op!r}"))
    return 0
