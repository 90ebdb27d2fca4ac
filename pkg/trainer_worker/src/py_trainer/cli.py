"""Entry point: ``py-trainer --manifest manifest.yaml`` serves on stdio."""

from __future__ import annotations

import argparse
import sys
from importlib import resources

from .manifest import ManifestError, load_manifest
from .server import serve

DEFAULT_MANIFEST = resources.files("py_trainer") / "data" / "manifest.yaml"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="py-trainer",
        description="Trainer worker speaking line-delimited JSON on stdin/stdout",
    )
    parser.add_argument(
        "--manifest",
        default=str(DEFAULT_MANIFEST),
        help="manifest YAML (dataset, split, learner catalogue); "
        "defaults to the bundled demo manifest",
    )
    args = parser.parse_args(argv)
    try:
        manifest = load_manifest(args.manifest)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return serve(manifest, sys.stdin, sys.stdout)


if __name__ == "__main__":
    sys.exit(main())
