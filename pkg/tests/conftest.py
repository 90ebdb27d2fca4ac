"""Shared fixtures and pool generators for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
FIXTURES_DIR = TESTS_DIR / "fixtures"
STUB_WORKER = [sys.executable, str(TESTS_DIR / "stub_worker.py")]


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def stub_worker_cmd() -> list[str]:
    return list(STUB_WORKER)
