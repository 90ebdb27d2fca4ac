"""Learner adapters: synthetic curves, replay tables, and external workers.

An adapter exposes ``train_eval(n, seed) -> CurveSample`` and must be
deterministic given (n, seed). Synthetic adapters additionally expose the
noiseless accuracy function for exact-mode analysis.
"""

from __future__ import annotations

import csv
import json
import select
import subprocess
import time
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .core import CurveSample
from .errors import LearnerFailure, OutOfRangeError, ProtocolError

__all__ = [
    "LearnerAdapter",
    "SyntheticCurveSpec",
    "SyntheticLearner",
    "ReplayTable",
    "ReplayLearner",
    "WorkerProcess",
    "ExternalLearner",
    "make_crossing_pair",
    "load_replay_manifest",
    "PROTOCOL_VERSION",
]


class LearnerAdapter(Protocol):
    """Minimal interface the allocation loop needs from a learner."""

    id: str
    max_n: int | None  # None: no cap beyond the run's N
    supports_exact: bool

    def train_eval(self, n: int, seed: int) -> CurveSample: ...


# ---------------------------------------------------------------------------
# Synthetic curve learners

_FAMILIES = ("inverse", "power_law", "crossing", "flat")


@dataclass(frozen=True)
class SyntheticCurveSpec:
    """Parameters of a noiseless, well-behaved synthetic learning curve.

    Families (``a`` = asymptote, ``c`` = scale, ``alpha`` = exponent):

    - ``inverse``:    f(n) = a - c/n
    - ``power_law``:  f(n) = a - c/n^alpha
    - ``crossing``:   f(n) = a - c * (1/n + 1/n^alpha) / 2, an even blend of
      the two decays; pairs designed to intersect at a chosen size come from
      :func:`make_crossing_pair`.
    - ``flat``:       f(n) = a

    Training accuracy is f(n) plus a non-increasing overfit margin
    ``m0 / sqrt(n)``, capped at 1. Cost is ``kappa * n**p`` (unit cost for
    kappa = p = 1).
    """

    family: str
    a: float
    c: float = 0.0
    alpha: float = 1.0
    noise_sigma: float = 0.0
    overfit_m0: float = 0.5
    cost_exponent: float = 1.0
    cost_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown curve family {self.family!r}")
        if not (0.0 <= self.a <= 1.0):
            raise ValueError(f"asymptote must lie in [0, 1], got {self.a}")
        if self.family != "flat" and self.c <= 0:
            raise ValueError(f"scale must be positive, got {self.c}")
        if self.alpha <= 0:
            raise ValueError(f"exponent must be positive, got {self.alpha}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise sigma must be nonnegative, got {self.noise_sigma}")
        if self.overfit_m0 < 0:
            raise ValueError(f"overfit margin must be nonnegative, got {self.overfit_m0}")
        if self.cost_exponent < 1 or self.cost_scale < 1:
            raise ValueError("cost model needs exponent >= 1 and scale >= 1")

    def accuracy(self, n):
        """Noiseless validation accuracy f(n); accepts scalars or arrays.

        The raw curve is returned unclipped (it can dip below 0 for n below
        the warm-up region) so that well-behavedness scans see the true
        derivative; observed samples are clipped into [0, 1] at emission.
        """
        n = np.asarray(n, dtype=float)
        if self.family == "flat":
            out = np.full_like(n, self.a)
        elif self.family == "inverse":
            out = self.a - self.c / n
        elif self.family == "power_law":
            out = self.a - self.c / n**self.alpha
        else:  # crossing
            out = self.a - 0.5 * self.c * (1.0 / n + 1.0 / n**self.alpha)
        return float(out) if out.ndim == 0 else out

    def train_accuracy(self, n):
        """Noiseless training accuracy: the asymptote plus a shrinking margin.

        Written as f(n) + m(n) with the non-increasing, nonnegative margin
        m(n) = (a - f(n)) + m0/sqrt(n). Anchoring the margin on the asymptote
        keeps the curve non-increasing and always at or above f(N), which is
        what makes it usable as an upper-bound source.
        """
        n = np.asarray(n, dtype=float)
        out = np.minimum(1.0, self.a + self.overfit_m0 / np.sqrt(n))
        return float(out) if out.ndim == 0 else out

    def cost(self, n):
        n = np.asarray(n, dtype=float)
        out = self.cost_scale * n**self.cost_exponent
        return float(out) if out.ndim == 0 else out


def make_crossing_pair(
    crossover_n: int,
    *,
    a_slow: float = 0.95,
    a_fast: float = 0.80,
    c_fast: float = 20.0,
    **kwargs,
) -> tuple[SyntheticCurveSpec, SyntheticCurveSpec]:
    """Two inverse-family curves that intersect exactly at ``crossover_n``.

    The fast curve is better below the crossover, the slow one above, which
    is the failure mode fixed-fraction selection is vulnerable to.
    """
    if not a_slow > a_fast:
        raise ValueError("the slow curve needs the higher asymptote")
    c_slow = c_fast + (a_slow - a_fast) * crossover_n
    slow = SyntheticCurveSpec("inverse", a_slow, c_slow, **kwargs)
    fast = SyntheticCurveSpec("inverse", a_fast, c_fast, **kwargs)
    assert abs(slow.accuracy(crossover_n) - fast.accuracy(crossover_n)) < 1e-12
    return slow, fast


class SyntheticLearner:
    """Adapter over a :class:`SyntheticCurveSpec`, optionally noisy."""

    supports_exact = True
    max_n: int | None = None

    def __init__(self, id: str, spec: SyntheticCurveSpec) -> None:
        self.id = id
        self.spec = spec

    def exact_accuracy(self, n: int) -> float:
        return self.spec.accuracy(n)

    def exact_train_accuracy(self, n: int) -> float:
        return self.spec.train_accuracy(n)

    def exact_cost(self, n: int) -> float:
        return self.spec.cost(n)

    def train_eval(self, n: int, seed: int) -> CurveSample:
        if n < 1:
            raise ValueError(f"n must be positive, got {n}")
        val = self.spec.accuracy(n)
        train = self.spec.train_accuracy(n)
        if self.spec.noise_sigma > 0:
            # One deterministic stream per (learner, n, seed); training and
            # validation noise share it. The id enters through a stable hash
            # so samples reproduce across interpreter runs.
            ss = np.random.SeedSequence(
                [seed & 0xFFFFFFFF, n, zlib.crc32(self.id.encode())]
            )
            rng = np.random.default_rng(ss)
            eps_v, eps_t = rng.normal(0.0, self.spec.noise_sigma, size=2)
            val = val + eps_v
            train = train + eps_t
        val = float(np.clip(val, 0.0, 1.0))
        train = float(np.clip(train, 0.0, 1.0))
        return CurveSample(n=n, train_acc=train, val_acc=val, cost=self.spec.cost(n))


# ---------------------------------------------------------------------------
# Replay-table learners


class ReplayTable:
    """Recorded learning curve: rows of (n, train_acc, val_acc, cost).

    Queries between rows use monotone piecewise-linear interpolation; queries
    outside the recorded range raise, since extrapolation is exactly what the
    allocation loop itself is responsible for.
    """

    def __init__(self, rows: Sequence[tuple[int, float, float, float]]) -> None:
        if not rows:
            raise ValueError("replay table needs at least one row")
        ns = [r[0] for r in rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("replay rows must have strictly increasing n")
        self.rows = [(int(n), float(t), float(v), float(c)) for n, t, v, c in rows]
        for n, t, v, c in self.rows:
            if not (0.0 <= t <= 1.0 and 0.0 <= v <= 1.0):
                raise ValueError(f"replay accuracies at n={n} outside [0, 1]: ({t}, {v})")
            if c < 0:
                raise ValueError(f"replay cost at n={n} is negative: {c}")
        self._ns = np.array([r[0] for r in self.rows], dtype=float)
        self._cols = np.array([r[1:] for r in self.rows], dtype=float)

    @classmethod
    def from_csv(cls, path: str | Path) -> "ReplayTable":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [
                (int(row["n"]), float(row["train_acc"]), float(row["val_acc"]), float(row["cost"]))
                for row in reader
            ]
        return cls(rows)

    def lookup(self, n: int) -> tuple[float, float, float]:
        if not (self._ns[0] <= n <= self._ns[-1]):
            raise OutOfRangeError(
                f"n={n} outside replay range [{int(self._ns[0])}, {int(self._ns[-1])}]"
            )
        train, val, cost = (
            float(np.interp(n, self._ns, self._cols[:, k])) for k in range(3)
        )
        return train, val, cost


class ReplayLearner:
    """Adapter replaying a recorded curve; deterministic, seed-independent."""

    supports_exact = False

    def __init__(self, id: str, table: ReplayTable) -> None:
        self.id = id
        self.table = table
        self.max_n: int | None = int(table.rows[-1][0])

    def train_eval(self, n: int, seed: int) -> CurveSample:
        train, val, cost = self.table.lookup(n)
        return CurveSample(n=n, train_acc=train, val_acc=val, cost=cost)


def load_replay_manifest(path: str | Path) -> list[ReplayLearner]:
    """Load a manifest CSV with header ``learner,path`` (paths relative to it)."""
    base = Path(path).parent
    learners = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            table_path = Path(row["path"])
            if not table_path.is_absolute():
                table_path = base / table_path
            learners.append(ReplayLearner(row["learner"], ReplayTable.from_csv(table_path)))
    if not learners:
        raise ValueError(f"manifest {path} lists no learners")
    return learners


# ---------------------------------------------------------------------------
# External trainer workers

PROTOCOL_VERSION = 1


class WorkerProcess:
    """Client for a trainer worker speaking line-delimited JSON on stdio.

    One request in flight at a time; the handshake happens on construction.
    """

    def __init__(self, command: Sequence[str], *, timeout: float = 60.0) -> None:
        self.command = list(command)
        self.timeout = timeout
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self.learner_names = self._handshake()

    def _handshake(self) -> list[str]:
        reply = self.request({"op": "hello", "version": PROTOCOL_VERSION})
        if reply.get("op") != "hello":
            raise ProtocolError(f"expected hello reply, got {reply!r}")
        if reply.get("version") != PROTOCOL_VERSION:
            self.shutdown()
            raise ProtocolError(
                f"protocol version mismatch: ours {PROTOCOL_VERSION}, "
                f"worker {reply.get('version')!r}"
            )
        names = reply.get("learners")
        if not isinstance(names, list) or not all(isinstance(x, str) for x in names):
            raise ProtocolError(f"malformed learner list in hello reply: {reply!r}")
        return names

    def _read_line(self, timeout: float) -> str:
        assert self._proc.stdout is not None
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise LearnerFailure(f"worker timed out after {timeout:.1f}s")
            ready, _, _ = select.select([self._proc.stdout], [], [], remaining)
            if ready:
                line = self._proc.stdout.readline()
                if line == "":
                    code = self._proc.poll()
                    raise LearnerFailure(f"worker exited (code {code}) mid-request")
                if line.strip():
                    return line
            elif self._proc.poll() is not None:
                raise LearnerFailure(f"worker exited (code {self._proc.poll()})")

    def request(self, message: dict, *, timeout: float | None = None) -> dict:
        if self._proc.poll() is not None:
            raise LearnerFailure(f"worker already exited (code {self._proc.poll()})")
        assert self._proc.stdin is not None
        self._proc.stdin.write(json.dumps(message) + "\n")
        self._proc.stdin.flush()
        line = self._read_line(self.timeout if timeout is None else timeout)
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"undecodable worker reply: {line!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"worker reply is not an object: {reply!r}")
        return reply

    def train_eval(self, learner: str, n: int, seed: int, *, timeout: float | None = None) -> CurveSample:
        reply = self.request(
            {"op": "train_eval", "learner": learner, "n": int(n), "seed": int(seed)},
            timeout=timeout,
        )
        op = reply.get("op")
        if op == "error":
            code = reply.get("code")
            msg = reply.get("message", "")
            if code == "train_failed":
                raise LearnerFailure(f"{learner}: {msg}")
            raise ProtocolError(f"worker rejected request ({code}): {msg}")
        if op != "result":
            raise ProtocolError(f"unexpected worker reply: {reply!r}")
        try:
            if reply["learner"] != learner or int(reply["n"]) != int(n):
                raise ProtocolError(
                    f"reply echo mismatch: sent ({learner}, {n}), got "
                    f"({reply['learner']!r}, {reply['n']!r})"
                )
            return CurveSample(
                n=int(reply["n"]),
                train_acc=float(reply["train_acc"]),
                val_acc=float(reply["val_acc"]),
                cost=float(reply["cost_seconds"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed result record: {reply!r}") from exc

    def shutdown(self, *, timeout: float = 10.0) -> int:
        if self._proc.poll() is None:
            try:
                assert self._proc.stdin is not None
                self._proc.stdin.write(json.dumps({"op": "shutdown"}) + "\n")
                self._proc.stdin.flush()
                self._proc.wait(timeout=timeout)
            except (BrokenPipeError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()
        return self._proc.returncode

    def __enter__(self) -> "WorkerProcess":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


class ExternalLearner:
    """Adapter routing train_eval calls to one learner of a worker process."""

    supports_exact = False
    max_n: int | None = None

    def __init__(self, worker: WorkerProcess, name: str, *, timeout: float | None = None) -> None:
        if name not in worker.learner_names:
            raise ValueError(f"worker does not offer learner {name!r}")
        self.id = name
        self.worker = worker
        self.timeout = timeout

    def train_eval(self, n: int, seed: int) -> CurveSample:
        return self.worker.train_eval(self.id, n, seed, timeout=self.timeout)
