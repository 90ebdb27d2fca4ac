"""Trace and summary serialization, plus the run-comparison table.

A run serializes to a JSONL trace (one record per allocation plus one
summary record) that reconstructs the in-memory report field-for-field,
and to a flat per-learner summary CSV for plotting.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .core import AllocationSequence, RunReport, TraceRecord
from .errors import DaubError
from .ideal import Verdict

__all__ = [
    "write_trace",
    "read_trace",
    "write_summary_csv",
    "write_verdicts",
    "read_verdicts",
    "format_speedup",
    "comparison_table",
    "ComparisonError",
]


class ComparisonError(DaubError):
    """Reports cover different learner pools and cannot be compared."""


def write_trace(report: RunReport, path: str | Path) -> None:
    with open(path, "w") as fh:
        summary = {
            "type": "run_summary",
            "selected": report.selected,
            "per_learner_cost": report.per_learner_cost,
            "total_cost": report.total_cost,
            "selected_cost": report.selected_cost,
            "failures": report.failures,
            "regret": report.regret,
            "loss": report.loss,
        }
        fh.write(json.dumps(summary) + "\n")
        for rec in report.records:
            fh.write(
                json.dumps(
                    {
                        "type": "allocation",
                        "iter": rec.iter,
                        "learner": rec.learner,
                        "n": rec.n,
                        "train_acc": rec.train_acc,
                        "val_acc": rec.val_acc,
                        "bound": rec.bound,
                        "cost": rec.cost,
                    }
                )
                + "\n"
            )


def read_trace(path: str | Path) -> RunReport:
    summary = None
    records: list[TraceRecord] = []
    sequence = AllocationSequence()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("type") == "run_summary":
                summary = obj
            elif obj.get("type") == "allocation":
                records.append(
                    TraceRecord(
                        iter=obj["iter"],
                        learner=obj["learner"],
                        n=obj["n"],
                        train_acc=obj["train_acc"],
                        val_acc=obj["val_acc"],
                        bound=obj["bound"],
                        cost=obj["cost"],
                    )
                )
                sequence.append(obj["learner"], obj["n"])
    if summary is None:
        raise DaubError(f"trace {path} has no run_summary record")
    return RunReport(
        selected=summary["selected"],
        sequence=sequence,
        records=records,
        per_learner_cost=dict(summary["per_learner_cost"]),
        total_cost=summary["total_cost"],
        selected_cost=summary["selected_cost"],
        failures=dict(summary["failures"]),
        regret=summary["regret"],
        loss=summary["loss"],
    )


def write_summary_csv(report: RunReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["learner", "iterations", "allocated", "cost", "final_val_acc", "selected"]
        )
        for learner in report.sequence.learners():
            allocations = report.sequence.induced(learner)
            writer.writerow(
                [
                    learner,
                    len(allocations),
                    sum(allocations),
                    repr(report.per_learner_cost[learner]),
                    repr(report.final_accuracy(learner)),
                    int(learner == report.selected),
                ]
            )


def write_verdicts(verdicts: list[Verdict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for v in verdicts:
            fh.write(
                json.dumps(
                    {
                        "type": "verdict",
                        "name": v.name,
                        "learner": v.learner,
                        "passed": bool(v.passed),
                        "detail": v.detail,
                    }
                )
                + "\n"
            )


def read_verdicts(path: str | Path) -> list[Verdict]:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out.append(Verdict(obj["name"], obj["learner"], obj["passed"], obj["detail"]))
    return out


def format_speedup(full_time: float, daub_time: float) -> str:
    """Integer 'x' at or above 10, one decimal below (table style)."""
    value = full_time / daub_time
    if value >= 10:
        return f"{round(value):d}x"
    return f"{value:.1f}x"


def comparison_table(daub_report: RunReport, full_report: RunReport) -> dict:
    """Iterations/Allocation/Time rows plus the speedup and selection loss."""
    pools = (
        set(daub_report.per_learner_cost) | set(daub_report.failures),
        set(full_report.per_learner_cost) | set(full_report.failures),
    )
    if pools[0] != pools[1]:
        raise ComparisonError(
            f"reports cover different pools: {sorted(pools[0])} vs {sorted(pools[1])}"
        )
    full_acc = full_report.final_accuracy()
    daub_acc = daub_report.final_accuracy()
    loss = max(0.0, full_acc - daub_acc)
    return {
        "iterations": {"full": len(full_report.records), "daub": len(daub_report.records)},
        "allocation": {
            "full": sum(n for _, n in full_report.sequence),
            "daub": sum(n for _, n in daub_report.sequence),
        },
        "time": {"full": full_report.total_cost, "daub": daub_report.total_cost},
        "speedup": format_speedup(full_report.total_cost, daub_report.total_cost),
        "loss": f"{100.0 * loss:.1f}%",
    }


def render_comparison(table: dict) -> str:
    lines = [
        f"{'':12s}{'Full':>14s}{'DAUB':>14s}",
        f"{'Iterations':12s}{table['iterations']['full']:>14d}{table['iterations']['daub']:>14d}",
        f"{'Allocation':12s}{table['allocation']['full']:>14,d}{table['allocation']['daub']:>14,d}",
        f"{'Time':12s}{table['time']['full']:>14,.1f}{table['time']['daub']:>14,.1f}",
        f"Speedup: {table['speedup']}",
        f"Loss: {table['loss']}",
    ]
    return "\n".join(lines)
