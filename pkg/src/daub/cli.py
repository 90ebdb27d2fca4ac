"""Command-line entry points: run, compare, schedule, ablate-ft, verify, trend.

Configuration is a single YAML file (see README for the schema); runs emit
a JSONL trace and a per-learner summary CSV. Exit codes: 0 success,
2 configuration error, 3 a learner failure that aborted the run.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import click
import yaml

from . import ideal, scheduler, trace
from .core import DaubConfig
from .errors import ConfigError, DaubError, RunError
from .learners import (
    ExternalLearner,
    SyntheticCurveSpec,
    SyntheticLearner,
    WorkerProcess,
    load_replay_manifest,
)

EXIT_CONFIG = 2
EXIT_RUN = 3

MODES = ("daub", "daub_star", "full", "fixed_fraction", "elimination", "verify", "trend")


@dataclass
class RunConfig:
    mode: str
    params: DaubConfig
    seed: int
    raw: dict
    source_dir: Path

    def make_learners(self, stack=None):
        raw = self.raw
        kinds = [k for k in ("learners", "replay_manifest", "worker") if raw.get(k)]
        if len(kinds) != 1:
            raise ConfigError(
                f"config must define exactly one of learners/replay_manifest/worker, got {kinds}"
            )
        if "learners" in kinds:
            specs = []
            for entry in raw["learners"]:
                entry = dict(entry)
                name = entry.pop("name", None)
                if not name:
                    raise ConfigError(f"synthetic learner entry missing a name: {entry}")
                spec = SyntheticCurveSpec(
                    family=entry.pop("family", "inverse"),
                    a=entry.pop("asymptote"),
                    c=entry.pop("scale", 0.0),
                    alpha=entry.pop("alpha", 1.0),
                    noise_sigma=entry.pop("noise_sigma", 0.0),
                    overfit_m0=entry.pop("overfit_m0", 0.5),
                    cost_exponent=entry.pop("cost_exponent", 1.0),
                    cost_scale=entry.pop("cost_scale", 1.0),
                )
                if entry:
                    raise ConfigError(f"unknown learner fields: {sorted(entry)}")
                specs.append(SyntheticLearner(name, spec))
            return specs
        if "replay_manifest" in kinds:
            path = Path(raw["replay_manifest"])
            if not path.is_absolute():
                path = self.source_dir / path
            if not path.exists():
                raise ConfigError(f"replay manifest not found: {path}")
            return load_replay_manifest(path)
        # external worker
        worker_cfg = raw["worker"]
        command = worker_cfg.get("command")
        if not command:
            raise ConfigError("worker config needs a command list")
        worker = WorkerProcess(command, timeout=float(worker_cfg.get("timeout", 120.0)))
        if stack is not None:
            stack.append(worker)
        names = worker_cfg.get("learners") or worker.learner_names
        return [ExternalLearner(worker, name) for name in names]


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    mode = raw.get("mode", "daub")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    params = raw.get("params")
    if not isinstance(params, dict):
        raise ConfigError("config needs a 'params' mapping with r, b, N")
    try:
        config = DaubConfig(
            r=float(params["r"]),
            b=int(params["b"]),
            N=int(params["N"]),
            delta=float(params.get("delta", 0.01)),
            s=int(params.get("s", 1)),
        )
    except KeyError as exc:
        raise ConfigError(f"params missing required field {exc}") from exc
    return RunConfig(
        mode=mode,
        params=config,
        seed=int(raw.get("seed", 0)),
        raw=raw,
        source_dir=path.parent,
    )


def _emit(report, out_dir: str | None) -> None:
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace.write_trace(report, out / "trace.jsonl")
        trace.write_summary_csv(report, out / "summary.csv")
    click.echo(
        f"selected={report.selected} iterations={len(report.records)} "
        f"allocation={sum(n for _, n in report.sequence)} cost={report.total_cost:.6g}"
    )
    for learner, message in report.failures.items():
        click.echo(f"learner failed: {learner}: {message}", err=True)


def _ideal_problem(cfg: RunConfig) -> ideal.IdealProblem:
    learners = cfg.make_learners()
    if not all(isinstance(lr, SyntheticLearner) for lr in learners):
        raise ConfigError("exact-mode analysis needs synthetic (noiseless) learners")
    return ideal.IdealProblem({lr.id: lr.spec for lr in learners}, cfg.params)


@click.group()
def main() -> None:
    """Cost-sensitive training-data allocation runner."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--mode", type=click.Choice(MODES), default=None, help="Override the config mode.")
def run(config_path: str, seed: int | None, out_dir: str | None, mode: str | None) -> None:
    """Execute the mode selected by the config file."""
    try:
        cfg = load_run_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if seed is not None:
        cfg.seed = seed
    if mode is not None:
        cfg.mode = mode
    try:
        _dispatch(cfg, out_dir)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (RunError, DaubError) as exc:
        click.echo(f"run error: {exc}", err=True)
        sys.exit(EXIT_RUN)


def _dispatch(cfg: RunConfig, out_dir: str | None) -> None:
    workers: list[WorkerProcess] = []
    try:
        if cfg.mode == "daub":
            learners = cfg.make_learners(workers)
            report = scheduler.run_daub(learners, cfg.params, seed=cfg.seed)
            _emit(report, out_dir)
        elif cfg.mode == "daub_star":
            result = ideal.run_daub_star(_ideal_problem(cfg))
            _emit(result.report, out_dir)
            _report_verdicts(result.verdicts, out_dir)
        elif cfg.mode == "full":
            learners = cfg.make_learners(workers)
            report = scheduler.run_full_training(learners, cfg.params.N, seed=cfg.seed)
            _emit(report, out_dir)
        elif cfg.mode == "fixed_fraction":
            learners = cfg.make_learners(workers)
            n = int(cfg.raw.get("fixed_fraction_n", cfg.params.b))
            report = scheduler.run_fixed_fraction(learners, n, cfg.params.N, seed=cfg.seed)
            _emit(report, out_dir)
        elif cfg.mode == "elimination":
            learners = cfg.make_learners(workers)
            report = scheduler.run_elimination(learners, cfg.params, seed=cfg.seed)
            _emit(report, out_dir)
        elif cfg.mode == "verify":
            _cmd_verify(cfg, out_dir)
        elif cfg.mode == "trend":
            _cmd_trend(cfg, out_dir)
    finally:
        for worker in workers:
            worker.shutdown()


def _report_verdicts(verdicts, out_dir: str | None) -> None:
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace.write_verdicts(verdicts, out / "verdicts.jsonl")
    for v in verdicts:
        status = "pass" if v.passed else "FAIL"
        click.echo(f"[{status}] {v.name} ({v.learner}) {v.detail}")
    if any(not v.passed for v in verdicts):
        raise RunError("verification found counterexamples (see verdicts above)")


def _cmd_verify(cfg: RunConfig, out_dir: str | None) -> None:
    """Exact-mode verification: bound validity, run bounds, adversarial pair."""
    problem = _ideal_problem(cfg)
    verdicts = []
    for name, spec in problem.specs.items():
        ok, bad = ideal.well_behaved_scan(spec, cfg.params.N)
        verdicts.append(
            ideal.Verdict("well_behaved", name, ok, "" if ok else f"violation at n={bad}")
        )
        for v in ideal.verify_ub_validity(
            spec, cfg.params.N, cfg.params.s, b=cfg.params.b, r=cfg.params.r
        ):
            verdicts.append(ideal.Verdict(v.name, name, v.passed, v.detail))
    result = ideal.run_daub_star(problem)
    verdicts.extend(result.verdicts)
    lb = cfg.raw.get("lower_bound", {"delta": 0.05, "c": 100.0})
    inst = ideal.lower_bound_instance(
        float(lb.get("delta", 0.05)), cfg.params.N, float(lb.get("c", 100.0)), s=cfg.params.s
    )
    verdicts.extend(inst.verdicts)
    _report_verdicts(verdicts, out_dir)


def _cmd_trend(cfg: RunConfig, out_dir: str | None) -> None:
    grid = cfg.raw.get("trend", {}).get("N_grid")
    if not grid:
        raise ConfigError("trend mode needs trend.N_grid in the config")
    base = _ideal_problem(cfg)

    def problem_for_N(N: int) -> ideal.IdealProblem:
        params = DaubConfig(
            r=cfg.params.r, b=cfg.params.b, N=int(N), delta=cfg.params.delta, s=cfg.params.s
        )
        return ideal.IdealProblem(base.specs, params)

    rows = ideal.regret_trend(problem_for_N, [int(N) for N in grid])
    click.echo(f"{'N':>10s} {'regret':>14s} {'M*cost_sel':>14s} {'ratio':>12s}")
    for row in rows:
        click.echo(
            f"{row['N']:>10d} {row['regret']:>14.6g} "
            f"{row['m_times_selected_cost']:>14.6g} {row['ratio']:>12.6g}"
        )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        import csv as _csv

        with open(out / "trend.csv", "w", newline="") as fh:
            writer = _csv.DictWriter(
                fh, fieldnames=["N", "regret", "m_times_selected_cost", "ratio"]
            )
            writer.writeheader()
            writer.writerows(rows)


@main.command()
@click.argument("daub_trace", type=click.Path(exists=True))
@click.argument("full_trace", type=click.Path(exists=True))
def compare(daub_trace: str, full_trace: str) -> None:
    """Tabulate a bound-driven run against a full-training run."""
    try:
        table = trace.comparison_table(trace.read_trace(daub_trace), trace.read_trace(full_trace))
    except trace.ComparisonError as exc:
        click.echo(f"comparison error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(trace.render_comparison(table))


@main.command()
@click.argument("b", type=int)
@click.argument("r", type=float)
@click.argument("n", type=int)
@click.option("--sizes", default=None, help="Comma-separated explicit size list override.")
def schedule(b: int, r: float, n: int, sizes: str | None) -> None:
    """Print the geometric allocation sizes (or echo an explicit override)."""
    if sizes is not None:
        values = [int(x) for x in sizes.split(",")]
        click.echo(" ".join(str(v) for v in values))
        return
    try:
        values = scheduler.schedule_sizes(b, r, n)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(" ".join(str(v) for v in values))


@main.command("ablate-ft")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), default=None)
def ablate_ft(config_path: str, seed: int | None, out_dir: str | None) -> None:
    """Run with and without the training-accuracy cap and tabulate both."""
    try:
        cfg = load_run_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if seed is not None:
        cfg.seed = seed
    try:
        learners = cfg.make_learners()
        with_cap = scheduler.run_daub(
            learners, cfg.params, seed=cfg.seed,
            policy=scheduler.RegressionBoundPolicy(use_train_cap=True),
        )
        learners = cfg.make_learners()  # fresh adapters; histories are per-run
        without_cap = scheduler.run_daub(
            learners, cfg.params, seed=cfg.seed,
            policy=scheduler.RegressionBoundPolicy(use_train_cap=False),
        )
    except (RunError, DaubError) as exc:
        click.echo(f"run error: {exc}", err=True)
        sys.exit(EXIT_RUN)
    click.echo(f"{'':14s}{'no train cap':>14s}{'with cap':>14s}")
    click.echo(
        f"{'Iterations':14s}{len(without_cap.records):>14d}{len(with_cap.records):>14d}"
    )
    alloc_no = sum(n for _, n in without_cap.sequence)
    alloc_with = sum(n for _, n in with_cap.sequence)
    click.echo(f"{'Allocation':14s}{alloc_no:>14,d}{alloc_with:>14,d}")
    click.echo(
        f"{'Time':14s}{without_cap.total_cost:>14,.1f}{with_cap.total_cost:>14,.1f}"
    )
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace.write_trace(with_cap, out / "trace_with_cap.jsonl")
        trace.write_trace(without_cap, out / "trace_no_cap.jsonl")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
def verify(ctx: click.Context, config_path: str, out_dir: str | None) -> None:
    """Exact-mode verification suite (shorthand for run --mode verify)."""
    ctx.invoke(run, config_path=config_path, seed=None, out_dir=out_dir, mode="verify")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.pass_context
def trend(ctx: click.Context, config_path: str, out_dir: str | None) -> None:
    """Regret-ratio trend over an N grid (shorthand for run --mode trend)."""
    ctx.invoke(run, config_path=config_path, seed=None, out_dir=out_dir, mode="trend")


if __name__ == "__main__":
    main()
