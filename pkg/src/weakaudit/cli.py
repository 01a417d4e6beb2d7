"""Command-line entry points for the audit/enhance pipeline."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .benchmark import BenchmarkSpec
from .errors import StageError, WeakauditError
from .pipeline import (
    PipelineConfig,
    benchmark_pipeline_config,
    load_config,
    run_audit,
    run_enhance,
    save_config,
    write_benchmark,
)


def _apply_overrides(
    config: PipelineConfig,
    seed: int | None,
    out: str | None,
    offline: bool,
) -> PipelineConfig:
    if seed is not None:
        config = replace(config, seed=seed)
    if out is not None:
        config = replace(config, out_dir=out)
    if offline:
        config = replace(config, offline=True)
    return config


def _load(config_path: str, seed: int | None, out: str | None, offline: bool) -> PipelineConfig:
    return _apply_overrides(load_config(config_path), seed, out, offline)


@click.group()
def main() -> None:
    """Audit a classifier's decision boundary and mitigate what reviewers flag."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Benchmark spec JSON; defaults to the frozen spec.")
@click.option("--seed", type=int, default=None, help="Override the generation seed.")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Directory for the dataset files and run config.")
def benchmark(config_path: str | None, seed: int | None, out_dir: str) -> None:
    """Generate the planted-weakspot dataset and a ready-to-run config."""
    if config_path is not None:
        spec = BenchmarkSpec.from_json_dict(
            json.loads(Path(config_path).read_text(encoding="utf-8"))
        )
    else:
        spec = BenchmarkSpec()
    if seed is not None:
        spec = replace(spec, seed=seed)
    data_dir = Path(out_dir) / "data"
    paths = write_benchmark(spec, data_dir)
    run_config = benchmark_pipeline_config(spec, data_dir, Path(out_dir) / "run")
    config_file = Path(out_dir) / "pipeline_config.json"
    save_config(run_config, config_file)
    click.echo(f"dataset written under {data_dir}")
    for name, path in paths.items():
        click.echo(f"  {name}: {path}")
    click.echo(f"pipeline config: {config_file}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--offline", is_flag=True, default=False,
              help="Restrict procurement to offline channels.")
def audit(config_path: str, seed: int | None, out: str | None, offline: bool) -> None:
    """Train/evaluate the baseline and detect weakspots; write the audit report."""
    config = _load(config_path, seed, out, offline)
    try:
        outcome = run_audit(config)
    except StageError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"baseline accuracy: {outcome.metrics.overall_accuracy:.2f}%")
    for report in outcome.disparities:
        click.echo(
            f"disparity {report.attribute} ({report.group_a} vs {report.group_b}): "
            f"{report.disparity:.2f} pts"
        )
    click.echo(f"weakspots at radius {config.audit.radius}: {len(outcome.weakspots)}")
    click.echo(f"associations shortlisted for review: {len(outcome.queue)}")
    click.echo(f"report: {Path(config.out_dir) / 'audit_report.json'}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--offline", is_flag=True, default=False)
def enhance(config_path: str, seed: int | None, out: str | None, offline: bool) -> None:
    """Procure new samples from prompts + verdicts, fine-tune, and re-audit."""
    config = _load(config_path, seed, out, offline)
    try:
        outcome = run_enhance(config)
    except StageError as exc:
        raise click.ClickException(str(exc)) from exc
    before = outcome.before_metrics.overall_accuracy
    after = outcome.after_metrics.overall_accuracy
    click.echo(f"accuracy: {before:.2f}% -> {after:.2f}%")
    for entry in outcome.report["disparity_reductions"]:
        reduction = entry["reduction"]
        shown = f"{reduction:.2f}%" if reduction is not None else "n/a"
        click.echo(
            f"disparity {entry['attribute']} ({entry['group_a']} vs {entry['group_b']}): "
            f"{entry['before']:.2f} -> {entry['after']:.2f} pts (reduction {shown})"
        )
    click.echo(
        f"weakspots at radius {config.audit.radius}: "
        f"{outcome.report['weakspot_count_before']} -> {outcome.report['weakspot_count_after']}"
    )
    added = outcome.report["procurement"]["added_count"]
    fraction = outcome.report["procurement"]["augmentation_fraction"]
    click.echo(f"added {added} samples ({fraction:.2f}% of the training set)")
    click.echo(f"report: {Path(config.out_dir) / 'enhance_report.json'}")


@main.command()
@click.argument("report_path", type=click.Path(exists=True))
def report(report_path: str) -> None:
    """Pretty-print a pipeline report file."""
    payload = json.loads(Path(report_path).read_text(encoding="utf-8"))
    if "baseline_metrics" in payload:
        metrics = payload["baseline_metrics"]
        click.echo("audit report")
        click.echo(f"  overall accuracy: {metrics['overall_accuracy']:.2f}%")
        click.echo(f"  weakspots: {len(payload['weakspots'])}")
        for row in payload["grid"]["rows"]:
            click.echo(
                f"  grid d={row['radius']}: {row['weakspot_count']} weakspot(s)"
            )
        for entry in payload["disparities"]:
            click.echo(
                f"  disparity {entry['attribute']} "
                f"({entry['group_a']} vs {entry['group_b']}): {entry['disparity']:.2f} pts"
            )
        click.echo(f"  associations: {len(payload['associations'])}")
        click.echo(f"  shortlisted: {len(payload['shortlist'])}")
    elif "after_metrics" in payload:
        click.echo("enhance report")
        click.echo(
            f"  accuracy: {payload['before_metrics']['overall_accuracy']:.2f}% -> "
            f"{payload['after_metrics']['overall_accuracy']:.2f}%"
        )
        for entry in payload["disparity_reductions"]:
            reduction = entry["reduction"]
            shown = f"{reduction:.2f}%" if reduction is not None else "n/a"
            click.echo(
                f"  disparity {entry['attribute']}: {entry['before']:.2f} -> "
                f"{entry['after']:.2f} pts (reduction {shown})"
            )
        click.echo(
            f"  weakspots: {payload['weakspot_count_before']} -> "
            f"{payload['weakspot_count_after']}"
        )
        procurement = payload["procurement"]
        click.echo(
            f"  procured {procurement['added_count']} samples over "
            f"{procurement['fulfilled_batches']} batch(es); "
            f"{len(procurement['failures'])} failure(s)"
        )
    else:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        sys.exit(0)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.option("--offline", is_flag=True, default=False)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--static", "static_dir", type=click.Path(), default=None,
              help="Directory of built UI assets to serve at /.")
def serve(
    config_path: str,
    seed: int | None,
    out: str | None,
    offline: bool,
    host: str,
    port: int,
    static_dir: str | None,
) -> None:
    """Serve the review API (and UI, if built) over the audit artifacts."""
    from .service import serve as run_service

    config = _load(config_path, seed, out, offline)
    if static_dir is None:
        default_static = Path("frontend") / "dist"
        if default_static.is_dir():
            static_dir = str(default_static)
    try:
        run_service(config, host=host, port=port, static_dir=static_dir)
    except WeakauditError as exc:
        raise click.ClickException(str(exc)) from exc


if __name__ == "__main__":
    main()
