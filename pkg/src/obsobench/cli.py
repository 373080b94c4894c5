"""Command-line interface: run, stats, vote, replay."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dataset import load_dataset, load_schema, summarize
from .errors import ObsobenchError
from .harness import (
    emit_report,
    load_run_config,
    render_prompts,
    reports_from_dict,
    run_evaluation,
)
from .selection import vote as run_vote


@click.group()
def main():
    """Zero-shot obsolescence classification harness."""


def _parse_formats(text: str) -> set[str]:
    if not text:
        return set()
    return {f.strip() for f in text.split(",") if f.strip()}


def _check_ties(tallies, strict):
    for name, tally in tallies.items():
        if tally.winner is None:
            click.echo(f"{name}: tie between {', '.join(tally.tied)}")
            if strict:
                sys.exit(2)
        else:
            click.echo(f"{name}: winner {tally.winner} ({tally.votes[tally.winner]} votes)")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--formats", default="json,csv,markdown", show_default=True,
              help="comma-separated subset of json,csv,markdown")
@click.option("--dry-run", "dry_run", type=int, default=0,
              help="print the first N rendered prompts and exit")
@click.option("--strict", is_flag=True, help="exit nonzero if any dataset winner is a tie")
def run(config_path, formats, dry_run, strict):
    """Full evaluation: load, prompt, dispatch (cache-first), score, vote."""
    try:
        config = load_run_config(config_path)
        if dry_run:
            for name, prompt in render_prompts(config, limit=dry_run):
                click.echo(f"[{name}] {prompt}")
            return
        report = run_evaluation(config)
        files = emit_report(report, _parse_formats(formats), config.output_dir)
        for path in files:
            click.echo(f"wrote {path}")
        _check_ties(report.tallies, strict)
    except ObsobenchError as e:
        raise click.ClickException(str(e)) from e


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--formats", default="json,csv,markdown", show_default=True)
@click.option("--strict", is_flag=True)
def replay(config_path, formats, strict):
    """Score from the cache only; uncached rows become abstentions."""
    try:
        config = load_run_config(config_path)
        report = run_evaluation(config, cache_only=True)
        files = emit_report(report, _parse_formats(formats), config.output_dir)
        for path in files:
            click.echo(f"wrote {path}")
        _check_ties(report.tallies, strict)
    except ObsobenchError as e:
        raise click.ClickException(str(e)) from e


@main.command()
@click.option("--schema", "schema_path", required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
def stats(schema_path, csv_path):
    """Summarize a dataset: row counts and obsolete proportion."""
    try:
        schema = load_schema(schema_path)
        records = load_dataset(csv_path, schema)
        s = summarize(records)
        click.echo(f"dataset: {schema.name}")
        click.echo(f"n_total: {s.n_total}")
        click.echo(f"n_obsolete: {s.n_obsolete}")
        click.echo(f"n_available: {s.n_available}")
        click.echo(f"pct_obsolete: {s.pct_obsolete:.2f}")
    except ObsobenchError as e:
        raise click.ClickException(str(e)) from e


@main.command()
@click.option("--report", "report_path", required=True, type=click.Path(exists=True))
@click.option("--strict", is_flag=True)
def vote(report_path, strict):
    """Re-run model selection over an existing report.json."""
    try:
        doc = json.loads(Path(report_path).read_text(encoding="utf-8"))
        reports = reports_from_dict(doc)
        datasets = sorted({r.dataset_name for r in reports})
        tallies = {}
        for name in datasets:
            group = [r for r in reports if r.dataset_name == name]
            if len(group) >= 2:
                tallies[name] = run_vote(group)
        _check_ties(tallies, strict)
    except ObsobenchError as e:
        raise click.ClickException(str(e)) from e


if __name__ == "__main__":
    main()
