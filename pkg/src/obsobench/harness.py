"""End-to-end run orchestration: load, serialize, dispatch, parse, score, vote."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

try:
    import tomllib as toml_reader
except ModuleNotFoundError:  # Python < 3.11
    import tomli as toml_reader

from .dataset import DatasetSchema, DatasetStats, State, load_dataset, load_schema, summarize
from .errors import ConfigError, IoError
from .gateway import (
    STATUS_CACHE_MISS,
    BackendConfig,
    RawResponse,
    ResponseCache,
    build_backend,
    cached_classify,
    fingerprint,
)
from .metrics import EXCLUDE_ABSTAIN, POLICIES, ConfusionMatrix, MetricsReport, compute_report
from .parsing import parse_response
from .selection import VoteTally, vote
from .serialization import SKIP_EMPTY, VERBATIM_EMPTY, PromptTemplate, build_prompt, serialize_record

FORMATS = ("json", "csv", "markdown")


@dataclass(frozen=True)
class DatasetEntry:
    schema_path: str
    csv_path: str
    positive_class: State | None = None  # overrides the schema's choice


@dataclass(frozen=True)
class RunConfig:
    datasets: tuple[DatasetEntry, ...]
    backends: tuple[BackendConfig, ...]
    output_dir: str
    cache_path: str
    abstention_policy: str = EXCLUDE_ABSTAIN
    missing_value_policy: str = SKIP_EMPTY
    question_form: str | None = None
    row_limit: int | None = None

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        if not self.backends:
            raise ConfigError("at least one backend is required")
        if self.abstention_policy not in POLICIES:
            raise ConfigError(f"unknown abstention policy {self.abstention_policy!r}")
        if self.missing_value_policy not in (SKIP_EMPTY, VERBATIM_EMPTY):
            raise ConfigError(f"unknown missing-value policy {self.missing_value_policy!r}")
        if self.row_limit is not None and self.row_limit < 1:
            raise ConfigError("row_limit must be >= 1 when set")


def load_run_config(path: str | Path) -> RunConfig:
    base = Path(path).parent
    try:
        doc = toml_reader.loads(Path(path).read_text(encoding="utf-8"))
    except toml_reader.TOMLDecodeError as e:
        raise ConfigError(f"bad run config: {e}") from e

    run = doc.get("run", {})
    datasets = []
    for entry in doc.get("dataset", []):
        pos = entry.get("positive_class")
        datasets.append(
            DatasetEntry(
                schema_path=str(base / entry["schema"]),
                csv_path=str(base / entry["csv"]),
                positive_class=State.parse(pos) if pos else None,
            )
        )
    backends = []
    for entry in doc.get("backend", []):
        stub_table = entry.get("stub_table")
        backends.append(
            BackendConfig(
                kind=entry["kind"],
                model_id=entry["model_id"],
                endpoint_url=entry.get("endpoint_url", ""),
                max_new_tokens=entry.get("max_new_tokens", 8),
                request_timeout=entry.get("request_timeout", 30.0),
                max_retries=entry.get("max_retries", 2),
                max_in_flight=entry.get("max_in_flight", run.get("max_in_flight", 4)),
                retry_backoff=entry.get("retry_backoff", 0.5),
                api_key_env=entry.get("api_key_env"),
                stub_table_path=str(base / stub_table) if stub_table else None,
                stub_default=entry.get("default_response"),
            )
        )
    return RunConfig(
        datasets=tuple(datasets),
        backends=tuple(backends),
        output_dir=str(base / run.get("output_dir", "out")),
        cache_path=str(base / run.get("cache_path", "cache.jsonl")),
        abstention_policy=run.get("abstention_policy", EXCLUDE_ABSTAIN),
        missing_value_policy=run.get("missing_value_policy", SKIP_EMPTY),
        question_form=run.get("question_form"),
        row_limit=run.get("row_limit"),
    )


@dataclass
class RunReport:
    config_fingerprint: str
    dataset_stats: dict[str, DatasetStats]
    dataset_positive_class: dict[str, State]
    reports: list[MetricsReport]
    tallies: dict[str, VoteTally]
    started_at: str = ""
    finished_at: str = ""


def config_fingerprint(config: RunConfig) -> str:
    doc = {
        "datasets": [
            (d.schema_path, d.csv_path, d.positive_class.value if d.positive_class else None)
            for d in config.datasets
        ],
        "backends": [
            (b.kind, b.model_id, b.endpoint_url, b.max_new_tokens)
            for b in config.backends
        ],
        "abstention_policy": config.abstention_policy,
        "missing_value_policy": config.missing_value_policy,
        "question_form": config.question_form,
        "row_limit": config.row_limit,
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()


def render_prompts(config: RunConfig, limit: int | None = None) -> list[tuple[str, str]]:
    """(dataset_name, prompt) pairs in evaluation order; used by --dry-run."""
    out = []
    for entry in config.datasets:
        schema = load_schema(entry.schema_path)
        records = load_dataset(entry.csv_path, schema)
        if config.row_limit:
            records = records[: config.row_limit]
        template = _template_for(schema, config)
        for record in records:
            out.append((schema.name, build_prompt(
                serialize_record(record, config.missing_value_policy), template)))
            if limit is not None and len(out) >= limit:
                return out
    return out


def _template_for(schema: DatasetSchema, config: RunConfig) -> PromptTemplate:
    if config.question_form:
        return PromptTemplate(schema.entity_noun, config.question_form)
    return PromptTemplate(schema.entity_noun)


def _miss_response(model_id: str, prompt: str, row_id) -> RawResponse:
    return RawResponse(row_id, model_id, fingerprint(prompt), "", STATUS_CACHE_MISS)


def run_evaluation(config: RunConfig, backends=None, cache_only: bool = False) -> RunReport:
    """Evaluate every configured backend on every configured dataset.

    Models run sequentially; rows within a model are dispatched concurrently
    up to the backend's max_in_flight. With cache_only set, uncached rows are
    never dispatched and degrade to transport-failure abstentions.
    """
    started = datetime.now(timezone.utc).isoformat()
    if backends is None:
        backends = [build_backend(b) for b in config.backends]
    cache = ResponseCache(config.cache_path)

    dataset_stats: dict[str, DatasetStats] = {}
    dataset_positive: dict[str, State] = {}
    reports: list[MetricsReport] = []

    for entry in config.datasets:
        schema = load_schema(entry.schema_path)
        records = load_dataset(entry.csv_path, schema)
        if config.row_limit:
            records = records[: config.row_limit]
        dataset_stats[schema.name] = summarize(records)
        positive = entry.positive_class or schema.positive_class
        dataset_positive[schema.name] = positive
        template = _template_for(schema, config)
        prompts = [
            (r.row_id, build_prompt(serialize_record(r, config.missing_value_policy), template))
            for r in records
        ]
        labels = [r.label for r in records]
        order = {r.row_id: i for i, r in enumerate(records)}

        for backend in backends:
            model_id = backend.config.model_id

            def fetch(item):
                row_id, prompt = item
                if cache_only:
                    hit = cache.get(model_id, fingerprint(prompt))
                    return hit if hit is not None else _miss_response(model_id, prompt, row_id)
                return cached_classify(prompt, backend, cache, row_id=row_id)

            with ThreadPoolExecutor(max_workers=backend.config.max_in_flight) as pool:
                responses = list(pool.map(fetch, prompts))

            # re-key verdicts to dataset row order; completion order must not matter
            verdicts = [parse_response(resp) for resp in responses]
            keyed = {prompts[i][0]: v for i, v in enumerate(verdicts)}
            ordered = [keyed[row_id] for row_id in sorted(keyed, key=order.__getitem__)]
            reports.append(
                compute_report(
                    model_id,
                    schema.name,
                    ordered,
                    labels,
                    positive,
                    config.abstention_policy,
                )
            )

    tallies: dict[str, VoteTally] = {}
    for name in dataset_stats:
        per_dataset = [r for r in reports if r.dataset_name == name]
        if len(per_dataset) >= 2:
            tallies[name] = vote(per_dataset)

    return RunReport(
        config_fingerprint=config_fingerprint(config),
        dataset_stats=dataset_stats,
        dataset_positive_class=dataset_positive,
        reports=reports,
        tallies=tallies,
        started_at=started,
        finished_at=datetime.now(timezone.utc).isoformat(),
    )


# --- rendering ---------------------------------------------------------------


def _round_display(value: float | None, decimals: int, as_percent: bool = False) -> str:
    if value is None:
        return "---"
    scaled = Decimal(str(value)) * (100 if as_percent else 1)
    quantum = Decimal(1).scaleb(-decimals)
    return str(scaled.quantize(quantum, rounding=ROUND_HALF_UP))


def _report_dict(r: MetricsReport) -> dict:
    return {
        "model_id": r.model_id,
        "dataset": r.dataset_name,
        "metrics": {
            "accuracy": r.accuracy,
            "precision": r.precision,
            "recall": r.recall,
            "f1": r.f1,
            "fpr": r.fpr,
            "auc": r.auc,
            "abstention_rate": r.abstention_rate,
        },
        "confusion": {
            "tp": r.cm.tp,
            "fp": r.cm.fp,
            "fn": r.cm.fn,
            "tn": r.cm.tn,
            "abstentions": r.cm.abstentions,
            "positive_class": r.cm.positive_class.value,
        },
        "abstentions_by_reason": dict(sorted(r.abstentions_by_reason.items())),
        "roc_points": [list(p) for p in r.roc_points] if r.roc_points else None,
    }


def report_to_dict(report: RunReport) -> dict:
    return {
        "config_fingerprint": report.config_fingerprint,
        "datasets": {
            name: {
                "n_total": stats.n_total,
                "n_obsolete": stats.n_obsolete,
                "n_available": stats.n_available,
                "pct_obsolete": stats.pct_obsolete,
                "positive_class": report.dataset_positive_class[name].value,
            }
            for name, stats in report.dataset_stats.items()
        },
        "results": [_report_dict(r) for r in report.reports],
        "tallies": {
            name: {
                "votes": dict(sorted(t.votes.items())),
                "winner": t.winner,
                "tied": list(t.tied),
            }
            for name, t in report.tallies.items()
        },
    }


def canonical_json(report: RunReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2) + "\n"


def reports_from_dict(doc: dict) -> list[MetricsReport]:
    """Rebuild MetricsReports from a parsed report.json (for re-voting)."""
    out = []
    for item in doc["results"]:
        m = item["metrics"]
        c = item["confusion"]
        cm = ConfusionMatrix(
            tp=c["tp"], fp=c["fp"], fn=c["fn"], tn=c["tn"],
            abstentions=c["abstentions"],
            positive_class=State.parse(c["positive_class"]),
        )
        out.append(
            MetricsReport(
                model_id=item["model_id"],
                dataset_name=item["dataset"],
                accuracy=m["accuracy"],
                precision=m["precision"],
                recall=m["recall"],
                f1=m["f1"],
                fpr=m["fpr"],
                auc=m["auc"],
                abstention_rate=m["abstention_rate"],
                roc_points=tuple(tuple(p) for p in item["roc_points"]) if item["roc_points"] else None,
                cm=cm,
                abstentions_by_reason=item.get("abstentions_by_reason", {}),
            )
        )
    return out


def render_markdown(report: RunReport) -> str:
    datasets = list(report.dataset_stats)
    lines = ["# Evaluation results", ""]
    lines.append("## Dataset summary")
    lines.append("")
    lines.append("| Dataset | N | N obsolete | N available | % obsolete |")
    lines.append("|---|---|---|---|---|")
    for name, s in report.dataset_stats.items():
        lines.append(f"| {name} | {s.n_total} | {s.n_obsolete} | {s.n_available} | {s.pct_obsolete:.2f} |")
    lines.append("")
    lines.append("## Metrics")
    lines.append("")
    lines.append("| Model | Metric | " + " | ".join(datasets) + " |")
    lines.append("|---" * (2 + len(datasets)) + "|")
    models = []
    for r in report.reports:
        if r.model_id not in models:
            models.append(r.model_id)
    by_key = {(r.model_id, r.dataset_name): r for r in report.reports}

    def cell(model, dataset, metric):
        r = by_key.get((model, dataset))
        if r is None:
            return "---"
        value = getattr(r, metric)
        if metric == "accuracy":
            return _round_display(value, 2, as_percent=True)
        return _round_display(value, 3)

    for model in models:
        for metric in ("accuracy", "precision", "recall", "f1", "auc"):
            label = "F1" if metric == "f1" else metric.upper() if metric == "auc" else metric.capitalize()
            row = [cell(model, d, metric) for d in datasets]
            lines.append(f"| {model} | {label} | " + " | ".join(row) + " |")
    lines.append("")
    if report.tallies:
        lines.append("## Model selection")
        lines.append("")
        for name, t in report.tallies.items():
            votes = ", ".join(f"{m}: {n}" for m, n in sorted(t.votes.items()))
            outcome = t.winner if t.winner else "tie between " + ", ".join(t.tied)
            lines.append(f"- **{name}**: {outcome} ({votes})")
        lines.append("")
    return "\n".join(lines)


def render_metrics_csv(report: RunReport) -> str:
    lines = ["model,dataset,metric,value"]
    for r in report.reports:
        for metric in ("accuracy", "precision", "recall", "f1", "fpr", "auc", "abstention_rate"):
            value = getattr(r, metric)
            lines.append(f"{r.model_id},{r.dataset_name},{metric},"
                         + ("" if value is None else repr(value)))
    return "\n".join(lines) + "\n"


def _safe_name(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-._" else "_" for c in text)


def _atomic_write(path: Path, content: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fd, tmp = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(content)
        os.replace(tmp, path)
    except OSError as e:
        raise IoError(path, str(e)) from e


def emit_report(report: RunReport, formats, outdir: str | Path) -> list[Path]:
    """Write report artifacts; JSON is the canonical full-fidelity form."""
    outdir = Path(outdir)
    written: list[Path] = []
    formats = set(formats)
    unknown = formats - set(FORMATS)
    if unknown:
        raise ConfigError(f"unknown report formats: {sorted(unknown)}")
    if "json" in formats:
        _atomic_write(outdir / "report.json", canonical_json(report))
        written.append(outdir / "report.json")
        meta = {
            "config_fingerprint": report.config_fingerprint,
            "started_at": report.started_at,
            "finished_at": report.finished_at,
        }
        _atomic_write(outdir / "meta.json", json.dumps(meta, sort_keys=True, indent=2) + "\n")
        written.append(outdir / "meta.json")
    if "markdown" in formats:
        _atomic_write(outdir / "report.md", render_markdown(report))
        written.append(outdir / "report.md")
    if "csv" in formats:
        _atomic_write(outdir / "metrics.csv", render_metrics_csv(report))
        written.append(outdir / "metrics.csv")
        for r in report.reports:
            if r.roc_points is None:
                continue
            path = outdir / f"roc_{_safe_name(r.model_id)}_{_safe_name(r.dataset_name)}.csv"
            rows = ["fpr,tpr"] + [f"{repr(x)},{repr(y)}" for x, y in r.roc_points]
            _atomic_write(path, "\n".join(rows) + "\n")
            written.append(path)
    return written
