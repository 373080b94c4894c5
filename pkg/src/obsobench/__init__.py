"""Batch harness for zero-shot availability/obsolescence classification with LLMs."""

from .dataset import (
    DatasetSchema,
    DatasetStats,
    LabeledRecord,
    State,
    load_dataset,
    load_schema,
    summarize,
)
from .gateway import BackendConfig, RawResponse, ResponseCache, cached_classify, classify_prompt
from .metrics import ConfusionMatrix, MetricsReport, build_confusion, compute_report
from .parsing import Verdict, parse_response
from .selection import VoteTally, vote
from .serialization import PromptTemplate, SerializedInstance, build_prompt, serialize_record

__all__ = [
    "BackendConfig",
    "ConfusionMatrix",
    "DatasetSchema",
    "DatasetStats",
    "LabeledRecord",
    "MetricsReport",
    "PromptTemplate",
    "RawResponse",
    "ResponseCache",
    "SerializedInstance",
    "State",
    "Verdict",
    "VoteTally",
    "build_confusion",
    "build_prompt",
    "cached_classify",
    "classify_prompt",
    "compute_report",
    "load_dataset",
    "load_schema",
    "parse_response",
    "serialize_record",
    "summarize",
    "vote",
]

__version__ = "0.1.0"
