"""Per-dataset model selection by unweighted metric voting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import MixedDatasets
from .metrics import MetricsReport

VOTING_METRICS = ("accuracy", "precision", "recall", "f1", "auc")


@dataclass(frozen=True)
class VoteTally:
    dataset_name: str
    votes: dict[str, int]  # model_id -> win count over the five metrics
    winner: str | None  # None when tied
    tied: tuple[str, ...]  # non-empty iff winner is None


def vote(reports: Sequence[MetricsReport], tie_break_lexicographic: bool = False) -> VoteTally:
    """Award one vote per metric to every report attaining that metric's maximum.

    Reports with an undefined metric sit out that metric's vote. Ties at the
    top of the tally are surfaced unless the lexicographic tie-break is on.
    """
    if len(reports) < 2:
        raise ValueError("voting needs at least two reports")
    datasets = {r.dataset_name for r in reports}
    if len(datasets) != 1:
        raise MixedDatasets(datasets)

    votes = {r.model_id: 0 for r in reports}
    for metric in VOTING_METRICS:
        values = [(r.model_id, getattr(r, metric)) for r in reports]
        defined = [(m, v) for m, v in values if v is not None]
        if not defined:
            continue
        best = max(v for _, v in defined)
        for model_id, value in defined:
            if value == best:
                votes[model_id] += 1

    top = max(votes.values())
    leaders = sorted(m for m, n in votes.items() if n == top)
    if len(leaders) == 1:
        return VoteTally(reports[0].dataset_name, votes, leaders[0], ())
    if tie_break_lexicographic:
        return VoteTally(reports[0].dataset_name, votes, leaders[0], tuple(leaders))
    return VoteTally(reports[0].dataset_name, votes, None, tuple(leaders))
