"""Normalization of raw completions into Available / Obsolete / Abstain verdicts."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .dataset import State
from .gateway import RawResponse

ABSTAIN = "Abstain"

MATCHED_YES = "matched_yes"
MATCHED_NO = "matched_no"
NO_MATCH = "no_match"
TRANSPORT_FAILURE = "transport_failure"

# Characters stripped from the front of a completion before token matching.
_LEADING_JUNK = " \t\r\n.,:;\"'"

_TOKENS = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class Verdict:
    row_id: str | int
    state: State | str  # State, or the ABSTAIN sentinel
    raw: str
    reason: str

    @property
    def is_abstain(self) -> bool:
        return self.state == ABSTAIN


def parse_response(response: RawResponse) -> Verdict:
    """Read the leading yes/no token of a completion.

    The question asks "Is this <entity> available?", so yes means Available
    and no means Obsolete. Anything else abstains, as do transport failures.
    """
    if not response.ok:
        return Verdict(response.row_id, ABSTAIN, response.completion_text, TRANSPORT_FAILURE)

    text = response.completion_text.lower().lstrip(_LEADING_JUNK)
    first = _TOKENS.match(text)
    if first is None:
        return Verdict(response.row_id, ABSTAIN, response.completion_text, NO_MATCH)
    token = first.group(0)

    if token in ("yes", "no"):
        # "yes ... no" / "no ... yes" as the first two tokens is ambiguous
        second = _TOKENS.search(text, first.end())
        if second is not None and {token, second.group(0)} == {"yes", "no"}:
            return Verdict(response.row_id, ABSTAIN, response.completion_text, NO_MATCH)

    if token == "yes":
        return Verdict(response.row_id, State.AVAILABLE, response.completion_text, MATCHED_YES)
    if token == "no":
        return Verdict(response.row_id, State.OBSOLETE, response.completion_text, MATCHED_NO)
    return Verdict(response.row_id, ABSTAIN, response.completion_text, NO_MATCH)
