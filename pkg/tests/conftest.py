import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from obsobench.dataset import DatasetSchema, LabeledRecord, State
from obsobench.gateway import BackendConfig, RawResponse, StubBackend, fingerprint
from obsobench.parsing import ABSTAIN, MATCHED_NO, MATCHED_YES, NO_MATCH, Verdict

GOLDEN_DIR = Path(__file__).parent / "golden"
DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def simple_schema():
    return DatasetSchema(
        name="toy",
        entity_noun="diode",
        feature_columns=("Voltage", "Power"),
        label_column="state",
        label_map={"obsolete": State.OBSOLETE, "active": State.AVAILABLE},
        positive_class=State.AVAILABLE,
    )


def make_record(row_id, features, label=State.AVAILABLE):
    return LabeledRecord(row_id=row_id, features=tuple(features), label=label)


def make_verdict(row_id, state, raw=""):
    if state == ABSTAIN or state is None:
        return Verdict(row_id, ABSTAIN, raw, NO_MATCH)
    reason = MATCHED_YES if state is State.AVAILABLE else MATCHED_NO
    return Verdict(row_id, state, raw, reason)


def ok_response(prompt, text, model_id="stub-model", row_id=0):
    return RawResponse(row_id, model_id, fingerprint(prompt), text, "ok")


def make_stub(model_id="stub-model", table=None, default=None, **kwargs):
    config = BackendConfig(kind="stub", model_id=model_id, **kwargs)
    return StubBackend(config, table=table, default=default)


def write_csv(path, header, rows):
    lines = [",".join(header)] + [",".join(str(c) for c in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)
