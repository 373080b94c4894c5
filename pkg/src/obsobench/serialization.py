"""Row-to-sentence serialization and classification prompt assembly."""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import LabeledRecord
from .errors import TemplateMissingPlaceholder

SKIP_EMPTY = "skip_empty"
VERBATIM_EMPTY = "verbatim_empty"

# Placeholder names available to custom question forms.
DEFAULT_QUESTION_FORM = (
    "{entity_noun_capitalized} features: {serialization} "
    "Question: Is this {entity_noun} available? Yes or no? Answer:"
)


@dataclass(frozen=True)
class SerializedInstance:
    text: str
    row_id: str | int


@dataclass(frozen=True)
class PromptTemplate:
    entity_noun: str
    question_form: str = DEFAULT_QUESTION_FORM

    def __post_init__(self):
        if self.question_form.count("{serialization}") != 1:
            raise TemplateMissingPlaceholder("serialization")
        if not self.question_form.rstrip().endswith("Answer:"):
            raise TemplateMissingPlaceholder("Answer:")


def serialize_record(record: LabeledRecord, policy: str = SKIP_EMPTY) -> SerializedInstance:
    """Render a record as one "The <column> is <value>." sentence per feature.

    Under the default policy, features with empty cell text are skipped;
    under VERBATIM_EMPTY the empty value is inserted as-is.
    """
    sentences = []
    for name, value in record.features:
        if value == "" and policy == SKIP_EMPTY:
            continue
        sentences.append(f"The {name} is {value}.")
    return SerializedInstance(text=" ".join(sentences), row_id=record.row_id)


def build_prompt(instance: SerializedInstance, template: PromptTemplate) -> str:
    noun = template.entity_noun
    return template.question_form.format(
        entity_noun=noun,
        entity_noun_capitalized=noun[:1].upper() + noun[1:],
        serialization=instance.text,
    )
