"""End-to-end rescoring of one conversation, and its JSON record forms.

Each input file is one conversation.  The compiled index is shared: per
conversation its symbol table is copied and extended with whatever novel
words the lattice carries, so ids stay aligned without rebuilding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .annotate import annotate
from .bestpath import (
    DEFAULT_REGION_LIMIT,
    Annotation,
    RescoredConversation,
    extract,
    resolve,
)
from .fst import best_path
from .index import IndexTransducer
from .lattice_io import Turn, parse_wcn, wcn_to_fst

DEFAULT_MIN_SPAN = 3


def rescore_conversation(
    turns: list[Turn],
    index: IndexTransducer,
    min_span: int = DEFAULT_MIN_SPAN,
    renormalize: bool = False,
    region_limit: int = DEFAULT_REGION_LIMIT,
) -> RescoredConversation:
    table = index.symbols.copy()
    conv = wcn_to_fst(turns, table, renormalize)
    annotated = annotate(conv.fst, index.rebased(table))
    base = best_path(conv.fst)
    resolution = resolve(
        annotated, [item.arc.ilabel for item in base.items], region_limit
    )
    return extract(resolution, conv.num_turns, min_span)


def rescore_text(
    text: str,
    index: IndexTransducer,
    min_span: int = DEFAULT_MIN_SPAN,
    renormalize: bool = False,
    region_limit: int = DEFAULT_REGION_LIMIT,
) -> RescoredConversation:
    return rescore_conversation(
        parse_wcn(text), index, min_span, renormalize, region_limit
    )


def span_changed(ann: Annotation, baseline_turns) -> bool:
    """True when the annotation's span reads differently on the baseline —
    i.e. this match only exists because of rescoring."""
    t0 = ann.turn if ann.turn is not None else 0
    flat: list[str] = []
    for turn in baseline_turns[t0:]:
        flat.extend(turn)
        if len(flat) >= ann.end:
            break
    return tuple(flat[ann.start : ann.end]) != ann.words


def annotation_record(conversation: str, ann: Annotation, rescored: bool) -> dict:
    return {
        "conversation": conversation,
        "turn": ann.turn,
        "intent_id": ann.intent_id,
        "example_id": ann.example_id,
        "start": ann.start,
        "end": ann.end,
        "words": list(ann.words),
        "blanks": ann.blanks,
        "entities": [
            {"entity": f.entity, "occurrence": f.occurrence, "words": list(f.words)}
            for f in ann.entities
        ],
        "rescored": rescored,
    }


def transcript_records(conversation: str, result: RescoredConversation) -> list[dict]:
    return [
        {
            "conversation": conversation,
            "turn": t,
            "baseline": list(base),
            "rescored": list(resc),
        }
        for t, (base, resc) in enumerate(
            zip(result.baseline_turns, result.rescored_turns)
        )
    ]


@dataclass
class ConversationOutput:
    """Everything the writers need for one conversation, in order."""

    conversation: str
    transcripts: list[dict]
    annotations: list[dict]
    baseline: list[dict]


def rescore_to_records(
    conversation: str,
    text: str,
    index: IndexTransducer,
    min_span: int = DEFAULT_MIN_SPAN,
    renormalize: bool = False,
    region_limit: int = DEFAULT_REGION_LIMIT,
) -> ConversationOutput:
    result = rescore_text(text, index, min_span, renormalize, region_limit)
    return ConversationOutput(
        conversation,
        transcript_records(conversation, result),
        [
            annotation_record(conversation, a, span_changed(a, result.baseline_turns))
            for a in result.annotations
        ],
        [annotation_record(conversation, a, False) for a in result.baseline_annotations],
    )
