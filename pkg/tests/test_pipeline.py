import math
import random

import pytest

from intentlattice.errors import FormatError
from intentlattice.index import compile_index
from intentlattice.library import IntentLibrary
from intentlattice.pipeline import (
    annotation_record,
    rescore_conversation,
    rescore_text,
    rescore_to_records,
    transcript_records,
)

from _synth import rand_library, rand_turns


HOLD_LIB = IntentLibrary.from_obj(
    {
        "intents": [
            {
                "id": "end_of_hold",
                "name": "end of hold",
                "examples": [
                    {"tokens": ["thank", "you", "for", "your", "patience"], "blank_quota": 1}
                ],
            }
        ]
    }
)


def test_homophone_flip_recovers_the_intent_word():
    """The classic hold-queue case: the acoustically likelier `patients`
    wins the baseline, but only `patience` completes the phrase."""
    index = compile_index(HOLD_LIB)
    turns = [
        [
            [("thank", 1.0)],
            [("you", 1.0)],
            [("for", 1.0)],
            [("your", 1.0)],
            [("patients", 0.8), ("patience", 0.2)],
        ]
    ]
    out = rescore_conversation(turns, index, min_span=3)
    assert out.baseline_turns == (("thank", "you", "for", "your", "patients"),)
    assert out.rescored_turns == (("thank", "you", "for", "your", "patience"),)
    (ann,) = out.annotations
    assert ann.intent_id == "end_of_hold"
    assert ann.turn == 0 and ann.start == 0 and ann.end == 5
    assert out.baseline_annotations == ()


def test_rescore_text_parses_and_rescores():
    index = compile_index(HOLD_LIB)
    text = "thank:1.0\nyou:1.0\nfor:1.0\nyour:1.0\npatients:0.8 patience:0.2\n"
    out = rescore_text(text, index)
    assert out.rescored_turns[0][-1] == "patience"


def test_no_intent_means_no_change():
    index = compile_index(HOLD_LIB)
    turns = [[[("hello", 0.6), ("hollow", 0.4)], [("there", 1.0)]]]
    out = rescore_conversation(turns, index)
    assert out.rescored_turns == out.baseline_turns == (("hello", "there"),)
    assert out.annotations == ()


def test_min_span_default_filters_two_word_matches():
    lib = IntentLibrary.from_obj(
        {"intents": [{"id": "hi", "name": "hi", "examples": [{"tokens": ["hi", "there"]}]}]}
    )
    index = compile_index(lib)
    turns = [[[("hi", 0.3), ("high", 0.7)], [("there", 1.0)]]]
    assert rescore_conversation(turns, index).rescored_turns == (("high", "there"),)
    flipped = rescore_conversation(turns, index, min_span=2)
    assert flipped.rescored_turns == (("hi", "there"),)


def test_mass_error_propagates_unless_renormalizing():
    index = compile_index(HOLD_LIB)
    text = "a:0.5 b:0.3\n"
    with pytest.raises(FormatError, match="sum to 0.8"):
        rescore_text(text, index)
    out = rescore_text(text, index, renormalize=True)
    assert out.baseline_turns == (("a",),)


def test_shared_index_is_not_polluted_across_conversations():
    index = compile_index(HOLD_LIB)
    size_before = len(index.symbols)
    rescore_conversation([[[("zebra", 1.0)]]], index)
    rescore_conversation([[[("quokka", 1.0)]]], index)
    assert len(index.symbols) == size_before


def test_annotation_record_schema():
    lib = IntentLibrary.from_obj(
        {
            "intents": [
                {
                    "id": "order",
                    "name": "order",
                    "examples": [{"tokens": ["order", "__N__", "tickets"], "blank_quota": 1}],
                }
            ],
            "entities": {"__N__": [["three"]]},
        }
    )
    index = compile_index(lib)
    text = "order:1.0\nuh:1.0\nthree:1.0\ntickets:1.0\n"
    out = rescore_to_records("conv7", text, index, min_span=2)
    assert [r["baseline"] for r in out.transcripts] == [["order", "uh", "three", "tickets"]]
    (rec,) = out.annotations
    assert list(rec) == [
        "conversation", "turn", "intent_id", "example_id", "start", "end",
        "words", "blanks", "entities", "rescored",
    ]
    assert rec["conversation"] == "conv7"
    assert rec["turn"] == 0
    assert rec["blanks"] == 1
    assert rec["entities"] == [{"entity": "__N__", "occurrence": 0, "words": ["three"]}]
    # single-path lattice: the match exists on the baseline too, so neither
    # record claims rescoring changed anything
    assert rec["rescored"] is False
    assert len(out.baseline) == 1 and out.baseline[0]["rescored"] is False
    out2 = rescore_to_records("conv7", text, index, min_span=5)
    assert out2.annotations == [] and out2.baseline == []


def test_transcript_records_cover_every_turn():
    index = compile_index(HOLD_LIB)
    turns = [[[("a", 1.0)]], [[("b", 1.0)]], [[("c", 1.0)]]]
    result = rescore_conversation(turns, index)
    recs = transcript_records("c1", result)
    assert [r["turn"] for r in recs] == [0, 1, 2]
    assert [r["rescored"] for r in recs] == [["a"], ["b"], ["c"]]


def test_rescored_flag_tracks_actual_word_changes():
    index = compile_index(HOLD_LIB)
    # already-correct transcript: match found, but nothing was changed
    clean = "thank:1.0\nyou:1.0\nfor:1.0\nyour:1.0\npatience:1.0\n"
    out = rescore_to_records("c", clean, index)
    assert len(out.annotations) == 1 and len(out.baseline) == 1
    assert out.annotations[0]["rescored"] is False
    assert out.baseline[0]["rescored"] is False
    # homophone flip: the match owes a word to rescoring
    noisy = "thank:1.0\nyou:1.0\nfor:1.0\nyour:1.0\npatients:0.8 patience:0.2\n"
    out = rescore_to_records("c", noisy, index)
    assert out.annotations[0]["rescored"] is True
    assert out.baseline == []


def test_baseline_records_equal_a_best_path_only_run():
    """The baseline stream is exactly 'annotate the most likely transcript':
    rerunning the pipeline on the baseline words as a single-path lattice
    reports the same matches."""
    rng = random.Random(4242)
    for _ in range(15):
        library = rand_library(rng)
        index = compile_index(library)
        turns = rand_turns(rng, max_slots=6)
        full = rescore_conversation(turns, index, min_span=1, renormalize=True)
        single = [[[(w, 1.0)] for w in t] for t in full.baseline_turns]
        rerun = rescore_conversation(single, index, min_span=1)
        assert rerun.baseline_annotations == full.baseline_annotations


def test_rescoring_is_idempotent_on_its_own_output():
    """Feeding the rescored transcript back as a single-path lattice finds
    the same annotations at the same positions."""
    rng = random.Random(20260825)
    index_cache = {}
    for _ in range(20):
        library = rand_library(rng)
        index = compile_index(library)
        turns = rand_turns(rng, max_slots=6)
        first = rescore_conversation(turns, index, min_span=1, renormalize=True)
        again_turns = [
            [[(w, 1.0)] for w in turn] for turn in first.rescored_turns if turn
        ]
        if not again_turns:
            continue
        again = rescore_conversation(again_turns, index, min_span=1)
        assert again.rescored_turns == tuple(t for t in first.rescored_turns if t)
