"""Corpus-level summary over annotation and transcript records."""

from __future__ import annotations

import math
from collections import defaultdict
from difflib import SequenceMatcher
from typing import Optional, Sequence


def _pct(num: float, den: float) -> Optional[float]:
    return num / den * 100.0 if den else None


def _ranked_minimums(values: list[float]) -> list[dict]:
    """Sort descending, then for each top-k% prefix report the worst value in
    it — a compact view of how improvement is distributed across intents."""
    ranked = sorted(values, reverse=True)
    table = []
    for k in range(10, 101, 10):
        idx = max(math.ceil(k / 100 * len(ranked)) - 1, 0)
        table.append(
            {"top_pct": k, "min_increase_pct": ranked[idx] if ranked else None}
        )
    return table


def summarize(
    rescored: Sequence[dict],
    baseline: Sequence[dict],
    transcripts: Optional[Sequence[dict]] = None,
) -> dict:
    """Aggregate annotation records; with transcripts, also coverage and
    how much rescoring actually changed the words.

    Annotated words are counted by span (fillers inside a match included).
    Per-intent increase is left null for intents absent from the baseline.
    """
    r_words = sum(rec["end"] - rec["start"] for rec in rescored)
    b_words = sum(rec["end"] - rec["start"] for rec in baseline)
    out: dict = {
        "baseline": {"annotations": len(baseline), "annotated_words": b_words},
        "rescored": {"annotations": len(rescored), "annotated_words": r_words},
        "annotations_increase_pct": _pct(len(rescored) - len(baseline), len(baseline)),
        "annotated_words_increase_pct": _pct(r_words - b_words, b_words),
    }

    by_intent_b: dict[str, int] = defaultdict(int)
    by_intent_r: dict[str, int] = defaultdict(int)
    for rec in baseline:
        by_intent_b[rec["intent_id"]] += 1
    for rec in rescored:
        by_intent_r[rec["intent_id"]] += 1
    per_intent = {}
    for intent_id in sorted(set(by_intent_b) | set(by_intent_r)):
        b, r = by_intent_b[intent_id], by_intent_r[intent_id]
        per_intent[intent_id] = {
            "baseline": b,
            "rescored": r,
            "increase_pct": _pct(r - b, b),
        }
    out["per_intent"] = per_intent
    out["improvement_percentiles"] = _ranked_minimums(
        [v["increase_pct"] for v in per_intent.values() if v["increase_pct"] is not None]
    )

    if transcripts is None:
        return out

    total_b = sum(len(t["baseline"]) for t in transcripts)
    total_r = sum(len(t["rescored"]) for t in transcripts)
    out["words"] = {"baseline": total_b, "rescored": total_r}
    out["words_covered_pct"] = {
        "baseline": _pct(b_words, total_b),
        "rescored": _pct(r_words, total_r),
    }

    changed_b = 0
    changed_positions: dict[tuple[str, int], set[int]] = defaultdict(set)
    turn_len: dict[tuple[str, int], int] = {}
    for t in transcripts:
        key = (t["conversation"], t["turn"])
        turn_len[key] = len(t["rescored"])
        matcher = SequenceMatcher(a=t["baseline"], b=t["rescored"], autojunk=False)
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            if tag != "equal":
                changed_b += i2 - i1
                changed_positions[key].update(range(j1, j2))
    out["words_changed_pct"] = _pct(changed_b, total_b)

    annotated_changed = 0
    for rec in rescored:
        key = (rec["conversation"], rec["turn"])
        span = range(rec["start"], min(rec["end"], turn_len.get(key, rec["end"])))
        annotated_changed += len(changed_positions[key].intersection(span))
    out["annotated_words_changed_pct"] = _pct(annotated_changed, r_words)
    return out
