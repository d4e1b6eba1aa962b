"""Reference implementations for cross-checking the lattice pipeline.

Everything here works on plain python lists — no automata, no sharing with
the production code path — and is exponential in the worst case.  Tests
keep the inputs small.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .library import IntentLibrary, is_placeholder

Fill = tuple[str, int, tuple[str, ...]]  # entity, occurrence, matched words


@dataclass(frozen=True)
class OracleMatch:
    intent_id: str
    example_id: str
    start: int
    end: int
    blanks: int
    fills: tuple[Fill, ...]

    @property
    def intent_words(self) -> int:
        return (self.end - self.start) - self.blanks


def match_example(
    words: Sequence[str],
    tokens: Sequence[str],
    quota: int,
    entities: dict[str, tuple[tuple[str, ...], ...]],
) -> set[tuple[int, int, int, tuple[Fill, ...]]]:
    """Every placement of one example in `words`: (start, end, blanks, fills).

    Tokens must appear in order; up to `quota` filler words may sit strictly
    between consecutive tokens; entity variants are contiguous.
    """
    n = len(words)
    results = set()
    for start in range(n):
        stack: list[tuple[int, int, int, tuple[Fill, ...]]] = [(start, 0, 0, ())]
        while stack:
            wpos, tidx, blanks, fills = stack.pop()
            if tidx == len(tokens):
                results.add((start, wpos, blanks, fills))
                continue
            token = tokens[tidx]
            occ = sum(1 for t in tokens[:tidx] if is_placeholder(t))
            max_skip = quota - blanks if tidx > 0 else 0
            for skip in range(max_skip + 1):
                p = wpos + skip
                if is_placeholder(token):
                    for variant in entities[token]:
                        if tuple(words[p : p + len(variant)]) == variant:
                            stack.append(
                                (
                                    p + len(variant),
                                    tidx + 1,
                                    blanks + skip,
                                    fills + ((token, occ, variant),),
                                )
                            )
                elif p < n and words[p] == token:
                    stack.append((p + 1, tidx + 1, blanks + skip, fills))
    return results


def match_all(words: Sequence[str], library: IntentLibrary) -> list[OracleMatch]:
    out = []
    for intent, example in library.examples():
        for start, end, blanks, fills in sorted(
            match_example(words, example.tokens, example.blank_quota, library.entities)
        ):
            out.append(
                OracleMatch(intent.intent_id, example.example_id, start, end, blanks, fills)
            )
    return out


def enumerate_transcripts(
    turns: Sequence[Sequence[Sequence[tuple[str, float]]]],
    limit: Optional[int] = None,
) -> list[tuple[tuple[str, ...], tuple[int, ...], float]]:
    """Every word sequence a conversation's slots can spell.

    Returns (words, per-word turn, cost) triples; cost is the summed
    negative log posterior over all slots, chosen epsilons included.
    """
    paths: list[tuple[tuple[str, ...], tuple[int, ...], float]] = [((), (), 0.0)]
    for t, turn in enumerate(turns):
        for slot in turn:
            new = []
            for words, wturns, cost in paths:
                for token, p in slot:
                    c = cost - math.log(p)
                    if token == "<eps>":
                        new.append((words, wturns, c))
                    else:
                        new.append((words + (token,), wturns + (t,), c))
            paths = new
            if limit is not None and len(paths) > limit:
                raise ValueError(f"transcript count exceeded {limit}")
    return paths


def match_lattice(
    turns,
    library: IntentLibrary,
    limit: Optional[int] = None,
) -> set[tuple]:
    """Every (transcript, match) pair the conversation's slots support.

    Tuples are (words, intent, example, start, end, blanks, fills); the
    automaton pipeline must find exactly these, no more, no fewer.
    """
    out = set()
    for words, _, _ in enumerate_transcripts(turns, limit):
        for m in match_all(words, library):
            out.add(
                (words, m.intent_id, m.example_id, m.start, m.end, m.blanks, m.fills)
            )
    return out


def reference_key(matches: Sequence[OracleMatch], cost: float) -> tuple:
    """Explicit tuple the best-variant heuristics sort by, applied in order:
    most matched intent words, most matches, longest covered span, best
    original likelihood."""
    return (
        sum(m.intent_words for m in matches),
        len(matches),
        sum(m.end - m.start for m in matches),
        -cost,
    )


PackKey = tuple[int, int, int]  # matched intent words, match count, covered span


def best_packing_key(matches: Iterable[OracleMatch], length: int) -> PackKey:
    """Best (intent words, count, span) any non-overlapping subset achieves."""
    by_start = defaultdict(list)
    for m in matches:
        by_start[m.start].append(m)
    zero: PackKey = (0, 0, 0)
    f: list[PackKey] = [zero] * (length + 1)
    for i in range(length - 1, -1, -1):
        best = f[i + 1]
        for m in by_start[i]:
            tail = f[m.end]
            cand = (
                m.intent_words + tail[0],
                1 + tail[1],
                (m.end - m.start) + tail[2],
            )
            if cand > best:
                best = cand
        f[i] = best
    return f[0]


def is_valid_packing(matches: Sequence[OracleMatch], universe: Sequence[OracleMatch]) -> bool:
    """True when `matches` are drawn from `universe` and pairwise disjoint."""
    pool = set(universe)
    spans = sorted((m.start, m.end) for m in matches)
    if any(m not in pool for m in matches):
        return False
    return all(a_end <= b_start for (_, a_end), (b_start, _) in zip(spans, spans[1:]))


@dataclass(frozen=True)
class ReferenceResult:
    best_key: tuple  # (intent words, count, span, -cost)
    best: tuple[tuple[tuple[str, ...], tuple[int, ...], list[OracleMatch]], ...]
    baseline_words: tuple[str, ...]
    baseline_turns: tuple[int, ...]
    baseline_key: PackKey
    baseline_matches: list[OracleMatch]


def select_reference(
    turns,
    library: IntentLibrary,
    limit: Optional[int] = None,
) -> ReferenceResult:
    """Global brute force: score every transcript a conversation can spell
    by its best packing, keep all argmax transcripts; the cheapest
    transcript is the baseline."""
    paths = enumerate_transcripts(turns, limit)
    best_key = None
    best: list = []
    for words, wturns, cost in paths:
        matches = match_all(words, library)
        a, b, c = best_packing_key(matches, len(words))
        key = (a, b, c, -cost)
        if best_key is None or key > best_key:
            best_key = key
            best = [(words, wturns, matches)]
        elif key == best_key:
            best.append((words, wturns, matches))
    bwords, bturns, bcost = min(paths, key=lambda p: p[2])
    bmatches = match_all(bwords, library)
    return ReferenceResult(
        best_key,
        tuple(best),
        bwords,
        bturns,
        best_packing_key(bmatches, len(bwords)),
        bmatches,
    )
