"""Resolution: choose words per region so kept match evidence is maximal.

The annotated lattice is segmented (see `segments`); each region between
consecutive sync states is resolved on its own.  Regions with no marker
arcs collapse to the baseline decoding; elsewhere only paths that carry at
least one marker, plus the baseline, stay alive.  Candidates are ranked by
(matched intent words, number of matches, covered span, path cost) —
componentwise sums, so per-region choices compose into the global optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .errors import IntentLatticeError, RegionLimitError, StructureError
from .fst import EPSILON, Arc, Fst, FstPath, PathItem
from .index import AnnotationSymbol, parse_annotation_symbol
from .segments import Region, regions

DEFAULT_REGION_LIMIT = 1_000_000


@dataclass(frozen=True)
class EntityFill:
    entity: str
    occurrence: int
    words: tuple[str, ...]


@dataclass(frozen=True)
class Annotation:
    """One recognized example span.  Positions index the surrounding word
    sequence (region-local while resolving, turn-local in final records);
    `words` are the consumed words, fillers included."""

    intent_id: str
    example_id: str
    start: int
    end: int
    words: tuple[str, ...]
    blanks: int
    entities: tuple[EntityFill, ...]
    turn: Optional[int] = None

    @property
    def intent_words(self) -> int:
        return len(self.words) - self.blanks

    @property
    def span(self) -> int:
        return self.end - self.start


def parse_annotations(
    items: Sequence[PathItem], symbols, base: int = 0
) -> list[Annotation]:
    """Read the matches off a path; word positions start at `base`."""
    out: list[Annotation] = []
    pos = base
    open_sym: Optional[AnnotationSymbol] = None
    start = 0
    words: list[str] = []
    blanks = 0
    fills: dict[tuple[str, int], list[str]] = {}
    turn: Optional[int] = None

    for item in items:
        arc = item.arc
        sym = (
            parse_annotation_symbol(symbols.token_of(arc.olabel))
            if arc.olabel != EPSILON
            else None
        )
        word = symbols.token_of(arc.ilabel) if arc.ilabel != EPSILON else None
        if sym is None:
            if word is not None and open_sym is not None:
                blanks += 1
                words.append(word)
        elif sym.kind == "B":
            if open_sym is not None or word is None:
                raise StructureError(item.state, 0, "malformed match begin")
            open_sym = sym
            start = pos
            words = [word]
            blanks = 0
            fills = {}
            turn = arc.tag if isinstance(arc.tag, int) else None
            if sym.entity is not None:
                fills.setdefault((sym.entity, sym.occurrence), []).append(word)
        elif sym.kind in ("C", "W"):
            if open_sym is None or word is None:
                raise StructureError(item.state, 0, "match word outside a match")
            words.append(word)
            if sym.kind == "W":
                fills.setdefault((sym.entity, sym.occurrence), []).append(word)
        else:  # E
            if open_sym is None:
                raise StructureError(item.state, 0, "match end outside a match")
            out.append(
                Annotation(
                    open_sym.intent_id,
                    open_sym.example_id,
                    start,
                    pos,
                    tuple(words),
                    blanks,
                    tuple(
                        EntityFill(ent, occ, tuple(ws))
                        for (ent, occ), ws in sorted(fills.items(), key=lambda kv: kv[0][1])
                    ),
                    turn,
                )
            )
            open_sym = None
        if word is not None:
            pos += 1
    if open_sym is not None:
        raise StructureError(0, 0, "match left open at path end")
    return out


def trace_path(fst: Fst, ilabels: Sequence[int]) -> FstPath:
    """Image of a pre-annotation lattice path: follow its exact arc labels
    (epsilons included) along marker-free arcs, then drift to the final."""
    n = len(ilabels)
    items: list[PathItem] = []
    weights = [0.0]
    frames: list[list[int]] = [[fst.start, 0, 0]]  # state, consumed, next arc
    while frames:
        state, pos, idx = frames[-1]
        if idx == 0 and pos == n and fst.is_final(state):
            return FstPath(tuple(items), weights[-1] + fst.final_weight(state))
        arcs = fst.arcs(state)
        pushed = False
        while idx < len(arcs):
            arc = arcs[idx]
            idx += 1
            if arc.olabel != EPSILON:
                continue
            if pos < n:
                if arc.ilabel != ilabels[pos]:
                    continue
                npos = pos + 1
            elif arc.ilabel == EPSILON:
                npos = pos
            else:
                continue
            frames[-1][2] = idx
            items.append(PathItem(state, arc))
            weights.append(weights[-1] + arc.weight)
            frames.append([arc.dest, npos, 0])
            pushed = True
            break
        if not pushed:
            frames.pop()
            if frames:
                items.pop()
                weights.pop()
    raise IntentLatticeError("baseline path has no marker-free image")


def prune_alternatives(
    fst: Fst, regs: Sequence[Region], trace: FstPath
) -> Fst:
    """Drop arcs that carry no evidence: in regions holding at least one
    marker arc, keep arcs on marker-bearing left-to-right paths plus the
    baseline trace; regions without markers collapse to the trace alone."""
    trace_arcs: dict[int, set[int]] = {}
    for item in trace.items:
        arcs = fst.arcs(item.state)
        for i, arc in enumerate(arcs):
            if arc is item.arc or arc == item.arc:
                trace_arcs.setdefault(item.state, set()).add(i)
                break

    out = Fst(fst.symbols)
    for _ in range(fst.num_states - 1):
        out.add_state()
    for state, w in fst.finals.items():
        out.set_final(state, w)

    for region in regs:
        left, right = region.left, region.right
        span = range(left, right)
        has_marker = any(
            arc.olabel != EPSILON for s in span for arc in fst.arcs(s)
        )
        keep: set[tuple[int, int]] = set()
        for s in span:
            for i in trace_arcs.get(s, ()):
                keep.add((s, i))
        if has_marker:
            # fwd[s]: bit 0b01 = reachable from `left` marker-free,
            #         bit 0b10 = reachable having passed a marker
            fwd = [0] * (right - left + 1)
            fwd[0] = 0b01
            for s in span:
                mask = fwd[s - left]
                if not mask:
                    continue
                for arc in fst.arcs(s):
                    fwd[arc.dest - left] |= 0b10 if arc.olabel != EPSILON else mask
            bwd = [0] * (right - left + 1)
            bwd[right - left] = 0b01  # can reach right; no further marker needed
            for s in reversed(span):
                mask = 0
                for arc in fst.arcs(s):
                    down = bwd[arc.dest - left]
                    if arc.olabel != EPSILON and down:
                        mask |= 0b11  # a marker here satisfies any requirement
                    else:
                        mask |= down
                bwd[s - left] = mask
            for s in span:
                if not fwd[s - left]:
                    continue
                for i, arc in enumerate(fst.arcs(s)):
                    seen = bool(fwd[s - left] & 0b10)
                    here = arc.olabel != EPSILON
                    down = bwd[arc.dest - left]
                    if (seen or here) and (down & 0b01):
                        keep.add((s, i))
                    elif down & 0b10:
                        keep.add((s, i))
        by_state: dict[int, list[int]] = {}
        for s, i in keep:
            by_state.setdefault(s, []).append(i)
        for s, indices in by_state.items():
            arcs = fst.arcs(s)
            for i in sorted(indices):
                out.add_arc(s, arcs[i])
    return out


@dataclass(frozen=True)
class RegionChoice:
    """One resolved alternative for a region: its words (with source turns),
    the matches it realizes, and its lattice cost."""

    items: tuple[PathItem, ...]
    words: tuple[str, ...]
    turns: tuple[Optional[int], ...]
    annotations: tuple[Annotation, ...]
    cost: float

    @property
    def intent_words(self) -> int:
        return sum(a.intent_words for a in self.annotations)

    @property
    def span_total(self) -> int:
        return sum(a.span for a in self.annotations)


def choice_key(choice: RegionChoice) -> tuple:
    """Ranking key, larger is better: matched intent words, then match
    count, then covered span, then cheaper path.  All components are sums,
    so maximizing per region maximizes the whole conversation."""
    return (
        choice.intent_words,
        len(choice.annotations),
        choice.span_total,
        -choice.cost,
    )


def select_best(choices: Sequence[RegionChoice]) -> RegionChoice:
    """Maximum under `choice_key`; ties go to the earliest candidate."""
    best = choices[0]
    best_key = choice_key(best)
    for choice in choices[1:]:
        k = choice_key(choice)
        if k > best_key:
            best, best_key = choice, k
    return best


def make_choice(items: tuple[PathItem, ...], symbols) -> RegionChoice:
    words = []
    turns = []
    cost = 0.0
    for item in items:
        cost += item.arc.weight
        if item.arc.ilabel != EPSILON:
            words.append(symbols.token_of(item.arc.ilabel))
            turns.append(item.arc.tag if isinstance(item.arc.tag, int) else None)
    anns = parse_annotations(items, symbols)
    return RegionChoice(items, tuple(words), tuple(turns), tuple(anns), cost)


def enumerate_region(
    fst: Fst, left: int, right: int, limit: int = DEFAULT_REGION_LIMIT
) -> list[tuple[PathItem, ...]]:
    """All left->right paths, in arc order.  Arcs leaving `right` belong to
    the next region and are not followed."""
    out: list[tuple[PathItem, ...]] = []
    stack: list[list] = [[left, [], 0]]
    while stack:
        frame = stack[-1]
        state, items, idx = frame
        if state == right:
            out.append(tuple(items))
            if len(out) > limit:
                raise RegionLimitError(len(out), limit)
            stack.pop()
            continue
        arcs = fst.arcs(state)
        if idx >= len(arcs):
            stack.pop()
            continue
        frame[2] += 1
        arc = arcs[idx]
        stack.append([arc.dest, items + [PathItem(state, arc)], 0])
    return out


def _match_order(a: Annotation) -> tuple:
    return (
        a.start,
        a.end,
        a.intent_id,
        a.example_id,
        a.blanks,
        tuple((f.entity, f.occurrence, f.words) for f in a.entities),
    )


def collect_matches(
    choices: Sequence[RegionChoice], words: tuple[str, ...]
) -> tuple[Annotation, ...]:
    """Every distinct match carried by paths spelling `words`.  One word
    sequence can be spelled by many marker paths, and overlapping matches
    live on different ones, so the full set is a union — unlike a single
    path's annotations, which never overlap."""
    seen: dict[Annotation, None] = {}
    for choice in choices:
        if choice.words != words:
            continue
        for a in choice.annotations:
            seen.setdefault(a, None)
    return tuple(sorted(seen, key=_match_order))


@dataclass(frozen=True)
class ResolvedRegion:
    region: Region
    chosen: RegionChoice
    baseline: RegionChoice
    # full match sets over the chosen / baseline word sequences
    chosen_matches: tuple[Annotation, ...]
    baseline_matches: tuple[Annotation, ...]


@dataclass(frozen=True)
class Resolution:
    regions: tuple[ResolvedRegion, ...]


def resolution_path(resolution: Resolution) -> FstPath:
    """Concatenate the chosen per-region paths into one start-to-final path."""
    items: list[PathItem] = []
    cost = 0.0
    for rr in resolution.regions:
        items.extend(rr.chosen.items)
        cost += rr.chosen.cost
    return FstPath(tuple(items), cost)


def resolve(
    annotated: Fst,
    base_ilabels: Sequence[int],
    region_limit: int = DEFAULT_REGION_LIMIT,
) -> Resolution:
    """Resolve every region of an annotated lattice.

    `base_ilabels` is the full label sequence (epsilons included) of the
    original lattice's best path; its image anchors the baseline in every
    region and survives pruning unconditionally.
    """
    trace = trace_path(annotated, base_ilabels)
    regs = regions(annotated)
    pruned = prune_alternatives(annotated, regs, trace)
    symbols = annotated.symbols

    resolved = []
    cursor = 0
    for region in regs:
        titems = []
        while cursor < len(trace.items) and trace.items[cursor].state < region.right:
            titems.append(trace.items[cursor])
            cursor += 1
        trace_choice = make_choice(tuple(titems), symbols)
        if not region.parallel:
            anns = trace_choice.annotations
            resolved.append(ResolvedRegion(region, trace_choice, trace_choice, anns, anns))
            continue
        choices = [
            make_choice(items, symbols)
            for items in enumerate_region(pruned, region.left, region.right, region_limit)
        ]
        chosen = select_best(choices)
        on_trace = [c for c in choices if c.words == trace_choice.words]
        baseline = select_best(on_trace)
        resolved.append(
            ResolvedRegion(
                region,
                chosen,
                baseline,
                collect_matches(choices, chosen.words),
                collect_matches(choices, trace_choice.words),
            )
        )
    return Resolution(tuple(resolved))


@dataclass(frozen=True)
class RescoredConversation:
    """Final outcome: per-turn word lists and the surviving matches, with
    match positions local to their turn's word sequence."""

    baseline_turns: tuple[tuple[str, ...], ...]
    rescored_turns: tuple[tuple[str, ...], ...]
    annotations: tuple[Annotation, ...]
    baseline_annotations: tuple[Annotation, ...]


def extract(
    resolution: Resolution, num_turns: int, min_span: int = 1
) -> RescoredConversation:
    """Stitch resolved regions into transcripts and report every match the
    words carry, dropping matches shorter than `min_span` intent words.
    A region whose words hold no surviving match reverts to its baseline
    words (and reports the baseline's surviving matches instead)."""
    baseline_turns: list[list[str]] = [[] for _ in range(num_turns)]
    rescored_turns: list[list[str]] = [[] for _ in range(num_turns)]
    base_counts = [0] * num_turns
    resc_counts = [0] * num_turns
    annotations: list[Annotation] = []
    baseline_annotations: list[Annotation] = []

    def emit(
        choice: RegionChoice,
        kept: list[Annotation],
        turn_words: list[list[str]],
        counts: list[int],
        sink: list[Annotation],
    ) -> None:
        starts: dict[int, list[Annotation]] = {}
        for a in kept:
            starts.setdefault(a.start, []).append(a)
        for p, word in enumerate(choice.words):
            t = choice.turns[p]
            t = t if t is not None else 0
            for a in starts.get(p, ()):
                sink.append(replace(a, start=counts[t], end=counts[t] + a.span, turn=t))
            turn_words[t].append(word)
            counts[t] += 1

    for rr in resolution.regions:
        kept_base = [a for a in rr.baseline_matches if a.intent_words >= min_span]
        emit(rr.baseline, kept_base, baseline_turns, base_counts, baseline_annotations)
        kept = [a for a in rr.chosen_matches if a.intent_words >= min_span]
        if kept:
            emit(rr.chosen, kept, rescored_turns, resc_counts, annotations)
        else:
            emit(rr.baseline, kept_base, rescored_turns, resc_counts, annotations)

    return RescoredConversation(
        tuple(tuple(ws) for ws in baseline_turns),
        tuple(tuple(ws) for ws in rescored_turns),
        tuple(annotations),
        tuple(baseline_annotations),
    )
