"""Annotation of conversation lattices: compose with the index, then prune
match regions that spend more filler words than their example allows.

Filler ("blank") arcs consume a lattice word without emitting a marker while
a match is open.  The composed machine does not distinguish how many fillers
a partial match has already used, so states are expanded with a small
context: None outside matches, or ((intent, example), fillers_used) inside.

`annotate` fuses composition and expansion into one pass over
(lattice state, index state, filter flag, context) nodes — conversations
are large and building the unexpanded composition first doubles the peak
allocation for no benefit.  `prune_quota` exposes the expansion alone for
already-composed machines; both share transition and emission logic, and
everything is iterative (lattices outgrow the recursion limit).
"""

from __future__ import annotations

import heapq
from collections import deque
from typing import Optional

from .errors import ComposeError, StructureError
from .fst import EPSILON, SIGMA, Arc, Fst
from .index import AnnotationSymbol, IndexTransducer, parse_annotation_symbol

Context = Optional[tuple[tuple[str, str], int]]

_DROP = object()


class _SymbolCache:
    """Decode output labels to marker symbols once per label id."""

    def __init__(self, symbols):
        self.symbols = symbols
        self.cache: dict[int, Optional[AnnotationSymbol]] = {EPSILON: None}

    def __call__(self, olabel: int) -> Optional[AnnotationSymbol]:
        got = self.cache.get(olabel, _DROP)
        if got is _DROP:
            got = parse_annotation_symbol(self.symbols.token_of(olabel))
            self.cache[olabel] = got
        return got


def _step(
    ctx: Context,
    sym: Optional[AnnotationSymbol],
    word_consumed: bool,
    olabel: int,
    quotas: dict[tuple[str, str], int],
):
    """Next context for one transition: the new context, _DROP when the
    filler budget is exhausted, or an error string for malformed markers."""
    if sym is None:
        if olabel != EPSILON:
            return "output is neither a marker nor epsilon"
        if ctx is None or not word_consumed:
            return ctx
        key, used = ctx
        if used + 1 > quotas[key]:
            return _DROP
        return (key, used + 1)
    if sym.kind == "B":
        if ctx is not None:
            return "match begins inside an open match"
        if not word_consumed:
            return "begin marker consumed no word"
        key = (sym.intent_id, sym.example_id)
        if key not in quotas:
            return f"marker names unknown example {key}"
        return (key, 0)
    if sym.kind in ("C", "W"):
        if ctx is None or ctx[0] != (sym.intent_id, sym.example_id):
            return "match word outside its match"
        if not word_consumed:
            return "match marker consumed no word"
        return ctx
    # E
    if ctx is None or ctx[0] != (sym.intent_id, sym.example_id):
        return "end marker outside its match"
    if word_consumed:
        return "end marker consumed a word"
    return None


def _emit_trimmed(
    symbols,
    adjacency: list[list[tuple[Arc, int]]],
    accepting: list[tuple[int, float]],  # (node id, final weight)
) -> Fst:
    """Trim nodes that reach no accepting node, then emit a topologically
    numbered machine in a single pass."""
    reverse: list[list[int]] = [[] for _ in adjacency]
    for nid, arcs_out in enumerate(adjacency):
        for _, dest_id in arcs_out:
            reverse[dest_id].append(nid)
    keep = {nid for nid, _ in accepting}
    stack = [nid for nid, _ in accepting]
    while stack:
        nid = stack.pop()
        for src in reverse[nid]:
            if src not in keep:
                keep.add(src)
                stack.append(src)
    keep.add(0)

    indeg = dict.fromkeys(keep, 0)
    for nid in keep:
        for _, dest_id in adjacency[nid]:
            if dest_id in keep:
                indeg[dest_id] += 1
    ready = [nid for nid in keep if indeg[nid] == 0]
    heapq.heapify(ready)
    remap: dict[int, int] = {}
    order: list[int] = []
    while ready:
        nid = heapq.heappop(ready)
        remap[nid] = len(order)
        order.append(nid)
        for _, dest_id in adjacency[nid]:
            if dest_id in keep:
                indeg[dest_id] -= 1
                if indeg[dest_id] == 0:
                    heapq.heappush(ready, dest_id)
    assert len(order) == len(keep) and remap[0] == 0

    out = Fst(symbols)
    for _ in range(len(order) - 1):
        out.add_state()
    for nid in order:
        src = remap[nid]
        for arc, dest_id in adjacency[nid]:
            if dest_id in keep:
                out.add_arc(src, arc._replace(dest=remap[dest_id]))
    for nid, weight in accepting:
        out.set_final(remap[nid], weight)
    return out


def prune_quota(fst: Fst, quotas: dict[tuple[str, str], int]) -> Fst:
    """Remove paths whose matches overspend their filler quota.

    Expands (state, context) pairs reachable from the start, dropping filler
    transitions beyond quota, then trims pairs that cannot reach an
    accepting pair (final state, no open match).  Each surviving input path
    maps to exactly one expanded path, so path weights and multiplicities
    are preserved.
    """
    sym_of = _SymbolCache(fst.symbols)
    start = (fst.start, None)
    node_id: dict[tuple[int, Context], int] = {start: 0}
    nodes: list[tuple[int, Context]] = [start]
    adjacency: list[list[tuple[Arc, int]]] = []
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        state, ctx = nodes[nid]
        arcs_out: list[tuple[Arc, int]] = []
        for i, arc in enumerate(fst.arcs(state)):
            nctx = _step(ctx, sym_of(arc.olabel), arc.ilabel != EPSILON, arc.olabel, quotas)
            if nctx is _DROP:
                continue
            if isinstance(nctx, str):
                raise StructureError(state, i, nctx)
            nkey = (arc.dest, nctx)
            dest_id = node_id.get(nkey)
            if dest_id is None:
                dest_id = node_id[nkey] = len(nodes)
                nodes.append(nkey)
                queue.append(dest_id)
            arcs_out.append((arc, dest_id))
        adjacency.append(arcs_out)

    accepting = [
        (nid, fst.final_weight(state))
        for nid, (state, ctx) in enumerate(nodes)
        if ctx is None and fst.is_final(state)
    ]
    return _emit_trimmed(fst.symbols, adjacency, accepting)


def annotate(lattice: Fst, index: IndexTransducer) -> Fst:
    """Compose `lattice` with the index and enforce filler quotas, fused.

    Equivalent to `prune_quota(compose_sigma(lattice, index.fst), quotas)`
    up to state numbering (same paths, weights, and per-state arc order).
    The result is trimmed, topologically numbered, and funneled into a
    single final state so downstream segmentation needs no special cases.
    """
    ifst = index.fst
    if lattice.symbols is not ifst.symbols:
        raise ComposeError("lattice and index use different symbol tables")
    if not lattice.is_acceptor():
        raise ComposeError("left operand must be an acceptor")
    quotas = index.quotas
    sym_of = _SymbolCache(ifst.symbols)

    by_label: list[dict[int, list[Arc]]] = []
    sig_arcs: list[list[Arc]] = []
    eps_arcs: list[list[Arc]] = []
    for s in ifst.states():
        buckets: dict[int, list[Arc]] = {}
        sig: list[Arc] = []
        eps: list[Arc] = []
        for arc in ifst.arcs(s):
            if arc.ilabel == EPSILON:
                eps.append(arc)
            elif arc.ilabel == SIGMA:
                sig.append(arc)
            else:
                buckets.setdefault(arc.ilabel, []).append(arc)
        by_label.append(buckets)
        sig_arcs.append(sig)
        eps_arcs.append(eps)

    Node = tuple[int, int, int, Context]  # lattice state, index state, flag, context
    start: Node = (lattice.start, ifst.start, 0, None)
    node_id: dict[Node, int] = {start: 0}
    nodes: list[Node] = [start]
    adjacency: list[list[tuple[Arc, int]]] = []
    queue = deque([0])

    def dest_of(node: Node) -> int:
        got = node_id.get(node)
        if got is None:
            got = node_id[node] = len(nodes)
            nodes.append(node)
            queue.append(got)
        return got

    while queue:
        nid = queue.popleft()
        ls, isid, flag, ctx = nodes[nid]
        arcs_out: list[tuple[Arc, int]] = []

        def push(ilabel, olabel, weight, tag, nnode):
            arcs_out.append((Arc(ilabel, olabel, weight, 0, tag), dest_of(nnode)))

        for larc in lattice.arcs(ls):
            if larc.ilabel == EPSILON:
                # lattice moves alone; index epsilons blocked until joint move
                push(EPSILON, EPSILON, larc.weight, larc.tag, (larc.dest, isid, 1, ctx))
                continue
            for iarc in by_label[isid].get(larc.ilabel, ()):
                nctx = _step(ctx, sym_of(iarc.olabel), True, iarc.olabel, quotas)
                if nctx is _DROP:
                    continue
                if isinstance(nctx, str):
                    raise StructureError(ls, 0, nctx)
                push(
                    larc.ilabel, iarc.olabel, larc.weight + iarc.weight, larc.tag,
                    (larc.dest, iarc.dest, 0, nctx),
                )
            for iarc in sig_arcs[isid]:
                nctx = _step(ctx, sym_of(iarc.olabel), True, iarc.olabel, quotas)
                if nctx is _DROP:
                    continue
                if isinstance(nctx, str):
                    raise StructureError(ls, 0, nctx)
                push(
                    larc.ilabel, iarc.olabel, larc.weight + iarc.weight, larc.tag,
                    (larc.dest, iarc.dest, 0, nctx),
                )
        if flag == 0:
            for iarc in eps_arcs[isid]:
                nctx = _step(ctx, sym_of(iarc.olabel), False, iarc.olabel, quotas)
                if nctx is _DROP:
                    continue
                if isinstance(nctx, str):
                    raise StructureError(ls, 0, nctx)
                push(EPSILON, iarc.olabel, iarc.weight, iarc.tag, (ls, iarc.dest, 0, nctx))
        adjacency.append(arcs_out)

    accepting = [
        (nid, lattice.final_weight(ls) + ifst.final_weight(isid))
        for nid, (ls, isid, flag, ctx) in enumerate(nodes)
        if ctx is None and lattice.is_final(ls) and ifst.is_final(isid)
    ]
    return _single_sink(_emit_trimmed(ifst.symbols, adjacency, accepting))


def _single_sink(fst: Fst) -> Fst:
    """Funnel multiple finals into one sink via weighted epsilon arcs.

    Mutates and returns `fst` (always freshly built by the caller).  The
    sink gets the highest id, so topological numbering is preserved.
    """
    if len(fst.finals) <= 1:
        return fst
    sink = fst.add_state()
    for state in sorted(fst.finals):
        fst.add_arc(state, Arc(EPSILON, EPSILON, fst.final_weight(state), sink))
    fst.finals.clear()
    fst.set_final(sink, 0.0)
    return fst
