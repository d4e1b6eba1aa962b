"""Weighted finite-state machinery over the tropical semiring.

Machines here are acyclic by construction (confusion-network lattices and
their compositions); weights are negative log posteriors, so path weight is
the sum of arc weights and "better" means numerically smaller.
"""

from __future__ import annotations

import heapq
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

from .errors import (
    ComposeError,
    CycleError,
    EmptyLatticeError,
    PathLimitError,
    SymbolTableError,
)

EPSILON = 0
SIGMA = 1

EPSILON_TOKEN = "<eps>"
SIGMA_TOKEN = "<sigma>"


class SymbolTable:
    """Bijective token<->integer map with dense, append-only ids.

    Ids 0 and 1 are reserved for epsilon and the single-symbol wildcard.
    """

    def __init__(self):
        self._tokens: list[str] = [EPSILON_TOKEN, SIGMA_TOKEN]
        self._ids: dict[str, int] = {EPSILON_TOKEN: 0, SIGMA_TOKEN: 1}

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def add(self, token: str) -> int:
        """Intern `token`, returning its id (existing or freshly assigned)."""
        got = self._ids.get(token)
        if got is not None:
            return got
        idx = len(self._tokens)
        self._tokens.append(token)
        self._ids[token] = idx
        return idx

    def id_of(self, token: str) -> int:
        try:
            return self._ids[token]
        except KeyError:
            raise SymbolTableError(f"unknown token {token!r}") from None

    def token_of(self, idx: int) -> str:
        if 0 <= idx < len(self._tokens):
            return self._tokens[idx]
        raise SymbolTableError(f"unknown symbol id {idx}")

    def get(self, token: str) -> Optional[int]:
        return self._ids.get(token)

    def copy(self) -> "SymbolTable":
        dup = SymbolTable.__new__(SymbolTable)
        dup._tokens = list(self._tokens)
        dup._ids = dict(self._ids)
        return dup

    def tokens(self) -> Iterator[str]:
        return iter(self._tokens)


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    dest: int
    # free-form payload threaded through composition/pruning untouched;
    # not part of structural identity (see Fst.arc_key)
    tag: object = None


def arc_key(arc: Arc) -> tuple:
    return (arc.ilabel, arc.olabel, arc.weight, arc.dest)


class Fst:
    """Mutable weighted transducer: state 0 is the start, finals carry weights."""

    def __init__(self, symbols: SymbolTable):
        self.symbols = symbols
        self._arcs: list[list[Arc]] = [[]]
        self._finals: dict[int, float] = {}

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def start(self) -> int:
        return 0

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_arc(self, src: int, arc: Arc) -> None:
        self._arcs[src].append(arc)

    def arcs(self, state: int) -> list[Arc]:
        return self._arcs[state]

    def set_final(self, state: int, weight: float = 0.0) -> None:
        self._finals[state] = weight

    def is_final(self, state: int) -> bool:
        return state in self._finals

    def final_weight(self, state: int) -> float:
        return self._finals[state]

    @property
    def finals(self) -> dict[int, float]:
        return self._finals

    def states(self) -> range:
        return range(len(self._arcs))

    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def is_acceptor(self) -> bool:
        return all(a.ilabel == a.olabel for arcs in self._arcs for a in arcs)

    def structure(self) -> tuple:
        """Hashable structural snapshot: tags and symbol table excluded."""
        return (
            tuple(tuple(arc_key(a) for a in arcs) for arcs in self._arcs),
            tuple(sorted(self._finals.items())),
        )

    def with_symbols(self, symbols: SymbolTable) -> "Fst":
        """Same states/arcs viewed through another table.  The table must
        assign identical ids to every symbol used here (e.g. a copy that was
        only appended to); arc lists are shared, so treat both as frozen."""
        dup = Fst.__new__(Fst)
        dup.symbols = symbols
        dup._arcs = self._arcs
        dup._finals = self._finals
        return dup


class PathItem(NamedTuple):
    state: int
    arc: Arc


class FstPath(NamedTuple):
    """A start->final traversal: its arcs, total weight (final weight included),
    and the epsilon-free input/output label sequences."""

    items: tuple[PathItem, ...]
    weight: float

    @property
    def ilabels(self) -> tuple[int, ...]:
        return tuple(it.arc.ilabel for it in self.items if it.arc.ilabel != EPSILON)

    @property
    def olabels(self) -> tuple[int, ...]:
        return tuple(it.arc.olabel for it in self.items if it.arc.olabel != EPSILON)

    def input_tokens(self, symbols: SymbolTable) -> tuple[str, ...]:
        return tuple(symbols.token_of(i) for i in self.ilabels)

    def output_tokens(self, symbols: SymbolTable) -> tuple[str, ...]:
        return tuple(symbols.token_of(o) for o in self.olabels)


def topo_order(fst: Fst) -> list[int]:
    """Kahn topological order over all states; raises CycleError otherwise.

    Ready states are consumed in ascending id order so the result is stable.
    """
    indeg = [0] * fst.num_states
    for s in fst.states():
        for arc in fst.arcs(s):
            indeg[arc.dest] += 1
    ready = [s for s in fst.states() if indeg[s] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        s = heapq.heappop(ready)
        order.append(s)
        for arc in fst.arcs(s):
            indeg[arc.dest] -= 1
            if indeg[arc.dest] == 0:
                heapq.heappush(ready, arc.dest)
    if len(order) != fst.num_states:
        leftover = min(s for s in fst.states() if indeg[s] > 0)
        raise CycleError(leftover)
    return order


def relabel_topo(fst: Fst) -> Fst:
    """Copy of `fst` with states renumbered into topological order."""
    order = topo_order(fst)
    remap = {old: new for new, old in enumerate(order)}
    # start has indegree 0 in every machine built here, so it sorts first
    assert remap[fst.start] == 0, "start state has incoming arcs"
    out = Fst(fst.symbols)
    for _ in range(fst.num_states - 1):
        out.add_state()
    for old in fst.states():
        src = remap[old]
        for arc in fst.arcs(old):
            out.add_arc(src, arc._replace(dest=remap[arc.dest]))
    for state, w in fst.finals.items():
        out.set_final(remap[state], w)
    return out


def reachable_forward(fst: Fst) -> set[int]:
    seen = {fst.start}
    stack = [fst.start]
    while stack:
        s = stack.pop()
        for arc in fst.arcs(s):
            if arc.dest not in seen:
                seen.add(arc.dest)
                stack.append(arc.dest)
    return seen


def reachable_backward(fst: Fst) -> set[int]:
    rev: dict[int, list[int]] = {s: [] for s in fst.states()}
    for s in fst.states():
        for arc in fst.arcs(s):
            rev[arc.dest].append(s)
    seen = set(fst.finals)
    stack = list(fst.finals)
    while stack:
        s = stack.pop()
        for src in rev[s]:
            if src not in seen:
                seen.add(src)
                stack.append(src)
    return seen


def connect(fst: Fst) -> Fst:
    """Trim to states on some start->final path. Result may be empty (no finals)
    if the machine accepts nothing; the start state is always retained."""
    keep = reachable_forward(fst) & reachable_backward(fst)
    keep.add(fst.start)
    remap = {}
    out = Fst(fst.symbols)
    for s in sorted(keep):
        remap[s] = 0 if s == fst.start else out.add_state()
    for s in sorted(keep):
        for arc in fst.arcs(s):
            if arc.dest in keep and arc.dest in remap:
                out.add_arc(remap[s], arc._replace(dest=remap[arc.dest]))
    for s, w in fst.finals.items():
        if s in keep:
            out.set_final(remap[s], w)
    return out


def best_path(fst: Fst) -> FstPath:
    """Minimum-weight start->final path by DP over a topological order.

    Ties break deterministically: the earlier topological predecessor wins,
    then the smaller arc index.
    """
    if not fst.finals:
        raise EmptyLatticeError("machine has no final states")
    order = topo_order(fst)
    INF = float("inf")
    dist = [INF] * fst.num_states
    back: list[Optional[tuple[int, int]]] = [None] * fst.num_states  # (src, arc idx)
    dist[fst.start] = 0.0
    for s in order:
        d = dist[s]
        if d == INF:
            continue
        for i, arc in enumerate(fst.arcs(s)):
            nd = d + arc.weight
            if nd < dist[arc.dest]:
                dist[arc.dest] = nd
                back[arc.dest] = (s, i)
    best_state, best_total = None, INF
    for s in order:  # ties -> earliest in topo order
        if s in fst.finals:
            total = dist[s] + fst.final_weight(s)
            if total < best_total:
                best_state, best_total = s, total
    if best_state is None:
        raise EmptyLatticeError("no path reaches a final state")
    rev = []
    s = best_state
    while s != fst.start:
        src, idx = back[s]
        rev.append(PathItem(src, fst.arcs(src)[idx]))
        s = src
    rev.reverse()
    return FstPath(tuple(rev), best_total)


def enumerate_paths(fst: Fst, limit: Optional[int] = None) -> list[FstPath]:
    """All start->final paths, in DFS order by arc index.

    Raises PathLimitError once more than `limit` paths exist.  Intended for
    oracles and tests; real traffic goes through the segment resolver.
    """
    out: list[FstPath] = []
    # stack of (state, acc_weight, path_items, next_arc_index) frames
    stack: list[list] = [[fst.start, 0.0, [], 0]]
    while stack:
        frame = stack[-1]
        state, acc, items, idx = frame
        if idx == 0 and fst.is_final(state):
            out.append(FstPath(tuple(items), acc + fst.final_weight(state)))
            if limit is not None and len(out) > limit:
                raise PathLimitError(len(out))
        arcs = fst.arcs(state)
        if idx >= len(arcs):
            stack.pop()
            continue
        frame[3] += 1
        arc = arcs[idx]
        stack.append([arc.dest, acc + arc.weight, items + [PathItem(state, arc)], 0])
    return out


def count_paths(fst: Fst) -> int:
    """Number of distinct start->final paths (0 for an empty machine)."""
    order = topo_order(fst)
    counts = [0] * fst.num_states
    for s in reversed(order):
        n = 1 if fst.is_final(s) else 0
        for arc in fst.arcs(s):
            n += counts[arc.dest]
        counts[s] = n
    return counts[fst.start]


def compose_sigma(lattice: Fst, index: Fst, trim: bool = True) -> Fst:
    """Compose an acceptor lattice with a transducer whose input side may use
    the single-symbol wildcard SIGMA (matching any non-epsilon lattice label).

    Epsilon handling uses a two-value sequencing filter: after following a
    lattice epsilon arc alone, index epsilon-input arcs are blocked until the
    next joint move.  This admits exactly one interleaving of each logical
    pairing, so path multiplicities are preserved.

    Both machines must share one symbol table.  The result is trimmed and
    topologically numbered unless `trim` is off (callers that re-trim anyway
    skip it to avoid rebuilding large graphs twice).
    """
    if lattice.symbols is not index.symbols:
        raise ComposeError("lattice and index use different symbol tables")
    if not lattice.is_acceptor():
        raise ComposeError("left operand must be an acceptor")

    out = Fst(lattice.symbols)
    start_key = (lattice.start, index.start, 0)
    state_of = {start_key: 0}
    stack = [start_key]

    # index arcs bucketed per state: by concrete ilabel, wildcard, epsilon
    by_label: list[dict[int, list[Arc]]] = []
    sig_arcs: list[list[Arc]] = []
    eps_arcs: list[list[Arc]] = []
    for s in index.states():
        buckets: dict[int, list[Arc]] = {}
        sig: list[Arc] = []
        eps: list[Arc] = []
        for arc in index.arcs(s):
            if arc.ilabel == EPSILON:
                eps.append(arc)
            elif arc.ilabel == SIGMA:
                sig.append(arc)
            else:
                buckets.setdefault(arc.ilabel, []).append(arc)
        by_label.append(buckets)
        sig_arcs.append(sig)
        eps_arcs.append(eps)

    def state_for(key) -> int:
        got = state_of.get(key)
        if got is not None:
            return got
        idx = out.add_state()
        state_of[key] = idx
        stack.append(key)
        return idx

    while stack:
        key = stack.pop()
        ls, isid, flag = key
        src = state_of[key]
        for larc in lattice.arcs(ls):
            if larc.ilabel == EPSILON:
                # lattice moves alone; block index epsilons until a joint move
                dest = state_for((larc.dest, isid, 1))
                out.add_arc(src, Arc(EPSILON, EPSILON, larc.weight, dest, larc.tag))
            else:
                matches = by_label[isid].get(larc.ilabel, ())
                for iarc in matches:
                    dest = state_for((larc.dest, iarc.dest, 0))
                    out.add_arc(
                        src,
                        Arc(larc.ilabel, iarc.olabel, larc.weight + iarc.weight, dest, larc.tag),
                    )
                for iarc in sig_arcs[isid]:
                    dest = state_for((larc.dest, iarc.dest, 0))
                    out.add_arc(
                        src,
                        Arc(larc.ilabel, iarc.olabel, larc.weight + iarc.weight, dest, larc.tag),
                    )
        if flag == 0:
            for iarc in eps_arcs[isid]:
                dest = state_for((ls, iarc.dest, 0))
                out.add_arc(src, Arc(EPSILON, iarc.olabel, iarc.weight, dest, iarc.tag))
        if lattice.is_final(ls) and index.is_final(isid):
            out.set_final(src, lattice.final_weight(ls) + index.final_weight(isid))

    return relabel_topo(connect(out)) if trim else out
