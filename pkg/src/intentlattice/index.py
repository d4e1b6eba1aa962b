"""Intent index construction.

The index is a single transducer: its root state (start and final) carries a
wildcard self-loop that swallows words outside any match, and one branch per
intent example hangs off the root.  Branch arcs consume the example's words
and emit marker symbols naming the intent and example; between consecutive
example words a wildcard self-loop consumes filler ("blank") words without
emitting anything.  The branch closes with an epsilon-input arc emitting an
end marker and returning to the root, so matches can restart immediately.

Entity placeholders are spliced inline as tries over their variants; no
wildcard loops exist inside a variant, so fillers cannot interrupt an entity.

Marker symbols live in the same symbol table as words and encode their
payload in the token text (fields are percent-encoded):

    <iB:intent:example>              first matched word of an example
    <iB:intent:example:entity:occ>   ... when that word starts an entity
    <iC:intent:example>              later matched word
    <iW:intent:example:entity:occ>   word inside an entity fill
    <iE:intent:example:quota>        end of match (consumes no word)

The end marker carries the example's blank quota, so a serialized index file
is self-contained: quotas are recovered from the symbol table alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional
from urllib.parse import quote, unquote

from .errors import FormatError
from .fst import EPSILON, SIGMA, Arc, Fst, SymbolTable
from .lattice_io import parse_fst, serialize_fst
from .library import IntentLibrary, is_placeholder


def _enc(field: str) -> str:
    return quote(field, safe="")


@dataclass(frozen=True)
class AnnotationSymbol:
    """Decoded marker symbol; `kind` is one of B, C, W, E."""

    kind: str
    intent_id: str
    example_id: str
    entity: Optional[str] = None
    occurrence: Optional[int] = None
    quota: Optional[int] = None

    @property
    def consumes_word(self) -> bool:
        return self.kind in ("B", "C", "W")

    def token(self) -> str:
        head = f"i{self.kind}:{_enc(self.intent_id)}:{_enc(self.example_id)}"
        if self.kind == "E":
            return f"<{head}:{self.quota}>"
        if self.entity is not None:
            return f"<{head}:{_enc(self.entity)}:{self.occurrence}>"
        return f"<{head}>"


def parse_annotation_symbol(token: str) -> Optional[AnnotationSymbol]:
    """Decode a marker token; None if `token` is not a marker."""
    if not (token.startswith("<i") and token.endswith(">")):
        return None
    fields = token[1:-1].split(":")
    kind = fields[0]
    if kind not in ("iB", "iC", "iW", "iE") or len(fields) < 3:
        return None
    intent_id, example_id = unquote(fields[1]), unquote(fields[2])
    if kind == "iE":
        if len(fields) != 4:
            raise FormatError(f"malformed end marker {token!r}")
        return AnnotationSymbol("E", intent_id, example_id, quota=int(fields[3]))
    if kind == "iW" or (kind == "iB" and len(fields) == 5):
        if len(fields) != 5:
            raise FormatError(f"malformed entity marker {token!r}")
        return AnnotationSymbol(
            kind[1], intent_id, example_id, unquote(fields[3]), int(fields[4])
        )
    if len(fields) != 3:
        raise FormatError(f"malformed marker {token!r}")
    return AnnotationSymbol(kind[1], intent_id, example_id)


@dataclass
class IndexTransducer:
    fst: Fst
    quotas: dict[tuple[str, str], int]  # (intent_id, example_id) -> blank quota

    @property
    def symbols(self) -> SymbolTable:
        return self.fst.symbols

    @property
    def num_intents(self) -> int:
        return len({intent for intent, _ in self.quotas})

    @property
    def num_examples(self) -> int:
        return len(self.quotas)

    def rebased(self, symbols: SymbolTable) -> "IndexTransducer":
        """Same structure over an extended copy of the symbol table; used to
        share one compiled index across conversations with different words."""
        return IndexTransducer(self.fst.with_symbols(symbols), self.quotas)


def _build_trie(variants) -> tuple[list[dict[str, int]], set[int]]:
    nxt: list[dict[str, int]] = [{}]
    finals: set[int] = set()
    for variant in variants:
        s = 0
        for word in variant:
            t = nxt[s].get(word)
            if t is None:
                t = len(nxt)
                nxt.append({})
                nxt[s][word] = t
            s = t
        finals.add(s)
    return nxt, finals


def compile_index(library: IntentLibrary) -> IndexTransducer:
    symbols = SymbolTable()
    fst = Fst(symbols)
    root = fst.start
    fst.set_final(root, 0.0)
    fst.add_arc(root, Arc(SIGMA, EPSILON, 0.0, root))

    quotas: dict[tuple[str, str], int] = {}
    for intent, example in library.examples():
        key = (intent.intent_id, example.example_id)
        quotas[key] = example.blank_quota
        prev = root
        occurrence = 0
        last = len(example.tokens) - 1
        for j, token in enumerate(example.tokens):
            if is_placeholder(token):
                join = fst.add_state()
                _splice_entity(
                    fst, library.entities[token], prev, join,
                    intent.intent_id, example.example_id, token, occurrence,
                    begin=(j == 0),
                )
                occurrence += 1
                prev = join
            else:
                kind = "B" if j == 0 else "C"
                sym = AnnotationSymbol(kind, intent.intent_id, example.example_id)
                nxt = fst.add_state()
                fst.add_arc(
                    prev, Arc(symbols.add(token), symbols.add(sym.token()), 0.0, nxt)
                )
                prev = nxt
            if j < last:
                fst.add_arc(prev, Arc(SIGMA, EPSILON, 0.0, prev))
        end = AnnotationSymbol(
            "E", intent.intent_id, example.example_id, quota=example.blank_quota
        )
        fst.add_arc(prev, Arc(EPSILON, symbols.add(end.token()), 0.0, root))
    return IndexTransducer(fst, quotas)


def _splice_entity(
    fst: Fst,
    variants,
    src: int,
    join: int,
    intent_id: str,
    example_id: str,
    entity: str,
    occurrence: int,
    begin: bool,
) -> None:
    """Inline an entity trie between `src` and `join`.

    Trie arcs into a final land on `join`; a final with continuations (one
    variant is a prefix of another) additionally keeps an interior copy.
    When the entity opens its example (`begin`), arcs leaving the trie root
    carry the begin marker instead of the plain entity-word marker.
    """
    symbols = fst.symbols
    nxt, finals = _build_trie(variants)
    word_sym = symbols.add(
        AnnotationSymbol("W", intent_id, example_id, entity, occurrence).token()
    )
    begin_sym = (
        symbols.add(
            AnnotationSymbol("B", intent_id, example_id, entity, occurrence).token()
        )
        if begin
        else word_sym
    )
    state_of = {0: src}

    def interior(t: int) -> int:
        got = state_of.get(t)
        if got is None:
            got = fst.add_state()
            state_of[t] = got
        return got

    stack = [0]
    seen = {0}
    while stack:
        u = stack.pop()
        for word, v in nxt[u].items():
            out = begin_sym if u == 0 else word_sym
            ilabel = symbols.add(word)
            if v in finals:
                fst.add_arc(state_of[u], Arc(ilabel, out, 0.0, join))
            if nxt[v]:
                fst.add_arc(state_of[u], Arc(ilabel, out, 0.0, interior(v)))
                if v not in seen:
                    seen.add(v)
                    stack.append(v)


def serialize_index(index: IndexTransducer) -> str:
    return serialize_fst(index.fst)


def load_index(text: str) -> IndexTransducer:
    fst = parse_fst(text)
    quotas: dict[tuple[str, str], int] = {}
    for token in fst.symbols.tokens():
        sym = parse_annotation_symbol(token)
        if sym is not None and sym.kind == "E":
            quotas[(sym.intent_id, sym.example_id)] = sym.quota
    if not quotas:
        raise FormatError("index defines no intent examples")
    return IndexTransducer(fst, quotas)
