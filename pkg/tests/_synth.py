"""Deterministic generators shared by the test modules.

Everything takes an explicit `random.Random`; tests seed it so failures
replay.  Word pools are kept disjoint where a test's argument depends on
it (e.g. decoy words must never spell an intent token, otherwise
perturbation could mint new matches instead of breaking existing ones).
"""

from __future__ import annotations

import math
import random
from typing import Optional, Sequence

from intentlattice.fst import Arc, Fst, SymbolTable
from intentlattice.library import IntentLibrary

VOCAB = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    "india", "juliet", "kilo", "lima", "mike", "november", "oscar", "papa",
]

FILLERS = ["uh", "um", "well", "so", "like", "right", "okay", "yeah", "hmm", "just"]

# decoys stand in for acoustically confusable misrecognitions
DECOYS = ["dorf", "merl", "quib", "stal", "crin", "velt", "jasp", "brum"]

INTENT_WORDS = [
    "account", "cancel", "order", "refund", "ticket", "number", "balance",
    "payment", "address", "transfer", "invoice", "subscribe", "renew",
    "support", "upgrade", "close", "open", "check", "confirm", "statement",
]

Slot = list[tuple[str, float]]
Turns = list[list[Slot]]


def rand_library(rng: random.Random) -> IntentLibrary:
    """Small random library: <= 4 intents x <= 5 examples, tokens <= 5,
    quota <= 2, <= 2 entities of <= 5 phrases."""
    entities = {}
    for e in range(rng.randint(0, 2)):
        variants, seen = [], set()
        for _ in range(rng.randint(1, 5)):
            v = tuple(rng.choice(VOCAB) for _ in range(rng.randint(1, 2)))
            if v not in seen:
                seen.add(v)
                variants.append(list(v))
        entities[f"__E{e}__"] = variants
    intents = []
    eid = 0
    for i in range(rng.randint(1, 4)):
        examples = []
        for _ in range(rng.randint(1, 5)):
            toks = []
            for _ in range(rng.randint(1, 5)):
                if entities and rng.random() < 0.25:
                    toks.append(rng.choice(sorted(entities)))
                else:
                    toks.append(rng.choice(VOCAB))
            examples.append(
                {"id": f"x{eid}", "tokens": toks, "blank_quota": rng.randint(0, 2)}
            )
            eid += 1
        intents.append({"id": f"i{i}", "name": f"intent-{i}", "examples": examples})
    obj: dict = {"intents": intents}
    if entities:
        obj["entities"] = entities
    return IntentLibrary.from_obj(obj)


def rand_turns(
    rng: random.Random,
    max_slots: int = 8,
    max_alts: int = 4,
    max_transcripts: Optional[int] = 4096,
) -> Turns:
    """Random 1-2 turn conversation, <= `max_slots` slots total, <= `max_alts`
    alternatives each (epsilon skips included)."""
    while True:
        n_turns = rng.randint(1, 2)
        budget = max_slots
        turns: Turns = []
        product = 1
        for t in range(n_turns):
            n_slots = rng.randint(1, max(1, budget // (n_turns - t)))
            budget -= n_slots
            turn = []
            for _ in range(n_slots):
                n_alt = rng.randint(1, max_alts)
                toks = rng.sample(VOCAB, n_alt)
                if rng.random() < 0.15:
                    toks[-1] = "<eps>"
                ps = [rng.uniform(0.05, 1.0) for _ in toks]
                z = sum(ps)
                turn.append([(tok, p / z) for tok, p in zip(toks, ps)])
                product *= n_alt
            turns.append(turn)
        if max_transcripts is None or product <= max_transcripts:
            return turns


def single_path_turns(words: Sequence[str]) -> Turns:
    return [[[(w, 1.0)] for w in words]]


def big_library(rng: random.Random, n_intents: int = 300) -> IntentLibrary:
    """Library of `n_intents` one-example intents.  Every example carries one
    token private to it, so no combination of other examples can cover an
    embedded example word-for-word and completeness checks stay exact."""
    entities = {
        "__TIME__": [["monday"], ["tuesday"], ["friday"], ["next", "week"]],
        "__AMOUNT__": [["ten"], ["twenty"], ["one", "hundred"]],
    }
    intents = []
    for i in range(n_intents):
        length = rng.randint(2, 6)
        toks = [rng.choice(INTENT_WORDS) for _ in range(length - 1)]
        toks.insert(rng.randrange(length), f"uniq{i}")
        if length >= 3 and rng.random() < 0.2:
            # replace a non-unique token with a placeholder
            spots = [k for k, t in enumerate(toks) if not t.startswith("uniq")]
            toks[rng.choice(spots)] = rng.choice(sorted(entities))
        intents.append(
            {
                "id": f"intent{i}",
                "name": f"intent {i}",
                "examples": [{"id": "e0", "tokens": toks, "blank_quota": rng.randint(0, 2)}],
            }
        )
    return IntentLibrary.from_obj({"intents": intents, "entities": entities})


def realizations(example, entities) -> list[list[str]]:
    """Example token sequences with placeholders substituted: every variant
    of every placeholder appears at least once (others pinned to variant 0)."""
    from intentlattice.library import is_placeholder

    spots = [k for k, t in enumerate(example.tokens) if is_placeholder(t)]
    if not spots:
        return [list(example.tokens)]
    out = []
    for spot in spots:
        for variant in entities[example.tokens[spot]]:
            words: list[str] = []
            for k, tok in enumerate(example.tokens):
                if not is_placeholder(tok):
                    words.append(tok)
                elif k == spot:
                    words.extend(variant)
                else:
                    words.extend(entities[tok][0])
            out.append(words)
    return out


def dominance_library(rng: random.Random, n_intents: int = 25) -> IntentLibrary:
    intents = []
    for i in range(n_intents):
        toks = rng.sample(INTENT_WORDS, rng.randint(3, 5))
        intents.append(
            {
                "id": f"d{i}",
                "name": f"dominance {i}",
                "examples": [{"id": "e0", "tokens": toks, "blank_quota": 1}],
            }
        )
    return IntentLibrary.from_obj({"intents": intents})


def noisy_sentence(
    rng: random.Random, library: IntentLibrary
) -> tuple[Turns, str]:
    """One intent-bearing sentence as a WCN turn with 10-30% of slots
    perturbed: a decoy becomes argmax, the spoken word keeps posterior
    >= 0.2.  Decoys and fillers never spell intent tokens, so perturbation
    can only break matches, never mint them."""
    intent = rng.choice(library.intents)
    example = intent.examples[0]
    words = list(example.tokens)
    if example.blank_quota and rng.random() < 0.3:
        words.insert(rng.randint(1, len(words) - 1), rng.choice(FILLERS))
    head = [rng.choice(FILLERS) for _ in range(rng.randint(0, 3))]
    tail = [rng.choice(FILLERS) for _ in range(rng.randint(0, 2))]
    sentence = head + words + tail

    k = max(1, round(rng.uniform(0.10, 0.30) * len(sentence)))
    hit = set(rng.sample(range(len(sentence)), k))
    turn = []
    for p, word in enumerate(sentence):
        if p in hit:
            truth = rng.uniform(0.2, 0.45)
            turn.append([(rng.choice(DECOYS), 1.0 - truth), (word, truth)])
        else:
            turn.append([(word, 1.0)])
    return [turn], intent.intent_id


def linear_block(rng: random.Random, n_turns: int = 64) -> tuple[Turns, IntentLibrary]:
    """Fixed workload unit for scaling runs: every turn embeds one example
    among filler slots, with a couple of two-way slots."""
    library = dominance_library(rng, n_intents=10)
    block: Turns = []
    for _ in range(n_turns):
        turns, _ = noisy_sentence(rng, library)
        block.append(turns[0])
    return block, library


def tile(block: Turns, k: int) -> Turns:
    return [list(turn) for _ in range(k) for turn in block]


def blueprint_fst(
    rng: random.Random,
) -> tuple[Fst, list[tuple[str, int, int]]]:
    """Random series/parallel layout realized as an acceptor, plus the
    expected (kind, left, right) segment list.

    Series stretches are slot chains (1-3 alternatives per slot); parallel
    blocks fan 2-3 branches between two states, at least one branch two or
    more words long so the block has interior states.
    """
    symbols = SymbolTable()
    fst = Fst(symbols)
    word = iter(f"w{k}" for k in range(10_000))

    blocks = []
    n_blocks = rng.randint(1, 6)
    for _ in range(n_blocks):
        blocks.append(rng.choice(["series", "parallel"]))

    expected: list[tuple[str, int, int]] = []
    state = fst.start
    for kind in blocks:
        left = state
        if kind == "series":
            for _ in range(rng.randint(1, 4)):
                nxt = fst.add_state()
                for _ in range(rng.randint(1, 3)):
                    lab = symbols.add(next(word))
                    fst.add_arc(state, Arc(lab, lab, rng.random(), nxt, None))
                state = nxt
        else:
            lengths = [rng.randint(1, 3) for _ in range(rng.randint(2, 3))]
            lengths[rng.randrange(len(lengths))] = rng.randint(2, 3)
            join = None
            branch_specs = []
            for ln in lengths:
                branch_specs.append([symbols.add(next(word)) for _ in range(ln)])
            # interior states first so the join comes last in topo numbering
            arcs_to_add = []
            frontier = []
            for spec in branch_specs:
                src = left
                for lab in spec[:-1]:
                    nxt = fst.add_state()
                    arcs_to_add.append((src, Arc(lab, lab, rng.random(), nxt, None)))
                    src = nxt
                frontier.append((src, spec[-1]))
            join = fst.add_state()
            for src, lab in frontier:
                arcs_to_add.append((src, Arc(lab, lab, rng.random(), join, None)))
            for src, arc in arcs_to_add:
                fst.add_arc(src, arc)
            state = join
        if kind == "parallel":
            expected.append(("parallel", left, state))
        elif expected and expected[-1][0] == "series" and expected[-1][2] == left:
            expected[-1] = ("series", expected[-1][1], state)
        else:
            expected.append(("series", left, state))
    fst.set_final(state, 0.0)
    return fst, expected


def rand_dag(rng: random.Random, max_states: int = 8) -> Fst:
    """Connected weighted acceptor DAG over a few symbols; single final."""
    symbols = SymbolTable()
    labels = [symbols.add(w) for w in ("a", "b", "c")]
    fst = Fst(symbols)
    n = rng.randint(2, max_states)
    for _ in range(n - 1):
        fst.add_state()
    for s in range(n - 1):
        fanout = rng.randint(1, 3) if s < n - 1 else 0
        for _ in range(fanout):
            d = rng.randint(s + 1, n - 1)
            lab = rng.choice(labels)
            fst.add_arc(s, Arc(lab, lab, rng.uniform(0.0, 5.0), d, None))
        if not fst.arcs(s):
            d = rng.randint(s + 1, n - 1)
            lab = rng.choice(labels)
            fst.add_arc(s, Arc(lab, lab, rng.uniform(0.0, 5.0), d, None))
    fst.set_final(n - 1, rng.uniform(0.0, 1.0))
    return fst


def wcn_text(turns: Turns) -> str:
    lines = []
    for i, turn in enumerate(turns):
        if i:
            lines.append("")
        for slot in turn:
            lines.append(" ".join(f"{tok}:{p:.6f}" for tok, p in slot))
    return "\n".join(lines) + "\n"
