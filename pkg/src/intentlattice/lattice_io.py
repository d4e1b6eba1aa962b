"""Text formats: confusion-network input and FST round-tripping.

A confusion-network ("sausage") file carries one conversation: turns are
separated by blank lines, each line within a turn is one slot, and a slot is
whitespace-separated `token:posterior` pairs.  `<eps>:p` marks the skip
alternative of an optional slot.  `#` starts a comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

from .errors import EmptyLatticeError, FormatError
from .fst import EPSILON, EPSILON_TOKEN, SIGMA_TOKEN, Arc, Fst, SymbolTable

POSTERIOR_TOLERANCE = 1e-3

Slot = list[tuple[str, float]]  # alternatives in file order
Turn = list[Slot]


def parse_wcn(text: str) -> list[Turn]:
    """Parse a conversation file into turns of slots.

    Raises FormatError (with the offending line number) on syntax problems;
    posterior-mass checks happen later in `wcn_to_fst` so callers can opt
    into renormalization.
    """
    turns: list[Turn] = []
    current: Turn = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if raw.strip().startswith("#"):
                continue  # comment-only line is not a turn separator
            if current:
                turns.append(current)
                current = []
            continue
        slot: Slot = []
        seen: set[str] = set()
        for part in line.split():
            token, sep, post = part.rpartition(":")
            if not sep or not token:
                raise FormatError(f"malformed alternative {part!r}", lineno)
            try:
                p = float(post)
            except ValueError:
                raise FormatError(f"bad posterior {post!r}", lineno) from None
            if not (p > 0.0):
                raise FormatError(f"non-positive posterior for {token!r}", lineno)
            if token == SIGMA_TOKEN:
                raise FormatError(f"{SIGMA_TOKEN} is reserved", lineno)
            if token in seen:
                raise FormatError(f"duplicate alternative {token!r}", lineno)
            seen.add(token)
            slot.append((token, p))
        current.append(slot)
    if current:
        turns.append(current)
    return turns


def check_slot_mass(turns: list[Turn]) -> Optional[tuple[int, int, float]]:
    """First (turn, slot, mass) whose posteriors stray beyond tolerance, or None."""
    for t, turn in enumerate(turns):
        for s, slot in enumerate(turn):
            mass = sum(p for _, p in slot)
            if abs(mass - 1.0) > POSTERIOR_TOLERANCE:
                return (t, s, mass)
    return None


@dataclass
class ConversationLattice:
    """One conversation as a single chain acceptor; arcs are tagged with their
    turn index so matches can be attributed back to turns."""

    fst: Fst
    num_turns: int


def wcn_to_fst(
    turns: list[Turn], symbols: SymbolTable, renormalize: bool = False
) -> ConversationLattice:
    """Compile parsed turns into one concatenated acceptor.

    Slot posteriors must sum to 1 within tolerance unless `renormalize`.
    Arc weight is -log(posterior).  Turns are joined by weightless epsilon
    arcs rather than by sharing a state, so boundaries stay visible after
    downstream transforms.
    """
    if not turns or any(not turn for turn in turns):
        raise EmptyLatticeError("conversation has no slots")
    bad = check_slot_mass(turns)
    if bad is not None and not renormalize:
        t, s, mass = bad
        raise FormatError(
            f"turn {t} slot {s}: posteriors sum to {mass:.6f}, not 1"
        )
    fst = Fst(symbols)
    state = fst.start
    for tag, turn in enumerate(turns):
        if tag:
            nxt = fst.add_state()
            fst.add_arc(state, Arc(EPSILON, EPSILON, 0.0, nxt, None))
            state = nxt
        for slot in turn:
            nxt = fst.add_state()
            scale = sum(p for _, p in slot) if renormalize else 1.0
            for token, p in slot:
                label = EPSILON if token == EPSILON_TOKEN else symbols.add(token)
                fst.add_arc(state, Arc(label, label, -math.log(p / scale), nxt, tag))
            state = nxt
    fst.set_final(state, 0.0)
    return ConversationLattice(fst, len(turns))


def serialize_wcn(turns: list[Turn]) -> str:
    lines = []
    for i, turn in enumerate(turns):
        if i:
            lines.append("")
        for slot in turn:
            lines.append(" ".join(f"{tok}:{p!r}" for tok, p in slot))
    return "\n".join(lines) + "\n"


FST_HEADER = "# intentlattice fst v1"


def serialize_fst(fst: Fst) -> str:
    """Canonical text form (see `parse_fst`); parse->serialize is byte-exact.

    Arc tags are not written.  An FST that accepts nothing cannot be
    serialized: that is always an upstream mistake worth surfacing.
    """
    if not fst.finals:
        raise EmptyLatticeError("refusing to serialize a machine with no finals")
    lines = [FST_HEADER, f"states {fst.num_states}", "@symbols"]
    for idx, token in enumerate(fst.symbols.tokens()):
        lines.append(f"{idx} {token}")
    lines.append("@arcs")
    for s in fst.states():
        for arc in fst.arcs(s):
            lines.append(f"{s} {arc.dest} {arc.ilabel} {arc.olabel} {arc.weight!r}")
    lines.append("@finals")
    for s in sorted(fst.finals):
        lines.append(f"{s} {fst.finals[s]!r}")
    return "\n".join(lines) + "\n"


def parse_fst(text: str) -> Fst:
    """Inverse of `serialize_fst`; builds a fresh symbol table from the file."""
    lines = text.splitlines()
    if not lines or lines[0] != FST_HEADER:
        raise FormatError("missing header", 1)
    if len(lines) < 2 or not lines[1].startswith("states "):
        raise FormatError("missing states line", 2)
    try:
        num_states = int(lines[1].split()[1])
    except (IndexError, ValueError):
        raise FormatError("bad states line", 2) from None
    if num_states < 1:
        raise FormatError("state count must be positive", 2)

    symbols = SymbolTable()
    fst = Fst(symbols)
    for _ in range(num_states - 1):
        fst.add_state()

    section = None
    for lineno, line in enumerate(lines[2:], start=3):
        if line in ("@symbols", "@arcs", "@finals"):
            section = line
            continue
        if not line.strip():
            continue
        parts = line.split()
        if section == "@symbols":
            if len(parts) != 2:
                raise FormatError("bad symbol line", lineno)
            idx = int(parts[0])
            if idx < 2:
                expected = EPSILON_TOKEN if idx == 0 else SIGMA_TOKEN
                if parts[1] != expected:
                    raise FormatError(f"symbol {idx} must be {expected}", lineno)
            elif symbols.add(parts[1]) != idx:
                raise FormatError(f"symbol ids must be dense, got {idx}", lineno)
        elif section == "@arcs":
            if len(parts) != 5:
                raise FormatError("bad arc line", lineno)
            try:
                src, dst, il, ol = (int(x) for x in parts[:4])
                w = float(parts[4])
            except ValueError:
                raise FormatError("bad arc line", lineno) from None
            if not (0 <= src < num_states and 0 <= dst < num_states):
                raise FormatError("arc references unknown state", lineno)
            if il >= len(symbols) or ol >= len(symbols):
                raise FormatError("arc references unknown symbol", lineno)
            fst.add_arc(src, Arc(il, ol, w, dst))
        elif section == "@finals":
            if len(parts) != 2:
                raise FormatError("bad final line", lineno)
            try:
                state, w = int(parts[0]), float(parts[1])
            except ValueError:
                raise FormatError("bad final line", lineno) from None
            if not 0 <= state < num_states:
                raise FormatError("final references unknown state", lineno)
            fst.set_final(state, w)
        else:
            raise FormatError("content before first section", lineno)
    if not fst.finals:
        raise FormatError("no finals declared")
    return fst
