"""Segmentation of an annotated lattice into independent resolution regions.

Over topologically numbered states, a running difference between arc tails
seen so far and arc heads absorbed so far counts how many arcs fly past a
state.  States nothing flies past are on every path ("sync" states); the
stretch between two consecutive sync states can be resolved independently
of the rest of the lattice.

Requires a machine in topological numbering whose unique final state is the
last (what `annotate` produces).
"""

from __future__ import annotations

from dataclasses import dataclass

from .fst import Fst


def sync_states(fst: Fst) -> list[int]:
    """States every start-to-final path visits, ascending."""
    finals = fst.finals
    assert len(finals) == 1 and fst.num_states - 1 in finals, "need a single trailing sink"
    bypass = 0
    indeg = [0] * fst.num_states
    for s in fst.states():
        for arc in fst.arcs(s):
            assert arc.dest > s, "states must be in topological order"
            indeg[arc.dest] += 1
    out = []
    for s in fst.states():
        bypass -= indeg[s]
        if bypass == 0:
            out.append(s)
        bypass += len(fst.arcs(s))
    return out


@dataclass(frozen=True)
class Region:
    """Span between consecutive sync states `left` and `right`; `parallel`
    when it holds any choice (interior states or several direct arcs)."""

    left: int
    right: int
    parallel: bool


def regions(fst: Fst) -> list[Region]:
    sync = sync_states(fst)
    out = []
    for left, right in zip(sync, sync[1:]):
        parallel = right - left > 1 or len(fst.arcs(left)) > 1
        out.append(Region(left, right, parallel))
    return out


@dataclass(frozen=True)
class Segment:
    """Structural stretch of the lattice.  A `parallel` segment is one region
    whose interior states are flown past; a `series` segment is a maximal run
    of interior-free regions.

    Classification is purely by the bypass count, so a series segment may
    still carry word choices as parallel arcs between adjacent sync states;
    `Region.parallel` is the flag resolution cares about.
    """

    kind: str
    left: int
    right: int


def segments(fst: Fst) -> list[Segment]:
    out: list[Segment] = []
    for region in regions(fst):
        if region.right - region.left > 1:
            out.append(Segment("parallel", region.left, region.right))
        elif out and out[-1].kind == "series" and out[-1].right == region.left:
            out[-1] = Segment("series", out[-1].left, region.right)
        else:
            out.append(Segment("series", region.left, region.right))
    return out
