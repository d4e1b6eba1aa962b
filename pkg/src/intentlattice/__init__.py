"""Fuzzy intent phrase spotting and transcript rescoring over ASR word
confusion networks."""

from .annotate import annotate, prune_quota
from .bestpath import (
    Annotation,
    EntityFill,
    RescoredConversation,
    extract,
    prune_alternatives,
    resolution_path,
    resolve,
    select_best,
)
from .errors import IntentLatticeError
from .fst import EPSILON, SIGMA, Arc, Fst, SymbolTable, best_path, compose_sigma
from .index import IndexTransducer, compile_index, load_index, serialize_index
from .lattice_io import parse_fst, parse_wcn, serialize_fst, wcn_to_fst
from .library import Intent, IntentExample, IntentLibrary
from .pipeline import rescore_conversation, rescore_text
from .segments import Region, Segment, regions, segments, sync_states
from .stats import summarize

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "Arc",
    "EPSILON",
    "EntityFill",
    "Fst",
    "Intent",
    "IntentExample",
    "IntentLatticeError",
    "IndexTransducer",
    "IntentLibrary",
    "Region",
    "RescoredConversation",
    "SIGMA",
    "Segment",
    "SymbolTable",
    "annotate",
    "best_path",
    "compile_index",
    "compose_sigma",
    "extract",
    "load_index",
    "parse_fst",
    "parse_wcn",
    "prune_alternatives",
    "prune_quota",
    "regions",
    "rescore_conversation",
    "rescore_text",
    "resolution_path",
    "resolve",
    "segments",
    "select_best",
    "serialize_fst",
    "serialize_index",
    "summarize",
    "sync_states",
    "wcn_to_fst",
]
