"""Intent library: named intents, example phrasings, entity grammars.

The on-disk form is JSON:

    {
      "defaults": {"blank_quota": 1},
      "intents": [
        {"id": 111, "name": "buy_tickets",
         "examples": [{"id": "e0", "tokens": ["tickets", "for", "weekend"],
                       "blank_quota": 2}]}
      ],
      "entities": {"__NUMBER__": [["three"], ["thirty", "three"]]}
    }

Example ids default to e0, e1, ... in listed order.  Tokens of the form
__NAME__ reference an entity grammar; entity variants are literal token
sequences.  Validation errors point at the offending node JSON-pointer
style, e.g. /intents/0/examples/2/tokens/1.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import LibraryError
from .fst import EPSILON_TOKEN, SIGMA_TOKEN

PLACEHOLDER_RE = re.compile(r"^__\w+__$")

_RESERVED = {EPSILON_TOKEN, SIGMA_TOKEN}


def is_placeholder(token: str) -> bool:
    return PLACEHOLDER_RE.match(token) is not None


@dataclass(frozen=True)
class IntentExample:
    example_id: str
    tokens: tuple[str, ...]
    blank_quota: int


@dataclass(frozen=True)
class Intent:
    intent_id: str
    name: str
    examples: tuple[IntentExample, ...]


@dataclass(frozen=True)
class IntentLibrary:
    intents: tuple[Intent, ...]
    entities: dict[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)
    default_blank_quota: int = 0

    def examples(self) -> Iterator[tuple[Intent, IntentExample]]:
        for intent in self.intents:
            for ex in intent.examples:
                yield intent, ex

    @staticmethod
    def from_json(text: str) -> "IntentLibrary":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise LibraryError("/", f"not valid JSON: {exc}") from None
        return IntentLibrary.from_obj(obj)

    @staticmethod
    def from_obj(obj: Any) -> "IntentLibrary":
        return _load(obj)

    def to_obj(self) -> dict:
        out: dict[str, Any] = {"defaults": {"blank_quota": self.default_blank_quota}}
        out["intents"] = [
            {
                "id": intent.intent_id,
                "name": intent.name,
                "examples": [
                    {
                        "id": ex.example_id,
                        "tokens": list(ex.tokens),
                        "blank_quota": ex.blank_quota,
                    }
                    for ex in intent.examples
                ],
            }
            for intent in self.intents
        ]
        if self.entities:
            out["entities"] = {
                name: [list(v) for v in variants]
                for name, variants in self.entities.items()
            }
        return out


def _expect(cond: bool, loc: str, msg: str) -> None:
    if not cond:
        raise LibraryError(loc, msg)


def _check_word(token: Any, loc: str, allow_placeholder: bool) -> str:
    _expect(isinstance(token, str), loc, "token must be a string")
    _expect(bool(token), loc, "token must be non-empty")
    _expect(not any(c.isspace() for c in token), loc, "token must not contain whitespace")
    _expect(token not in _RESERVED, loc, f"{token} is reserved")
    if not allow_placeholder:
        _expect(not is_placeholder(token), loc, "entity variants cannot nest placeholders")
    return token


def _load(obj: Any) -> IntentLibrary:
    _expect(isinstance(obj, dict), "/", "document must be an object")
    unknown = set(obj) - {"defaults", "intents", "entities"}
    _expect(not unknown, "/", f"unknown keys: {sorted(unknown)}")

    defaults = obj.get("defaults", {})
    _expect(isinstance(defaults, dict), "/defaults", "must be an object")
    unknown = set(defaults) - {"blank_quota"}
    _expect(not unknown, "/defaults", f"unknown keys: {sorted(unknown)}")
    default_quota = defaults.get("blank_quota", 0)
    _expect(
        isinstance(default_quota, int) and not isinstance(default_quota, bool)
        and default_quota >= 0,
        "/defaults/blank_quota",
        "must be a non-negative integer",
    )

    entities: dict[str, tuple[tuple[str, ...], ...]] = {}
    raw_entities = obj.get("entities", {})
    _expect(isinstance(raw_entities, dict), "/entities", "must be an object")
    for name, raw_variants in raw_entities.items():
        loc = f"/entities/{name}"
        _expect(is_placeholder(name), loc, "entity names must look like __NAME__")
        _expect(
            isinstance(raw_variants, list) and raw_variants,
            loc,
            "must be a non-empty array of token arrays",
        )
        variants = []
        seen_variants = set()
        for vi, raw in enumerate(raw_variants):
            vloc = f"{loc}/{vi}"
            _expect(isinstance(raw, list) and raw, vloc, "variant must be a non-empty array")
            variant = tuple(
                _check_word(tok, f"{vloc}/{ti}", allow_placeholder=False)
                for ti, tok in enumerate(raw)
            )
            _expect(variant not in seen_variants, vloc, "duplicate variant")
            seen_variants.add(variant)
            variants.append(variant)
        entities[name] = tuple(variants)

    raw_intents = obj.get("intents")
    _expect(isinstance(raw_intents, (list, type(None))), "/intents", "must be an array")
    _expect(bool(raw_intents), "/intents", "library has no intents")
    intents = []
    seen_intent_ids: set[str] = set()
    for ii, raw_intent in enumerate(raw_intents):
        iloc = f"/intents/{ii}"
        _expect(isinstance(raw_intent, dict), iloc, "must be an object")
        unknown = set(raw_intent) - {"id", "name", "examples"}
        _expect(not unknown, iloc, f"unknown keys: {sorted(unknown)}")
        raw_id = raw_intent.get("id")
        _expect(
            isinstance(raw_id, (str, int)) and not isinstance(raw_id, bool),
            f"{iloc}/id",
            "must be a string or integer",
        )
        intent_id = str(raw_id)
        _expect(intent_id not in seen_intent_ids, f"{iloc}/id", "duplicate intent id")
        seen_intent_ids.add(intent_id)
        name = raw_intent.get("name")
        _expect(isinstance(name, str) and name, f"{iloc}/name", "must be a non-empty string")

        raw_examples = raw_intent.get("examples")
        _expect(
            isinstance(raw_examples, list) and raw_examples,
            f"{iloc}/examples",
            "must be a non-empty array",
        )
        examples = []
        seen_example_ids: set[str] = set()
        for ei, raw_ex in enumerate(raw_examples):
            eloc = f"{iloc}/examples/{ei}"
            _expect(isinstance(raw_ex, dict), eloc, "must be an object")
            unknown = set(raw_ex) - {"id", "tokens", "blank_quota"}
            _expect(not unknown, eloc, f"unknown keys: {sorted(unknown)}")
            example_id = raw_ex.get("id", f"e{ei}")
            _expect(
                isinstance(example_id, str) and example_id,
                f"{eloc}/id",
                "must be a non-empty string",
            )
            _expect(
                example_id not in seen_example_ids, f"{eloc}/id", "duplicate example id"
            )
            seen_example_ids.add(example_id)
            raw_tokens = raw_ex.get("tokens")
            _expect(
                isinstance(raw_tokens, list) and raw_tokens,
                f"{eloc}/tokens",
                "must be a non-empty array",
            )
            tokens = []
            for ti, tok in enumerate(raw_tokens):
                tloc = f"{eloc}/tokens/{ti}"
                tokens.append(_check_word(tok, tloc, allow_placeholder=True))
                if is_placeholder(tok):
                    _expect(tok in entities, tloc, f"undefined entity {tok}")
            quota = raw_ex.get("blank_quota", default_quota)
            _expect(
                isinstance(quota, int) and not isinstance(quota, bool) and quota >= 0,
                f"{eloc}/blank_quota",
                "must be a non-negative integer",
            )
            examples.append(IntentExample(example_id, tuple(tokens), quota))
        intents.append(Intent(intent_id, name, tuple(examples)))

    return IntentLibrary(tuple(intents), entities, default_quota)
