"""Dialogue acts, slot ontology and the ontology file reader."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

ONTOLOGY_HEADER = "advdialog-ontology v1"
ANYTHING = "anything"
NO_MATCH = "none"
FREE = "*"
DEFAULT_SLOT_COUNT = 29

# slots with special meaning to the tracker and simulator
TICKET = "ticket"
TASKCOMPLETE = "taskcomplete"
RESULT_SLOTS = (TICKET, TASKCOMPLETE)


class OntologyError(ValueError):
    """Raised for unreadable or inconsistent ontology files."""


class DialogueAct(enum.Enum):
    INFORM = "inform"
    REQUEST = "request"
    CONFIRM_QUESTION = "confirm_question"
    CONFIRM_ANSWER = "confirm_answer"
    GREETING = "greeting"
    CLOSING = "closing"
    MULTIPLE_CHOICE = "multiple_choice"
    THANKS = "thanks"
    DENY = "deny"
    WELCOME = "welcome"
    NOT_SURE = "not_sure"

    @property
    def index(self) -> int:
        return _ACT_INDEX[self]

    @classmethod
    def parse(cls, name: str) -> "DialogueAct":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(f"unknown dialogue act {name!r}") from None


_ACT_INDEX = {act: i for i, act in enumerate(DialogueAct)}
N_ACTS = len(_ACT_INDEX)


@dataclass(frozen=True)
class Ontology:
    """Ordered slot inventory; slot order fixes every feature index."""

    slots: tuple[str, ...]
    informable: frozenset[str]
    requestable: frozenset[str]
    value_domain: dict[str, tuple[str, ...]] = field(hash=False, compare=True)

    def __post_init__(self):
        if not self.slots:
            raise OntologyError("empty ontology")
        if len(set(self.slots)) != len(self.slots):
            raise OntologyError("duplicate slot")
        missing = set(self.slots) - (self.informable | self.requestable)
        if missing:
            raise OntologyError(f"slots neither informable nor requestable: {sorted(missing)}")
        for s in self.informable:
            if not self.value_domain.get(s):
                raise OntologyError(f"informable slot {s!r} has an empty value domain")

    @property
    def n_slots(self) -> int:
        return len(self.slots)

    def slot_index(self, slot: str) -> int:
        try:
            return self._index[slot]
        except KeyError:
            raise KeyError(f"unknown slot {slot!r}") from None

    @property
    def _index(self) -> dict[str, int]:
        idx = self.__dict__.get("_slot_index")
        if idx is None:
            idx = {s: i for i, s in enumerate(self.slots)}
            object.__setattr__(self, "_slot_index", idx)
        return idx

    def is_free(self, slot: str) -> bool:
        return self.value_domain.get(slot) == (FREE,)

    @property
    def attribute_slots(self) -> tuple[str, ...]:
        """Informable slots with a finite value domain; these are the KB columns."""
        return tuple(s for s in self.slots if s in self.informable and not self.is_free(s))

    def valid_value(self, slot: str, value: str) -> bool:
        if slot not in self.informable:
            return False
        if value in (ANYTHING, NO_MATCH) or self.is_free(slot):
            return True
        return value in self.value_domain[slot]


def _parse_flags(flags: str, lineno: int) -> tuple[bool, bool]:
    flags = flags.strip().upper()
    if not flags or set(flags) - {"I", "R", "-"}:
        raise OntologyError(f"line {lineno}: bad flags {flags!r} (expected a mix of I, R, -)")
    return "I" in flags, "R" in flags


def parse_ontology(lines: Iterable[str], strict: bool = True, source: str = "<ontology>") -> Ontology:
    lines = list(lines)
    if not lines or lines[0].strip() != ONTOLOGY_HEADER:
        raise OntologyError(f"{source}: line 1: missing header {ONTOLOGY_HEADER!r}")
    slots: list[str] = []
    informable, requestable = set(), set()
    domains: dict[str, tuple[str, ...]] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("|", 2)]
        if len(parts) != 3 or not parts[0]:
            raise OntologyError(f"{source}: line {lineno}: expected 'name | flags | values'")
        name, flags, values = parts
        if name in domains:
            raise OntologyError(f"{source}: line {lineno}: duplicate slot {name!r}")
        inf, req = _parse_flags(flags, lineno)
        vals = tuple(v.strip() for v in values.split("|") if v.strip())
        if len(set(vals)) != len(vals):
            raise OntologyError(f"{source}: line {lineno}: duplicate value for slot {name!r}")
        if inf and not vals:
            raise OntologyError(f"{source}: line {lineno}: informable slot {name!r} has no values")
        slots.append(name)
        domains[name] = vals
        if inf:
            informable.add(name)
        if req:
            requestable.add(name)
    if not slots:
        raise OntologyError(f"{source}: empty ontology")
    if strict and len(slots) != DEFAULT_SLOT_COUNT:
        raise OntologyError(
            f"{source}: expected {DEFAULT_SLOT_COUNT} slots in strict mode, found {len(slots)}"
        )
    return Ontology(tuple(slots), frozenset(informable), frozenset(requestable), domains)


def load_ontology(path: str | Path | None = None, strict: bool = True) -> Ontology:
    """Read an ontology file; ``None`` loads the shipped movie-ticket ontology."""
    if path is None:
        text = resources.files("advdialog.data").joinpath("movie.ontology").read_text("utf-8")
        return parse_ontology(text.splitlines(), strict=strict, source="movie.ontology")
    path = Path(path)
    if not path.is_file():
        raise OntologyError(f"ontology file not found: {path}")
    return parse_ontology(path.read_text("utf-8").splitlines(), strict=strict, source=str(path))


def dump_ontology(ontology: Ontology) -> str:
    out = [ONTOLOGY_HEADER]
    for s in ontology.slots:
        flags = ("I" if s in ontology.informable else "") + ("R" if s in ontology.requestable else "")
        out.append(f"{s} | {flags or '-'} | {'|'.join(ontology.value_domain.get(s, ()))}")
    return "\n".join(out) + "\n"
