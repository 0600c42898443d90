"""Semantic frames, user goals and the terse ``act(slot=value, ...)`` syntax."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .ontology import DialogueAct, Ontology

USER = "user"
AGENT = "agent"


@dataclass(frozen=True)
class SemanticFrame:
    act: DialogueAct
    inform_slots: Mapping[str, str] = field(default_factory=dict)
    request_slots: frozenset[str] = frozenset()
    speaker: str = USER

    def __post_init__(self):
        object.__setattr__(self, "inform_slots", MappingProxyType(dict(self.inform_slots)))
        object.__setattr__(self, "request_slots", frozenset(self.request_slots))
        if self.speaker not in (USER, AGENT):
            raise ValueError(f"speaker must be {USER!r} or {AGENT!r}")
        overlap = set(self.inform_slots) & self.request_slots
        if overlap:
            raise ValueError(f"slots both informed and requested: {sorted(overlap)}")

    def __eq__(self, other):
        if not isinstance(other, SemanticFrame):
            return NotImplemented
        return (
            self.act == other.act
            and dict(self.inform_slots) == dict(other.inform_slots)
            and self.request_slots == other.request_slots
            and self.speaker == other.speaker
        )

    def __hash__(self):
        return hash((self.act, tuple(sorted(self.inform_slots.items())), self.request_slots, self.speaker))

    def validate(self, ontology: Ontology) -> "SemanticFrame":
        for slot, value in self.inform_slots.items():
            if not ontology.valid_value(slot, value):
                raise ValueError(f"invalid inform {slot}={value!r}")
        bad = [s for s in self.request_slots if s not in ontology.requestable]
        if bad:
            raise ValueError(f"non-requestable slots requested: {sorted(bad)}")
        return self

    def format(self, slot_order: Mapping[str, int] | None = None) -> str:
        key = (lambda s: slot_order.get(s, len(slot_order))) if slot_order else None
        args = [s for s in sorted(self.request_slots, key=key)]
        args += [f"{s}={v}" for s, v in sorted(self.inform_slots.items(), key=(lambda kv: key(kv[0])) if key else None)]
        return f"{self.act.value}({', '.join(args)})"

    def __str__(self):
        return self.format()


@dataclass(frozen=True)
class UserGoal:
    inform_slots: Mapping[str, str]
    request_slots: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "inform_slots", MappingProxyType(dict(self.inform_slots)))
        object.__setattr__(self, "request_slots", frozenset(self.request_slots))
        if not self.request_slots:
            raise ValueError("a user goal needs at least one request slot")

    def __eq__(self, other):
        if not isinstance(other, UserGoal):
            return NotImplemented
        return dict(self.inform_slots) == dict(other.inform_slots) and self.request_slots == other.request_slots

    def __hash__(self):
        return hash((tuple(sorted(self.inform_slots.items())), self.request_slots))

    def to_dict(self) -> dict:
        return {"inform_slots": dict(self.inform_slots), "request_slots": sorted(self.request_slots)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "UserGoal":
        return cls(d["inform_slots"], frozenset(d["request_slots"]))

    def format(self) -> str:
        informs = ", ".join(f"{s}={v}" for s, v in sorted(self.inform_slots.items()))
        return f"constraints [{informs}] wants [{', '.join(sorted(self.request_slots))}]"


_FRAME_RE = re.compile(r"^\s*([A-Za-z_]+)\s*\((.*)\)\s*$")


def parse_frame(text: str, speaker: str = USER) -> SemanticFrame:
    """Parse ``act(slot, slot=value, ...)``; bare slots are requests, ``k=v`` are informs."""
    m = _FRAME_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse frame {text!r}; expected act(slot, slot=value, ...)")
    act = DialogueAct.parse(m.group(1))
    informs: dict[str, str] = {}
    requests: set[str] = set()
    body = m.group(2).strip()
    if body:
        for arg in body.split(","):
            arg = arg.strip()
            if not arg:
                raise ValueError(f"empty argument in {text!r}")
            if "=" in arg:
                slot, value = (p.strip() for p in arg.split("=", 1))
                if not slot or not value:
                    raise ValueError(f"bad slot=value pair {arg!r}")
                informs[slot] = value
            else:
                requests.add(arg)
    return SemanticFrame(act, informs, frozenset(requests), speaker)


def frame_to_record(frame: SemanticFrame) -> dict:
    return {
        "act": frame.act.value,
        "inform_slots": dict(sorted(frame.inform_slots.items())),
        "request_slots": sorted(frame.request_slots),
        "speaker": frame.speaker,
    }


def frame_from_record(d: Mapping) -> SemanticFrame:
    return SemanticFrame(DialogueAct(d["act"]), d["inform_slots"], frozenset(d["request_slots"]), d["speaker"])
