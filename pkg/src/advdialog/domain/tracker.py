"""Agent action space, dialogue-state tracker and state featurization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import AGENT, USER, SemanticFrame
from .kb import KnowledgeBase
from .ontology import N_ACTS, NO_MATCH, TASKCOMPLETE, TICKET, DialogueAct, Ontology

# {0, 1, 2-4, 5-9, 10-49, >=50}
MATCH_BUCKET_EDGES = (0, 1, 2, 5, 10, 50)
N_BUCKETS = len(MATCH_BUCKET_EDGES)

SPECIAL_ACTIONS = (
    (DialogueAct.GREETING, None),
    (DialogueAct.THANKS, None),
    (DialogueAct.DENY, None),
    (DialogueAct.CONFIRM_ANSWER, None),
    (DialogueAct.CLOSING, None),
    (DialogueAct.INFORM, TASKCOMPLETE),
)


@dataclass(frozen=True)
class AgentAction:
    index: int
    act: DialogueAct
    slot: str | None = None

    @property
    def name(self) -> str:
        return f"{self.act.value}({self.slot or ''})"


class ActionSpace:
    """request(slot) per requestable slot, inform(slot) per informable slot, then the specials."""

    def __init__(self, ontology: Ontology):
        actions = []
        for s in ontology.slots:
            if s in ontology.requestable:
                actions.append((DialogueAct.REQUEST, s))
        for s in ontology.slots:
            if s in ontology.informable and s != TASKCOMPLETE:
                actions.append((DialogueAct.INFORM, s))
        actions.extend(SPECIAL_ACTIONS)
        self.actions = tuple(AgentAction(i, act, slot) for i, (act, slot) in enumerate(actions))
        self._by_key = {(a.act, a.slot): a.index for a in self.actions}

    def __len__(self):
        return len(self.actions)

    def __getitem__(self, i: int) -> AgentAction:
        return self.actions[i]

    def index(self, act: DialogueAct, slot: str | None = None) -> int:
        return self._by_key[(act, slot)]


def match_bucket(count: int) -> int:
    b = 0
    for i, edge in enumerate(MATCH_BUCKET_EDGES):
        if count >= edge:
            b = i
    return b


def state_dim(ontology: Ontology) -> int:
    return 2 * (N_ACTS + 2 * ontology.n_slots) + 1 + N_BUCKETS


class DialogueTracker:
    """Accumulates what both speakers have said during one dialogue.

    ``constraints`` holds the user's informed slot values; ``pending_requests``
    are user questions the agent has not yet answered.
    """

    def __init__(self, ontology: Ontology, kb: KnowledgeBase):
        self.ontology = ontology
        self.kb = kb
        self._kb_slots = set(kb.columns)
        self.reset()

    def reset(self) -> None:
        self.constraints: dict[str, str] = {}
        self.pending_requests: set[str] = set()
        self.user_informed: set[str] = set()
        self.user_requested: set[str] = set()
        self.agent_informed: set[str] = set()
        self.agent_requested: set[str] = set()
        self.last_user_frame: SemanticFrame | None = None
        self.last_agent_frame: SemanticFrame | None = None
        self.booked_row: int | None = None
        self.history: list[SemanticFrame] = []

    def update_user(self, frame: SemanticFrame) -> None:
        self.last_user_frame = frame
        self.history.append(frame)
        for slot, value in frame.inform_slots.items():
            self.user_informed.add(slot)
            if slot in self._kb_slots:
                self.constraints[slot] = value
            self.pending_requests.discard(slot)
        for slot in frame.request_slots:
            self.user_requested.add(slot)
            self.pending_requests.add(slot)

    def update_agent(self, frame: SemanticFrame) -> None:
        self.last_agent_frame = frame
        self.history.append(frame)
        for slot in frame.inform_slots:
            self.agent_informed.add(slot)
            self.pending_requests.discard(slot)
        self.agent_requested.update(frame.request_slots)

    def kb_match_count(self) -> int:
        return int(self.kb.match_mask(self.constraints).sum())

    def top_row(self) -> int | None:
        idx = self.kb.match_indices(self.constraints)
        return int(idx[0]) if len(idx) else None

    def instantiate(self, action: AgentAction) -> SemanticFrame:
        """Turn an action template into a concrete agent frame using the top matching KB row."""
        if action.act == DialogueAct.REQUEST:
            return SemanticFrame(action.act, {}, frozenset({action.slot}), AGENT)
        if action.act == DialogueAct.INFORM:
            if action.slot == TASKCOMPLETE:
                value = "done"
            else:
                row = self.top_row()
                if row is None:
                    value = NO_MATCH
                elif action.slot == TICKET:
                    value = str(row)
                else:
                    value = self.kb.row(row)[action.slot]
            return SemanticFrame(action.act, {action.slot: value}, frozenset(), AGENT)
        return SemanticFrame(action.act, {}, frozenset(), AGENT)


def featurize(tracker: DialogueTracker, kb_match_count: int, turn: int, max_turns: int) -> np.ndarray:
    """Fixed-layout state vector in [0, 1].

    Blocks: last user act, user informed slots, pending user requests,
    last agent act, agent informed slots, agent requested slots, turn
    fraction, KB match-count bucket.
    """
    if turn > max_turns:
        raise ValueError(f"turn {turn} exceeds max_turns {max_turns}")
    onto = tracker.ontology
    n = onto.n_slots
    x = np.zeros(state_dim(onto))
    off = 0
    if tracker.last_user_frame is not None:
        x[off + tracker.last_user_frame.act.index] = 1.0
    off += N_ACTS
    for s in tracker.user_informed:
        x[off + onto.slot_index(s)] = 1.0
    off += n
    for s in tracker.pending_requests:
        x[off + onto.slot_index(s)] = 1.0
    off += n
    if tracker.last_agent_frame is not None:
        x[off + tracker.last_agent_frame.act.index] = 1.0
    off += N_ACTS
    for s in tracker.agent_informed:
        x[off + onto.slot_index(s)] = 1.0
    off += n
    for s in tracker.agent_requested:
        x[off + onto.slot_index(s)] = 1.0
    off += n
    x[off] = turn / max_turns
    off += 1
    x[off + match_bucket(kb_match_count)] = 1.0
    return x


__all__ = [
    "ActionSpace", "AgentAction", "DialogueTracker", "featurize", "match_bucket", "state_dim",
    "MATCH_BUCKET_EDGES", "USER", "AGENT",
]
