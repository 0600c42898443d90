"""Agenda-based user simulator and the episode log format."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .domain.frames import USER, SemanticFrame, UserGoal, frame_from_record, frame_to_record
from .domain.kb import KnowledgeBase
from .domain.ontology import ANYTHING, NO_MATCH, TASKCOMPLETE, TICKET, DialogueAct, Ontology

LOG_HEADER = "advdialog-log v1"


class Outcome(str, enum.Enum):
    ONGOING = "ongoing"
    SUCCESS = "success"
    FAILURE = "failure"


class SimulatorError(RuntimeError):
    pass


@dataclass
class SimulatorState:
    """Per-episode user state.

    ``agenda`` holds pending ("inform" | "request", slot) items, popped from
    the front. ``asked`` tracks requests already voiced but not yet answered.
    """

    goal: UserGoal
    agenda: list[tuple[str, str]]
    received: dict[str, str] = field(default_factory=dict)
    booked: bool = False
    booked_row: int | None = None
    asked: list[str] = field(default_factory=list)
    terminal: bool = False
    outcome: Outcome = Outcome.ONGOING


def sample_goal(corpus: Sequence[UserGoal], rng: np.random.Generator) -> UserGoal:
    if not corpus:
        raise ValueError("cannot sample from an empty goal corpus")
    return corpus[int(rng.integers(len(corpus)))]


class UserSimulator:
    """Deterministic agenda policy over semantic frames.

    With ``slot_noise > 0`` each value the user informs is replaced by a
    random in-domain value with that probability.
    """

    def __init__(self, ontology: Ontology, kb: KnowledgeBase, slot_noise: float = 0.0):
        if not 0.0 <= slot_noise <= 1.0:
            raise ValueError("slot_noise must be in [0, 1]")
        self.ontology = ontology
        self.kb = kb
        self.slot_noise = slot_noise
        self._order = {s: i for i, s in enumerate(ontology.slots)}

    def _sorted(self, slots: Iterable[str]) -> list[str]:
        return sorted(slots, key=self._order.__getitem__)

    def new_state(self, goal: UserGoal) -> SimulatorState:
        agenda = [("inform", s) for s in self._sorted(goal.inform_slots)]
        requests = self._sorted(s for s in goal.request_slots if s != TICKET)
        if TICKET in goal.request_slots:
            requests.append(TICKET)
        agenda += [("request", s) for s in requests]
        return SimulatorState(goal=goal, agenda=agenda)

    def _value(self, slot: str, value: str, rng: np.random.Generator) -> str:
        if self.slot_noise > 0.0 and rng.random() < self.slot_noise and not self.ontology.is_free(slot):
            domain = self.ontology.value_domain[slot]
            return domain[int(rng.integers(len(domain)))]
        return value

    def _drop(self, state: SimulatorState, kind: str, slot: str) -> None:
        if (kind, slot) in state.agenda:
            state.agenda.remove((kind, slot))

    def initial_user_frame(self, state: SimulatorState, rng: np.random.Generator) -> SemanticFrame:
        """Open with one request plus the first one or two constraints in slot order."""
        goal = state.goal
        n_inform = min(1 + int(rng.integers(2)), len(goal.inform_slots))
        informs = {}
        for kind, slot in [item for item in state.agenda if item[0] == "inform"][:n_inform]:
            informs[slot] = self._value(slot, goal.inform_slots[slot], rng)
            self._drop(state, kind, slot)
        req = next(slot for kind, slot in state.agenda if kind == "request")
        self._drop(state, "request", req)
        state.asked.append(req)
        return SemanticFrame(DialogueAct.REQUEST, informs, frozenset({req}), USER)

    def _booking_ok(self, state: SimulatorState) -> bool:
        return (
            state.booked
            and state.booked_row is not None
            and self.kb.satisfies(state.booked_row, state.goal.inform_slots)
        )

    def _first_violation(self, state: SimulatorState) -> str | None:
        row = self.kb.row(state.booked_row)
        for slot in self._sorted(state.goal.inform_slots):
            want = state.goal.inform_slots[slot]
            if slot in row and want != ANYTHING and row[slot] != want:
                return slot
        return None

    def _default_response(self, state: SimulatorState, rng: np.random.Generator) -> SemanticFrame:
        goal = state.goal
        while state.agenda:
            kind, slot = state.agenda.pop(0)
            if kind == "inform":
                return SemanticFrame(DialogueAct.INFORM, {slot: self._value(slot, goal.inform_slots[slot], rng)},
                                     frozenset(), USER)
            if slot not in state.received:
                state.asked.append(slot)
                return SemanticFrame(DialogueAct.REQUEST, {}, frozenset({slot}), USER)
        for slot in state.asked:
            if slot not in state.received:
                return SemanticFrame(DialogueAct.REQUEST, {}, frozenset({slot}), USER)
        return SemanticFrame(DialogueAct.THANKS, {}, frozenset(), USER)

    def _answer_request(self, state: SimulatorState, slots: Iterable[str], rng) -> SemanticFrame:
        goal = state.goal
        informs = {}
        for slot in self._sorted(slots):
            if slot in goal.inform_slots:
                informs[slot] = self._value(slot, goal.inform_slots[slot], rng)
                self._drop(state, "inform", slot)
            elif slot in self.ontology.informable and not self.ontology.is_free(slot) \
                    and slot not in goal.request_slots:
                informs[slot] = ANYTHING
        if not informs:
            return SemanticFrame(DialogueAct.NOT_SURE, {}, frozenset(), USER)
        return SemanticFrame(DialogueAct.INFORM, informs, frozenset(), USER)

    def _finish(self, state: SimulatorState, outcome: Outcome, act: DialogueAct):
        state.terminal = True
        state.outcome = outcome
        return SemanticFrame(act, {}, frozenset(), USER), True, outcome

    def user_step(
        self,
        state: SimulatorState,
        agent_frame: SemanticFrame,
        turn: int,
        max_turns: int,
        rng: np.random.Generator,
    ) -> tuple[SemanticFrame, bool, Outcome]:
        if state.terminal:
            raise SimulatorError("user_step called on a terminal dialogue")
        goal = state.goal
        act = agent_frame.act

        if act == DialogueAct.INFORM and TASKCOMPLETE in agent_frame.inform_slots:
            ok = self._booking_ok(state) and goal.request_slots <= state.received.keys()
            return self._finish(state, Outcome.SUCCESS if ok else Outcome.FAILURE,
                                DialogueAct.THANKS if ok else DialogueAct.DENY)
        if act == DialogueAct.CLOSING:
            return self._finish(state, Outcome.FAILURE, DialogueAct.CLOSING)

        if act == DialogueAct.REQUEST and agent_frame.request_slots:
            frame = self._answer_request(state, agent_frame.request_slots, rng)
        elif act == DialogueAct.INFORM and agent_frame.inform_slots:
            correction = None
            for slot in self._sorted(agent_frame.inform_slots):
                value = agent_frame.inform_slots[slot]
                state.received[slot] = value
                if slot == TICKET:
                    if value == NO_MATCH:
                        state.booked, state.booked_row = False, None
                    else:
                        state.booked, state.booked_row = True, int(value)
                        correction = correction or self._first_violation(state)
                elif slot in goal.inform_slots and goal.inform_slots[slot] not in (ANYTHING, value):
                    correction = correction or slot
                self._drop(state, "request", slot)
            if correction is not None:
                self._drop(state, "inform", correction)
                frame = SemanticFrame(
                    DialogueAct.INFORM,
                    {correction: self._value(correction, goal.inform_slots[correction], rng)},
                    frozenset(), USER,
                )
            else:
                frame = self._default_response(state, rng)
        else:
            frame = self._default_response(state, rng)

        if turn >= max_turns:
            return self._finish(state, Outcome.FAILURE, DialogueAct.CLOSING)
        return frame, False, Outcome.ONGOING


# --- episode logs ---------------------------------------------------------

def write_episode_log(path: str | Path, goal: UserGoal, seed: int | None,
                      turns: Sequence[tuple[int, SemanticFrame, float]]) -> None:
    """Write ``(turn, frame, reward)`` records; user frames carry reward 0."""
    lines = [LOG_HEADER, "goal\t" + json.dumps({**goal.to_dict(), "seed": seed}, sort_keys=True)]
    for turn, frame, reward in turns:
        lines.append(f"{turn}\t{frame.speaker}\t{json.dumps(frame_to_record(frame), sort_keys=True)}\t{reward!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_episode_log(path: str | Path) -> tuple[UserGoal, int | None, list[tuple[int, SemanticFrame, float]]]:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or lines[0] != LOG_HEADER:
        raise ValueError(f"{path}: line 1: missing header {LOG_HEADER!r}")
    tag, payload = lines[1].split("\t", 1)
    if tag != "goal":
        raise ValueError(f"{path}: line 2: expected goal record")
    meta = json.loads(payload)
    goal = UserGoal.from_dict(meta)
    turns = []
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{path}: line {lineno}: expected 4 tab-separated fields")
        frame = frame_from_record(json.loads(parts[2]))
        if frame.speaker != parts[1]:
            raise ValueError(f"{path}: line {lineno}: speaker mismatch")
        turns.append((int(parts[0]), frame, float(parts[3])))
    return goal, meta.get("seed"), turns
