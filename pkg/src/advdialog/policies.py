"""Hand-written dialogue policies used as baselines and as the imitation teacher."""

from __future__ import annotations

import numpy as np

from .domain.ontology import TASKCOMPLETE, TICKET, DialogueAct
from .domain.tracker import ActionSpace, DialogueTracker

RULE_PRIORITY = ("moviename", "date", "starttime", "city", "theater", "numberofpeople")


class RulePolicy:
    """Answer open user questions, then ask a fixed list of slots, then book and close."""

    def __init__(self, actions: ActionSpace, priority=RULE_PRIORITY):
        self.actions = actions
        self.priority = tuple(priority)

    def act(self, tracker: DialogueTracker) -> int:
        order = tracker.ontology.slot_index
        pending = sorted((s for s in tracker.pending_requests if s not in (TICKET, TASKCOMPLETE)), key=order)
        if pending:
            return self.actions.index(DialogueAct.INFORM, pending[0])
        for slot in self.priority:
            if slot not in tracker.constraints and slot not in tracker.agent_requested:
                return self.actions.index(DialogueAct.REQUEST, slot)
        if TICKET not in tracker.agent_informed:
            return self.actions.index(DialogueAct.INFORM, TICKET)
        return self.actions.index(DialogueAct.INFORM, TASKCOMPLETE)

    def __call__(self, s: np.ndarray, tracker: DialogueTracker, rng: np.random.Generator | None = None) -> int:
        return self.act(tracker)


def rule_policy(tracker: DialogueTracker) -> int:
    return RulePolicy(ActionSpace(tracker.ontology)).act(tracker)


class ConstantPolicy:
    """Always emits the same action; handy for timeout tests."""

    def __init__(self, action: int):
        self.action = int(action)

    def __call__(self, s, tracker, rng=None) -> int:
        return self.action


class RandomPolicy:
    def __init__(self, n_actions: int):
        self.n_actions = n_actions

    def __call__(self, s, tracker, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_actions))
