"""Episode engine: tracker + simulator + extrinsic reward behind reset/step."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain.frames import SemanticFrame, UserGoal
from .domain.kb import KnowledgeBase
from .domain.ontology import Ontology
from .domain.tracker import ActionSpace, DialogueTracker, featurize, state_dim
from .simulator import Outcome, SimulatorState, UserSimulator, sample_goal


@dataclass(frozen=True)
class RewardConfig:
    gamma: float = 0.9
    per_turn: float = -1.0
    success_bonus: float | None = None   # defaults to 2 * max_turns
    failure_penalty: float | None = None  # defaults to -max_turns
    max_turns: int = 40

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.max_turns < 1:
            raise ValueError("max_turns must be >= 1")
        if self.success_bonus is None:
            object.__setattr__(self, "success_bonus", 2.0 * self.max_turns)
        if self.failure_penalty is None:
            object.__setattr__(self, "failure_penalty", -float(self.max_turns))


@dataclass
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


@dataclass
class EpisodeRecord:
    transitions: list[Transition]
    outcome: Outcome
    goal: UserGoal | None = None
    frames: list[SemanticFrame] = field(default_factory=list)

    @property
    def turns(self) -> int:
        return len(self.transitions)

    @property
    def total_reward(self) -> float:
        return float(sum(t.r for t in self.transitions))

    @property
    def success(self) -> bool:
        return self.outcome == Outcome.SUCCESS


class EnvError(RuntimeError):
    pass


# policy(state_vector, tracker, rng) -> action index
Policy = Callable[[np.ndarray, DialogueTracker, np.random.Generator], int]


class DialogueEnv:
    """One dialogue at a time against the agenda-based user.

    Turn counting starts at 1 with the user's opening frame; the agent's
    k-th action is taken at turn k.
    """

    def __init__(
        self,
        ontology: Ontology,
        kb: KnowledgeBase,
        goals: Sequence[UserGoal],
        reward: RewardConfig | None = None,
        slot_noise: float = 0.0,
    ):
        if not goals:
            raise ValueError("goal corpus is empty")
        self.ontology = ontology
        self.kb = kb
        self.goals = list(goals)
        self.reward = reward or RewardConfig()
        self.actions = ActionSpace(ontology)
        self.simulator = UserSimulator(ontology, kb, slot_noise=slot_noise)
        self.tracker = DialogueTracker(ontology, kb)
        self.state_dim = state_dim(ontology)
        self.n_actions = len(self.actions)
        self.buffer: list[Transition] = []
        self.user_state: SimulatorState | None = None
        self.frames: list[SemanticFrame] = []
        self.turn = 0
        self.done = True
        self.outcome = Outcome.ONGOING
        self._rng: np.random.Generator | None = None
        self._state: np.ndarray | None = None

    @property
    def max_turns(self) -> int:
        return self.reward.max_turns

    def _observe(self) -> np.ndarray:
        return featurize(self.tracker, self.tracker.kb_match_count(), min(self.turn, self.max_turns),
                         self.max_turns)

    def reset(self, rng: np.random.Generator, goal: UserGoal | None = None,
              opening: SemanticFrame | None = None) -> np.ndarray:
        """Start a dialogue; ``opening`` replaces the simulated user's first frame."""
        self._rng = rng
        goal = goal if goal is not None else sample_goal(self.goals, rng)
        self.user_state = self.simulator.new_state(goal)
        self.tracker.reset()
        self.buffer = []
        simulated = self.simulator.initial_user_frame(self.user_state, rng)
        opening = simulated if opening is None else opening
        self.tracker.update_user(opening)
        self.frames = [opening]
        self.turn = 1
        self.done = False
        self.outcome = Outcome.ONGOING
        self._state = self._observe()
        return self._state

    def step_frame(self, frame: SemanticFrame, respond: Callable[[SemanticFrame], SemanticFrame] | None = None
                   ) -> tuple[np.ndarray, float, bool, Outcome, SemanticFrame]:
        """Advance with an already-instantiated agent frame.

        The simulator always judges the outcome against the goal. When
        ``respond`` is given and the dialogue goes on, its frame is used as the
        user's reply instead of the simulated one (the chat inspector).
        """
        if self.done:
            raise EnvError("step called on a finished episode; call reset first")
        self.tracker.update_agent(frame)
        self.frames.append(frame)
        user_frame, terminal, outcome = self.simulator.user_step(
            self.user_state, frame, self.turn, self.max_turns, self._rng
        )
        if respond is not None and not terminal:
            user_frame = respond(frame)
        self.tracker.update_user(user_frame)
        self.frames.append(user_frame)
        r = self.reward.per_turn
        if terminal:
            r += self.reward.success_bonus if outcome == Outcome.SUCCESS else self.reward.failure_penalty
        self.turn += 1
        self.done = terminal
        self.outcome = outcome
        return self._observe(), float(r), terminal, outcome, user_frame

    def step(self, a: int) -> tuple[np.ndarray, float, bool, Outcome]:
        if self.done:
            raise EnvError("step called on a finished episode; call reset first")
        if not 0 <= a < self.n_actions:
            raise EnvError(f"action index {a} out of range 0..{self.n_actions - 1}")
        s = self._state
        frame = self.tracker.instantiate(self.actions[a])
        s_next, r, terminal, outcome, _ = self.step_frame(frame)
        self.buffer.append(Transition(s, int(a), r, s_next, terminal))
        self._state = s_next
        return s_next, r, terminal, outcome


def run_episode(env: DialogueEnv, policy: Policy, rng: np.random.Generator,
                goal: UserGoal | None = None) -> EpisodeRecord:
    s = env.reset(rng, goal)
    terminal = False
    while not terminal:
        s, _, terminal, _ = env.step(policy(s, env.tracker, rng))
    return EpisodeRecord(list(env.buffer), env.outcome, env.user_state.goal, list(env.frames))
