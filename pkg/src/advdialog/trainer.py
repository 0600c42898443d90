"""Training orchestration: imitation pretraining, A2C and adversarial A2C loops, evaluation."""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .a2c import Actor, Critic, a2c_update, greedy_action, select_action
from .adversarial import (
    DemoBuffer,
    Discriminator,
    GanCritic,
    adversarial_update,
    collect_demonstrations,
)
from .domain.kb import generate_world
from .domain.ontology import Ontology, load_ontology
from .domain.tracker import DialogueTracker
from .env import DialogueEnv, EpisodeRecord, RewardConfig, run_episode
from .metrics import MetricsRow
from .nn import RMSProp, log_softmax
from .policies import RulePolicy

log = logging.getLogger(__name__)

AGENTS = ("rule", "a2c", "adv-a2c")

# independent random streams spawned from the run seed
STREAMS = ("actor_init", "critic_init", "gan_init", "disc_init", "pretrain", "rollout", "demo", "eval")


@dataclass
class TrainConfig:
    seed: int = 0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    episodes: int = 2000
    eval_every: int = 100
    eval_episodes: int = 500
    final_eval_episodes: int = 1000
    # world
    world_seed: int = 7
    kb_rows: int = 300
    n_goals: int = 128
    slot_noise: float = 0.0
    # environment / reward
    max_turns: int = 40
    gamma: float = 0.9
    per_turn: float = -1.0
    success_bonus: float | None = None
    failure_penalty: float | None = None
    # networks / optimisation
    hidden_size: int = 80
    actor_lr: float = 0.0005
    critic_lr: float = 0.005
    gan_critic_lr: float = 0.005
    disc_lr: float = 0.001
    rms_rho: float = 0.9
    rms_eps: float = 1e-8
    disc_clamp: float = 1e-6
    entropy_coef: float = 0.0
    max_grad_norm: float = float("inf")
    # imitation pretraining
    pretrain_examples: int = 3000
    pretrain_target_accuracy: float = 0.9
    pretrain_max_steps: int = 2000
    pretrain_batch: int = 64
    pretrain_lr: float = 0.005
    # demonstrations
    n_demos: int = 50
    demo_seed: int = 1000
    demo_agent_episodes: int = 2000
    # alternation scheme marker: both critics update every episode in algorithm order
    alternation: str = "per-episode"

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.eval_every < 1 or (self.episodes and self.eval_every > self.episodes):
            raise ValueError("eval_every must be in 1..episodes")
        if self.eval_episodes < 1 or self.final_eval_episodes < 1:
            raise ValueError("evaluation episode counts must be >= 1")
        if self.alternation != "per-episode":
            raise ValueError("only the per-episode alternation scheme is supported")

    @property
    def reward(self) -> RewardConfig:
        return RewardConfig(self.gamma, self.per_turn, self.success_bonus, self.failure_penalty, self.max_turns)

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=int(seed))

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(ss) for name, ss in zip(STREAMS, children)}


def make_env(config: TrainConfig, ontology: Ontology | None = None) -> DialogueEnv:
    ontology = ontology or load_ontology()
    kb, goals = generate_world(config.world_seed, config.kb_rows, config.n_goals, ontology)
    return DialogueEnv(ontology, kb, goals, config.reward, slot_noise=config.slot_noise)


class ActorPolicy:
    """Adapter from an actor network to the environment's policy callable."""

    def __init__(self, actor: Actor, greedy: bool = True):
        self.actor = actor
        self.greedy = greedy

    def __call__(self, s: np.ndarray, tracker: DialogueTracker, rng: np.random.Generator) -> int:
        if self.greedy:
            return greedy_action(self.actor, s)
        return select_action(self.actor, s, rng)[0]


# --- evaluation ---------------------------------------------------------------

@dataclass
class EvalResult:
    success_rate: float  # percent
    avg_reward: float
    avg_turns: float
    episodes: list[EpisodeRecord] = field(default_factory=list, repr=False)


def evaluate(policy, env: DialogueEnv, n_episodes: int, rng: np.random.Generator,
             keep_episodes: bool = False) -> EvalResult:
    """Success rate (percent), mean total reward and mean turns; actor policies act greedily."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    if isinstance(policy, Actor):
        policy = ActorPolicy(policy, greedy=True)
    succ = reward = turns = 0.0
    kept = []
    for _ in range(n_episodes):
        ep = run_episode(env, policy, rng)
        succ += ep.success
        reward += ep.total_reward
        turns += ep.turns
        if keep_episodes:
            kept.append(ep)
    return EvalResult(100.0 * succ / n_episodes, reward / n_episodes, turns / n_episodes, kept)


def _eval_row(policy, env, config: TrainConfig, episode: int, agent: str, n: int | None = None) -> MetricsRow:
    # every snapshot replays the same evaluation goals
    res = evaluate(policy, env, n or config.eval_episodes, streams(config.seed)["eval"])
    return MetricsRow(episode, res.success_rate, res.avg_reward, res.avg_turns, config.seed, agent)


# --- imitation pretraining ----------------------------------------------------

def collect_rule_examples(env: DialogueEnv, n_examples: int, rng: np.random.Generator):
    rule = RulePolicy(env.actions)
    S, A = [], []
    while len(A) < n_examples:
        ep = run_episode(env, rule, rng)
        for t in ep.transitions:
            S.append(t.s)
            A.append(t.a)
    return np.stack(S[:n_examples]), np.array(A[:n_examples], dtype=np.int64)


def imitation_accuracy(actor: Actor, S: np.ndarray, A: np.ndarray) -> float:
    return float(np.mean(np.argmax(actor.logits(S), axis=1) == A))


def pretrain_actor(actor: Actor, env: DialogueEnv, n_examples: int, rng: np.random.Generator,
                   target_accuracy: float = 0.9, max_steps: int = 2000, batch_size: int = 64,
                   lr: float = 0.005, holdout: float = 0.2) -> float:
    """Cross-entropy imitation of the rule policy; returns held-out greedy accuracy."""
    if n_examples < 1:
        raise ValueError("n_examples must be >= 1")
    S, A = collect_rule_examples(env, n_examples, rng)
    perm = rng.permutation(len(A))
    n_hold = max(1, int(round(holdout * len(A)))) if len(A) > 1 else 0
    hold, train = perm[:n_hold], perm[n_hold:]
    if len(train) == 0:
        train = hold
    S_tr, A_tr = S[train], A[train]
    S_ho, A_ho = S[hold], A[hold]
    opt = RMSProp(lr)
    acc = imitation_accuracy(actor, S_ho, A_ho)
    for step in range(max_steps):
        if acc >= target_accuracy:
            break
        idx = rng.integers(len(A_tr), size=min(batch_size, len(A_tr)))
        logits, cache = actor.net.forward(S_tr[idx])
        g = np.exp(log_softmax(logits))
        g[np.arange(len(idx)), A_tr[idx]] -= 1.0
        opt.step(actor.net.params, actor.net.backward(cache, g / len(idx)))
        acc = imitation_accuracy(actor, S_ho, A_ho)
    if acc < 0.5:
        log.warning("imitation pretraining stopped at %.3f held-out accuracy", acc)
    return acc


# --- training loops -----------------------------------------------------------

@dataclass
class TrainResult:
    metrics: list[MetricsRow]
    actor: Actor
    critic: Critic
    gan_critic: GanCritic | None = None
    discriminator: Discriminator | None = None
    pretrain_accuracy: float = 0.0
    update_stats: list = field(default_factory=list, repr=False)


def build_learners(config: TrainConfig, env: DialogueEnv, rngs: dict[str, np.random.Generator]):
    d, n_act, h = env.state_dim, env.n_actions, config.hidden_size
    actor = Actor(d, n_act, h, lr=config.actor_lr, rng=rngs["actor_init"])
    critic = Critic(d, h, lr=config.critic_lr, rng=rngs["critic_init"])
    for opt in (actor.optimizer, critic.optimizer):
        opt.rho, opt.eps = config.rms_rho, config.rms_eps
    return actor, critic


def pretrained_actor(config: TrainConfig, env: DialogueEnv) -> tuple[Actor, float]:
    """The imitation-initialised actor every learned agent starts from (deterministic in the seed)."""
    rngs = streams(config.seed)
    actor, _ = build_learners(config, env, rngs)
    acc = pretrain_actor(actor, env, config.pretrain_examples, rngs["pretrain"],
                         config.pretrain_target_accuracy, config.pretrain_max_steps,
                         config.pretrain_batch, config.pretrain_lr)
    return actor, acc


def _train(
    config: TrainConfig,
    agent: str,
    env: DialogueEnv | None = None,
    demo_buffer: DemoBuffer | None = None,
    adversarial: bool = False,
    freeze_discriminator: bool = False,
    pretrained: tuple[Actor, float] | None = None,
    trace: list | None = None,
    on_episode: Callable | None = None,
) -> TrainResult:
    env = env or make_env(config)
    rngs = streams(config.seed)
    actor, critic = build_learners(config, env, rngs)
    if pretrained is None:
        pretrained = pretrained_actor(config, env)
    actor.net = pretrained[0].net.copy()
    pre_acc = pretrained[1]

    gan_critic = disc = None
    if adversarial:
        if demo_buffer is None or len(demo_buffer) == 0:
            raise ValueError("adversarial training needs a non-empty demo buffer")
        gan_critic = GanCritic(env.state_dim, config.hidden_size, lr=config.gan_critic_lr, rng=rngs["gan_init"])
        disc = Discriminator(env.state_dim, env.n_actions, config.hidden_size, lr=config.disc_lr,
                             clamp=config.disc_clamp, rng=rngs["disc_init"],
                             zero=freeze_discriminator, frozen=freeze_discriminator)
        for opt in (gan_critic.optimizer, disc.optimizer):
            opt.rho, opt.eps = config.rms_rho, config.rms_eps

    sampler = ActorPolicy(actor, greedy=False)
    metrics = [_eval_row(actor, env, config, 0, agent)]
    stats = []
    for episode in range(1, config.episodes + 1):
        ep = run_episode(env, sampler, rngs["rollout"])
        if trace is not None:
            trace.append("rollout")
        s_ext = a2c_update(actor, critic, ep.transitions, config.gamma,
                           entropy_coef=config.entropy_coef, max_grad_norm=config.max_grad_norm)
        if trace is not None:
            trace.extend(["actor", "critic"])
        s_adv = None
        if adversarial:
            s_adv = adversarial_update(actor, gan_critic, disc, ep.transitions, demo_buffer, rngs["demo"],
                                       config.gamma, config.entropy_coef, config.max_grad_norm, trace)
        stats.append((ep.success, ep.turns, s_ext, s_adv))
        if on_episode is not None:
            on_episode(episode, ep, actor, critic, gan_critic, disc)
        if episode % config.eval_every == 0:
            metrics.append(_eval_row(actor, env, config, episode, agent))
    return TrainResult(metrics, actor, critic, gan_critic, disc, pre_acc, stats)


def train_a2c(config: TrainConfig, env: DialogueEnv | None = None, **kw) -> TrainResult:
    """Imitation pretraining followed by per-episode A2C on the extrinsic reward."""
    return _train(config, "a2c", env, **kw)


def train_adversarial_a2c(config: TrainConfig, demo_buffer: DemoBuffer, env: DialogueEnv | None = None,
                          ablate: bool = False, **kw) -> TrainResult:
    """Adversarial A2C; each episode runs the extrinsic pass then the discriminator-reward pass.

    ``ablate`` skips every adversarial step (the result then matches ``train_a2c``).
    """
    if demo_buffer is None or len(demo_buffer) == 0:
        raise ValueError("adversarial training needs a non-empty demo buffer")
    return _train(config, "adv-a2c", env, demo_buffer=demo_buffer, adversarial=not ablate, **kw)


def rule_metrics(config: TrainConfig, env: DialogueEnv | None = None) -> list[MetricsRow]:
    """Learning-curve rows for the (non-learning) rule agent at the same cadence."""
    env = env or make_env(config)
    row = _eval_row(RulePolicy(env.actions), env, config, 0, "rule")
    n_rows = config.episodes // config.eval_every + 1 if config.episodes else 1
    return [replace(row, episode=i * config.eval_every) for i in range(n_rows)]


def final_evaluation(policy, env: DialogueEnv, config: TrainConfig, agent: str) -> MetricsRow:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0xF1]))
    res = evaluate(policy, env, config.final_eval_episodes, rng)
    return MetricsRow(config.episodes, res.success_rate, res.avg_reward, res.avg_turns, config.seed, agent)


def demo_agent(config: TrainConfig, env: DialogueEnv | None = None) -> Actor:
    """The pre-trained agent whose successful dialogues become expert demonstrations."""
    env = env or make_env(config)
    cfg = replace(config, seed=config.demo_seed, episodes=config.demo_agent_episodes,
                  eval_every=max(1, config.demo_agent_episodes), eval_episodes=1)
    if cfg.episodes == 0:
        return pretrained_actor(cfg, env)[0]
    return train_a2c(cfg, env).actor


def demos_for(config: TrainConfig, env: DialogueEnv | None = None, actor: Actor | None = None,
              n: int | None = None) -> tuple[DemoBuffer, int]:
    env = env or make_env(config)
    actor = actor or demo_agent(config, env)
    rng = np.random.default_rng(np.random.SeedSequence([config.demo_seed, 0xDE]))
    return collect_demonstrations(ActorPolicy(actor, greedy=True), env, n or config.n_demos, rng)


def clone_actor(actor: Actor) -> Actor:
    return copy.deepcopy(actor)


# --- one benchmark cell -------------------------------------------------------

@dataclass
class AgentRun:
    agent: str
    seed: int
    metrics: list[MetricsRow]
    final: MetricsRow
    nets: dict = field(default_factory=dict, repr=False)
    demos: DemoBuffer | None = field(default=None, repr=False)
    pretrain_accuracy: float | None = None


def run_agent(config: TrainConfig, agent: str, env: DialogueEnv | None = None,
              demo_buffer: DemoBuffer | None = None) -> AgentRun:
    """Train (if learned) and finally evaluate one agent on ``config.seed``."""
    if agent not in AGENTS:
        raise ValueError(f"unknown agent {agent!r}; expected one of {', '.join(AGENTS)}")
    env = env or make_env(config)
    if agent == "rule":
        policy = RulePolicy(env.actions)
        return AgentRun(agent, config.seed, rule_metrics(config, env),
                        final_evaluation(policy, env, config, agent))
    if agent == "a2c":
        res = train_a2c(config, env)
        nets = {"actor": res.actor.net, "critic": res.critic.net}
    else:
        if demo_buffer is None:
            demo_buffer, _ = demos_for(config, env)
        res = train_adversarial_a2c(config, demo_buffer, env)
        nets = {"actor": res.actor.net, "critic": res.critic.net,
                "gan_critic": res.gan_critic.net, "discriminator": res.discriminator.net}
    final = final_evaluation(res.actor, env, config, agent)
    return AgentRun(agent, config.seed, res.metrics, final, nets, demo_buffer, res.pretrain_accuracy)
