"""Discriminator critic, expert demonstrations and the intrinsic-reward update."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .a2c import Actor, Critic, UpdateStats, a2c_update, stack_episode, td_error
from .env import DialogueEnv, Policy, Transition, run_episode
from .nn import HIDDEN_SIZE, DenseNet, RMSProp, log_sigmoid, sigmoid

DISC_LR = 0.001
DISC_CLAMP = 1e-6


class Discriminator:
    """Scores (state, action) pairs; the output is the probability the pair is EXPERT."""

    def __init__(self, state_dim: int, n_actions: int, hidden_size: int = HIDDEN_SIZE,
                 lr: float = DISC_LR, clamp: float = DISC_CLAMP,
                 rng: np.random.Generator | None = None, zero: bool = False, frozen: bool = False):
        if not 0.0 < clamp < 0.5:
            raise ValueError("clamp must be in (0, 0.5)")
        self.state_dim = state_dim
        self.n_actions = n_actions
        self.net = DenseNet(state_dim + n_actions, 1, hidden_size, rng=rng, zero=zero)
        self.optimizer = RMSProp(lr)
        self.clamp = clamp
        self.frozen = frozen

    def features(self, S: np.ndarray, A) -> np.ndarray:
        S = np.asarray(S, dtype=np.float64)
        A = np.asarray(A, dtype=np.int64)
        if S.shape[-1] != self.state_dim:
            raise ValueError(f"expected states of width {self.state_dim}, got {S.shape[-1]}")
        if np.any((A < 0) | (A >= self.n_actions)):
            raise ValueError("action index out of range")
        onehot = np.zeros(A.shape + (self.n_actions,))
        np.put_along_axis(onehot, A[..., None], 1.0, axis=-1)
        return np.concatenate([S, onehot], axis=-1)

    def logit(self, S, A) -> np.ndarray:
        return self.net(self.features(S, A))[..., 0]

    def prob(self, S, A) -> np.ndarray:
        return np.clip(sigmoid(self.logit(S, A)), self.clamp, 1.0 - self.clamp)


def disc_prob(disc: Discriminator, s, a) -> float:
    return float(disc.prob(s, a))


def intrinsic_reward_from_prob(p):
    return -np.log1p(-np.asarray(p, dtype=np.float64))


def intrinsic_reward(disc: Discriminator, s, a):
    """-log(1 - D(s, a)); larger for expert-looking pairs."""
    r = intrinsic_reward_from_prob(disc.prob(s, a))
    return float(r) if np.ndim(r) == 0 else r


def gan_td_error(r_gan, v_s, v_next, gamma: float, terminal):
    return td_error(r_gan, v_s, v_next, gamma, terminal)


def disc_loss(disc: Discriminator, sim: tuple[np.ndarray, np.ndarray],
              demo: tuple[np.ndarray, np.ndarray]) -> float:
    """Mean binary cross-entropy on clamped probabilities; demo label 1, simulation label 0."""
    p_sim = disc.prob(*sim)
    p_demo = disc.prob(*demo)
    total = -np.sum(np.log1p(-p_sim)) - np.sum(np.log(p_demo))
    return float(total / (len(p_sim) + len(p_demo)))


def disc_update(disc: Discriminator, sim: tuple[np.ndarray, np.ndarray],
                demo: tuple[np.ndarray, np.ndarray]) -> float:
    """One RMSProp step on the mean cross-entropy; returns the pre-step loss."""
    if len(sim[1]) == 0 or len(demo[1]) == 0:
        raise ValueError("discriminator update needs non-empty simulation and demo batches")
    loss = disc_loss(disc, sim, demo)
    if disc.frozen:
        return loss
    X = np.concatenate([disc.features(*sim), disc.features(*demo)])
    y = np.concatenate([np.zeros(len(sim[1])), np.ones(len(demo[1]))])
    out, cache = disc.net.forward(X)
    grad = (sigmoid(out[:, 0]) - y) / len(y)
    disc.optimizer.step(disc.net.params, disc.net.backward(cache, grad[:, None]))
    return loss


def disc_accuracy(disc: Discriminator, sim, demo) -> float:
    correct = np.sum(disc.prob(*sim) < 0.5) + np.sum(disc.prob(*demo) > 0.5)
    return float(correct / (len(sim[1]) + len(demo[1])))


def bce_loss_unclamped(disc: Discriminator, X: np.ndarray, y: np.ndarray) -> float:
    z = disc.net(X)[:, 0]
    return float(-np.mean(y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z)))


class GanCritic(Critic):
    """State-value function for the intrinsic reward stream; never shares parameters with the extrinsic critic."""


@dataclass
class DemoBuffer:
    states: np.ndarray
    actions: np.ndarray
    episode_ids: np.ndarray
    n_episodes: int
    capacity: int | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.episode_ids = np.asarray(self.episode_ids, dtype=np.int64)
        if not (len(self.states) == len(self.actions) == len(self.episode_ids)):
            raise ValueError("demo arrays differ in length")

    def __len__(self):
        return len(self.actions)

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if len(self) == 0:
            raise ValueError("demo buffer is empty")
        idx = rng.integers(len(self), size=n)
        return self.states[idx], self.actions[idx]

    def equals(self, other: "DemoBuffer") -> bool:
        return (
            self.n_episodes == other.n_episodes
            and np.array_equal(self.states, other.states)
            and np.array_equal(self.actions, other.actions)
            and np.array_equal(self.episode_ids, other.episode_ids)
        )


class DemoCollectionError(RuntimeError):
    pass


def collect_demonstrations(policy: Policy, env: DialogueEnv, n: int, rng: np.random.Generator,
                           max_attempts: int | None = None) -> tuple[DemoBuffer, int]:
    """Keep (s, a) pairs from the first ``n`` successful episodes; returns (buffer, attempts used)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    max_attempts = 100 * n if max_attempts is None else max_attempts
    states, actions, ids = [], [], []
    kept = 0
    attempts = 0
    while kept < n:
        if attempts >= max_attempts:
            raise DemoCollectionError(
                f"collected {kept}/{n} successful dialogues in {attempts} attempts; the agent is too weak"
            )
        attempts += 1
        ep = run_episode(env, policy, rng)
        if not ep.success:
            continue
        for t in ep.transitions:
            states.append(t.s)
            actions.append(t.a)
            ids.append(kept)
        kept += 1
    buf = DemoBuffer(np.stack(states), np.array(actions), np.array(ids), n_episodes=kept, capacity=len(actions))
    return buf, attempts


@dataclass
class AdversarialStats:
    actor: UpdateStats
    disc_loss: float
    mean_r_gan: float


def adversarial_update(
    actor: Actor,
    gan_critic: GanCritic,
    disc: Discriminator,
    episode: Sequence[Transition],
    demo_buffer: DemoBuffer,
    rng: np.random.Generator,
    gamma: float = 0.9,
    entropy_coef: float = 0.0,
    max_grad_norm: float = np.inf,
    trace: list | None = None,
) -> AdversarialStats:
    """Intrinsic-reward pass: demo sampling, actor + GAN critic update, discriminator update."""
    if demo_buffer is None or len(demo_buffer) == 0:
        raise ValueError("adversarial update needs a non-empty demo buffer")
    S, A, _, _, _ = stack_episode(episode)
    demo = demo_buffer.sample(len(A), rng)
    if trace is not None:
        trace.append("sample_demos")
    r_gan = intrinsic_reward_from_prob(disc.prob(S, A))
    stats = a2c_update(actor, gan_critic, episode, gamma=gamma, rewards=r_gan,
                       entropy_coef=entropy_coef, max_grad_norm=max_grad_norm)
    if trace is not None:
        trace.extend(["actor_gan", "gan_critic"])
    loss = disc_update(disc, (S, A), demo)
    if trace is not None:
        trace.append("discriminator")
    return AdversarialStats(stats, loss, float(np.mean(r_gan)))
