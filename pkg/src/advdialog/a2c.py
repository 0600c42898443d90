"""Advantage actor-critic: softmax policy, state-value critic, TD-error updates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .env import Transition
from .nn import HIDDEN_SIZE, DenseNet, RMSProp, clip_grads, log_softmax, softmax

ACTOR_LR = 0.0005
CRITIC_LR = 0.005


class Actor:
    def __init__(self, state_dim: int, n_actions: int, hidden_size: int = HIDDEN_SIZE,
                 lr: float = ACTOR_LR, rng: np.random.Generator | None = None, zero: bool = False):
        self.net = DenseNet(state_dim, n_actions, hidden_size, rng=rng, zero=zero)
        self.optimizer = RMSProp(lr)

    @property
    def n_actions(self) -> int:
        return self.net.output_dim

    def logits(self, s: np.ndarray) -> np.ndarray:
        return self.net(s)


class Critic:
    def __init__(self, state_dim: int, hidden_size: int = HIDDEN_SIZE, lr: float = CRITIC_LR,
                 rng: np.random.Generator | None = None, zero: bool = False):
        self.net = DenseNet(state_dim, 1, hidden_size, rng=rng, zero=zero)
        self.optimizer = RMSProp(lr)

    def value(self, s: np.ndarray) -> np.ndarray:
        """V(s) for a single state (scalar array) or a batch (shape (n,))."""
        return self.net(s)[..., 0]


def action_distribution(actor: Actor, s: np.ndarray) -> np.ndarray:
    return softmax(actor.logits(s))


def select_action(actor: Actor, s: np.ndarray, rng: np.random.Generator) -> tuple[int, float]:
    """Sample an action by inverse CDF on one uniform draw; returns (action, log prob)."""
    lp = log_softmax(actor.logits(s))
    cdf = np.cumsum(np.exp(lp))
    a = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    a = min(a, len(cdf) - 1)
    return a, float(lp[a])


def greedy_action(actor: Actor, s: np.ndarray) -> int:
    return int(np.argmax(actor.logits(s)))


def td_error(r, v_s, v_next, gamma: float, terminal) -> np.ndarray | float:
    """delta = r + gamma * V(s') * [not terminal] - V(s)."""
    return r + gamma * v_next * (1.0 - np.asarray(terminal, dtype=np.float64)) - v_s


@dataclass
class UpdateStats:
    mean_abs_delta: float
    entropy: float
    critic_loss: float


def stack_episode(episode: Sequence[Transition]):
    if not episode:
        raise ValueError("cannot update on an empty episode")
    S = np.stack([t.s for t in episode])
    S2 = np.stack([t.s_next for t in episode])
    A = np.array([t.a for t in episode], dtype=np.int64)
    R = np.array([t.r for t in episode], dtype=np.float64)
    T = np.array([t.terminal for t in episode], dtype=np.float64)
    return S, A, R, S2, T


def actor_gradients(actor: Actor, S: np.ndarray, A: np.ndarray, weights: np.ndarray,
                    entropy_coef: float = 0.0) -> tuple[dict[str, np.ndarray], float]:
    """Gradients of the surrogate loss -sum_t w_t log pi(a_t|s_t) - c * sum_t H(pi(.|s_t))."""
    logits, cache = actor.net.forward(S)
    lp = log_softmax(logits)
    p = np.exp(lp)
    g = p * weights[:, None]
    g[np.arange(len(A)), A] -= weights
    ent = -np.sum(p * lp, axis=1)
    if entropy_coef:
        g += entropy_coef * p * (lp + ent[:, None])
    return actor.net.backward(cache, g), float(ent.mean())


def a2c_update(
    actor: Actor,
    critic: Critic,
    episode: Sequence[Transition],
    gamma: float = 0.9,
    rewards: np.ndarray | None = None,
    entropy_coef: float = 0.0,
    max_grad_norm: float = np.inf,
) -> UpdateStats:
    """One per-episode update of actor and critic from summed transition gradients.

    ``rewards`` replaces the stored extrinsic rewards (the intrinsic stream
    passes discriminator rewards here).
    """
    S, A, R, S2, T = stack_episode(episode)
    if rewards is not None:
        R = np.asarray(rewards, dtype=np.float64)
        if R.shape != A.shape:
            raise ValueError("rewards must have one entry per transition")
    v_s, v_cache = critic.net.forward(S)
    v_next = critic.value(S2)
    delta = td_error(R, v_s[:, 0], v_next, gamma, T)

    a_grads, entropy = actor_gradients(actor, S, A, delta, entropy_coef)
    actor.optimizer.step(actor.net.params, clip_grads(a_grads, max_grad_norm))

    _critic_step(critic, v_cache, delta, max_grad_norm)
    return UpdateStats(float(np.mean(np.abs(delta))), entropy, float(0.5 * np.sum(delta * delta)))


def _critic_step(critic: Critic, cache, delta: np.ndarray, max_grad_norm: float) -> None:
    # semi-gradient of 0.5 * sum(delta^2): the bootstrapped target is held fixed
    c_grads = critic.net.backward(cache, -delta[:, None])
    critic.optimizer.step(critic.net.params, clip_grads(c_grads, max_grad_norm))


def critic_update(critic: Critic, episode: Sequence[Transition], gamma: float = 0.9,
                  rewards: np.ndarray | None = None, max_grad_norm: float = np.inf) -> np.ndarray:
    """Critic-only TD step (policy evaluation); returns the pre-step TD errors."""
    S, _, R, S2, T = stack_episode(episode)
    if rewards is not None:
        R = np.asarray(rewards, dtype=np.float64)
    v_s, cache = critic.net.forward(S)
    delta = td_error(R, v_s[:, 0], critic.value(S2), gamma, T)
    _critic_step(critic, cache, delta, max_grad_norm)
    return delta
