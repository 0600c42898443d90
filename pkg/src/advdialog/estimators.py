"""scikit-learn style wrappers around the trainers and the discriminator.

The policy estimators learn from the simulated user rather than from a data
matrix, so ``fit`` ignores ``X``; ``predict`` maps state vectors to greedy
action indices and ``score`` without data returns the greedy success rate.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .a2c import Actor, action_distribution
from .adversarial import Discriminator, disc_update
from .policies import RulePolicy
from .nn import sigmoid
from .trainer import ActorPolicy, TrainConfig, evaluate, make_env, run_agent


class _PolicyEstimator(BaseEstimator):
    agent = "a2c"

    def __init__(self, episodes=2000, seed=0, world_seed=7, eval_every=100, eval_episodes=500,
                 final_eval_episodes=1000, actor_lr=0.0005, critic_lr=0.005, hidden_size=80):
        self.episodes = episodes
        self.seed = seed
        self.world_seed = world_seed
        self.eval_every = eval_every
        self.eval_episodes = eval_episodes
        self.final_eval_episodes = final_eval_episodes
        self.actor_lr = actor_lr
        self.critic_lr = critic_lr
        self.hidden_size = hidden_size

    def _config(self) -> TrainConfig:
        fields = set(TrainConfig.field_names())
        return TrainConfig(**{k: v for k, v in self.get_params().items() if k in fields})

    def _fit_run(self, demo_buffer=None):
        config = self._config()
        env = make_env(config)
        run = run_agent(config, self.agent, env, demo_buffer)
        self.env_ = env
        self.config_ = config
        self.metrics_ = run.metrics
        self.final_ = run.final
        self.n_features_in_ = env.state_dim
        return run

    def fit(self, X=None, y=None):
        run = self._fit_run()
        self.actor_net_ = run.nets.get("actor")
        return self

    def _check_states(self, X) -> np.ndarray:
        check_is_fitted(self, "final_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def _actor(self) -> Actor:
        check_is_fitted(self, "final_")
        actor = Actor(self.n_features_in_, self.env_.n_actions, self.actor_net_.hidden_size, zero=True)
        actor.net = self.actor_net_
        return actor

    def predict_proba(self, X) -> np.ndarray:
        return action_distribution(self._actor(), self._check_states(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def policy(self):
        return ActorPolicy(self._actor(), greedy=True)

    def score(self, X=None, y=None, n_episodes=None, random_state=None) -> float:
        """Action accuracy against ``y``, or the greedy success fraction when ``X`` is None."""
        if X is not None:
            return float(np.mean(self.predict(X) == np.asarray(y)))
        check_is_fitted(self, "final_")
        if n_episodes is None and random_state is None:
            return self.final_.success_rate / 100.0
        rng = np.random.default_rng(self.seed if random_state is None else random_state)
        res = evaluate(self.policy(), self.env_, n_episodes or self.final_eval_episodes, rng)
        return res.success_rate / 100.0


class RuleAgent(_PolicyEstimator):
    """The hand-written baseline; ``fit`` only builds the world and evaluates it.

    It acts on the tracker rather than on state vectors, so it has no ``predict``.
    """

    agent = "rule"

    def fit(self, X=None, y=None):
        self._fit_run()
        self.actor_net_ = None
        return self

    def policy(self):
        check_is_fitted(self, "final_")
        return RulePolicy(self.env_.actions)

    def predict_proba(self, X):
        raise AttributeError("RuleAgent acts on dialogue state, not on state vectors")

    predict = predict_proba


class A2CAgent(_PolicyEstimator):
    """Imitation-pretrained advantage actor-critic on the extrinsic reward."""

    agent = "a2c"


class AdversarialA2CAgent(_PolicyEstimator):
    """A2C plus a discriminator critic trained against expert demonstrations.

    ``fit(demo_buffer=...)`` uses the given demonstrations; otherwise they are
    collected from the demo agent configured by ``n_demos``.
    """

    agent = "adv-a2c"

    def __init__(self, episodes=2000, seed=0, world_seed=7, eval_every=100, eval_episodes=500,
                 final_eval_episodes=1000, actor_lr=0.0005, critic_lr=0.005, hidden_size=80,
                 disc_lr=0.001, n_demos=50):
        super().__init__(episodes, seed, world_seed, eval_every, eval_episodes,
                         final_eval_episodes, actor_lr, critic_lr, hidden_size)
        self.disc_lr = disc_lr
        self.n_demos = n_demos

    def fit(self, X=None, y=None, demo_buffer=None):
        run = self._fit_run(demo_buffer)
        self.actor_net_ = run.nets["actor"]
        self.discriminator_net_ = run.nets["discriminator"]
        self.demos_ = run.demos
        return self


class DemoDiscriminator(ClassifierMixin, BaseEstimator):
    """Expert-vs-agent classifier over (state, action) pairs.

    Each row of ``X`` is a state vector followed by the action index in the
    last column; label 1 marks expert pairs. Training runs ``n_updates``
    full-batch cross-entropy steps.
    """

    def __init__(self, n_actions=63, hidden_size=80, lr=0.001, n_updates=500, clamp=1e-6, random_state=0):
        self.n_actions = n_actions
        self.hidden_size = hidden_size
        self.lr = lr
        self.n_updates = n_updates
        self.clamp = clamp
        self.random_state = random_state

    def _split(self, X):
        X = np.asarray(X, dtype=np.float64)
        S, A = X[:, :-1], X[:, -1]
        if np.any(A != np.round(A)):
            raise ValueError("the last column of X must hold integer action indices")
        return S, A.astype(np.int64)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = np.unique(y)
        if not np.array_equal(self.classes_, [0, 1]):
            raise ValueError("y must contain both labels 0 (agent) and 1 (expert)")
        S, A = self._split(X)
        self.n_features_in_ = X.shape[1]
        self.discriminator_ = Discriminator(S.shape[1], self.n_actions, self.hidden_size, lr=self.lr,
                                            clamp=self.clamp, rng=np.random.default_rng(self.random_state))
        sim, demo = y == 0, y == 1
        self.loss_curve_ = [disc_update(self.discriminator_, (S[sim], A[sim]), (S[demo], A[demo]))
                            for _ in range(self.n_updates)]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "discriminator_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return self.discriminator_.logit(*self._split(X))

    def predict_proba(self, X) -> np.ndarray:
        p = np.clip(sigmoid(self.decision_function(X)), self.clamp, 1.0 - self.clamp)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[(scores > 0).astype(int)]

