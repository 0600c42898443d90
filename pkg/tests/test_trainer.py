import dataclasses

import numpy as np
import pytest

from advdialog.adversarial import DemoBuffer, collect_demonstrations
from advdialog.domain import DialogueAct, DialogueTracker, SemanticFrame
from advdialog.domain.frames import USER
from advdialog.domain.ontology import TICKET
from advdialog.env import DialogueEnv
from advdialog.policies import ConstantPolicy, RulePolicy, rule_policy
from advdialog.trainer import (
    TrainConfig,
    build_learners,
    evaluate,
    pretrain_actor,
    pretrained_actor,
    run_agent,
    streams,
    train_a2c,
    train_adversarial_a2c,
)
from reduction_check import frozen_reduction_mismatches

SMALL = TrainConfig(seed=3, episodes=20, eval_every=10, eval_episodes=20, final_eval_episodes=20,
                    pretrain_examples=300, n_demos=3, demo_agent_episodes=0)


@pytest.fixture(scope="module")
def small_env(ontology, world):
    kb, goals = world
    return DialogueEnv(ontology, kb, goals, SMALL.reward)


@pytest.fixture(scope="module")
def demos(small_env):
    buf, _ = collect_demonstrations(RulePolicy(small_env.actions), small_env, 3, np.random.default_rng(0))
    return buf


@pytest.fixture(scope="module")
def pretrained(small_env):
    return pretrained_actor(SMALL, small_env)


def _tracker(ontology, world):
    return DialogueTracker(ontology, world[0])


def test_rule_policy_examples(ontology, world, env):
    actions = env.actions
    tr = _tracker(ontology, world)
    assert actions[rule_policy(tr)].act == DialogueAct.REQUEST and actions[rule_policy(tr)].slot == "moviename"

    row = world[0].row(0)
    filled = {s: row[s] for s in ("moviename", "date", "starttime", "city", "theater", "numberofpeople")}
    tr.update_user(SemanticFrame(DialogueAct.REQUEST, filled, {"price"}, USER))
    a = actions[rule_policy(tr)]
    assert (a.act, a.slot) == (DialogueAct.INFORM, "price")

    tr.update_agent(tr.instantiate(a))
    a = actions[rule_policy(tr)]
    assert (a.act, a.slot) == (DialogueAct.INFORM, TICKET)
    tr.update_agent(tr.instantiate(a))
    a = actions[rule_policy(tr)]
    assert (a.act, a.slot) == (DialogueAct.INFORM, "taskcomplete")


def test_config_invariants():
    with pytest.raises(ValueError):
        TrainConfig(episodes=10, eval_every=20)
    with pytest.raises(ValueError):
        TrainConfig(seeds=())
    with pytest.raises(ValueError):
        TrainConfig(alternation="per-phase")
    assert TrainConfig(episodes=0).episodes == 0


def test_pretraining_errors_and_determinism(small_env, pretrained):
    rngs = streams(SMALL.seed)
    actor, _ = build_learners(SMALL, small_env, rngs)
    with pytest.raises(ValueError):
        pretrain_actor(actor, small_env, 0, rngs["pretrain"])
    again, acc = pretrained_actor(SMALL, small_env)
    assert again.net.equals(pretrained[0].net) and acc == pretrained[1]
    assert acc >= SMALL.pretrain_target_accuracy


@pytest.mark.parametrize("seed", range(5))
def test_pretrained_actor_tracks_rule_agent(env, seed):
    # needs a tighter imitation target than the training default; see the decisions ledger
    config = TrainConfig(seed=seed, pretrain_target_accuracy=0.95)
    actor, acc = pretrained_actor(config, env)
    assert acc >= 0.95
    rule = evaluate(RulePolicy(env.actions), env, 500, np.random.default_rng(1))
    learned = evaluate(actor, env, 500, np.random.default_rng(1))
    assert abs(learned.success_rate - rule.success_rate) <= 10


def test_evaluate_timeout_policy(env):
    greeting = env.actions.index(DialogueAct.GREETING)
    res = evaluate(ConstantPolicy(greeting), env, 5, np.random.default_rng(0))
    assert res.success_rate == 0.0 and res.avg_turns == 40.0
    # 39 turns at -1 plus a final -1 - 40
    assert res.avg_reward == -80.0
    with pytest.raises(ValueError):
        evaluate(ConstantPolicy(greeting), env, 0, np.random.default_rng(0))


def test_rule_evaluation_is_deterministic(env):
    a = evaluate(RulePolicy(env.actions), env, 50, np.random.default_rng(8))
    b = evaluate(RulePolicy(env.actions), env, 50, np.random.default_rng(8))
    assert (a.success_rate, a.avg_reward, a.avg_turns) == (b.success_rate, b.avg_reward, b.avg_turns)


def test_metric_identity_per_episode(env):
    res = evaluate(RulePolicy(env.actions), env, 100, np.random.default_rng(2), keep_episodes=True)
    for ep in res.episodes:
        assert ep.total_reward == -ep.turns + 80 * ep.success - 40 * (1 - ep.success)


def test_budget_zero_and_cadence(small_env, pretrained):
    zero = train_a2c(dataclasses.replace(SMALL, episodes=0), small_env, pretrained=pretrained)
    assert [r.episode for r in zero.metrics] == [0]
    res = train_a2c(SMALL, small_env, pretrained=pretrained)
    assert [r.episode for r in res.metrics] == [0, 10, 20]
    assert res.actor.net.all_finite()


def test_training_is_deterministic(small_env, demos):
    a = train_adversarial_a2c(SMALL, demos, small_env)
    b = train_adversarial_a2c(SMALL, demos, small_env)
    assert a.metrics == b.metrics
    assert a.actor.net.equals(b.actor.net) and a.discriminator.net.equals(b.discriminator.net)


def test_update_order_per_episode(small_env, demos, pretrained):
    trace = []
    train_adversarial_a2c(dataclasses.replace(SMALL, episodes=3, eval_every=3), demos, small_env,
                          pretrained=pretrained, trace=trace)
    one = ["rollout", "actor", "critic", "sample_demos", "actor_gan", "gan_critic", "discriminator"]
    assert trace == one * 3


def test_empty_demo_buffer_is_rejected(small_env):
    empty = DemoBuffer(np.zeros((0, small_env.state_dim)), [], [], 0)
    with pytest.raises(ValueError, match="demo buffer"):
        train_adversarial_a2c(SMALL, empty, small_env)


def test_ablation_matches_plain_a2c(small_env, demos, pretrained):
    plain = train_a2c(SMALL, small_env, pretrained=pretrained)
    ablated = train_adversarial_a2c(SMALL, demos, small_env, ablate=True, pretrained=pretrained)
    assert [dataclasses.replace(r, agent="a2c") for r in ablated.metrics] == plain.metrics
    assert ablated.actor.net.equals(plain.actor.net) and ablated.critic.net.equals(plain.critic.net)


def test_frozen_discriminator_reduces_to_constant_reward(small_env, demos, pretrained):
    assert frozen_reduction_mismatches(SMALL, small_env, demos, pretrained) == 0


def test_run_agent_rule_and_unknown(small_env):
    run = run_agent(SMALL, "rule", small_env)
    assert [r.episode for r in run.metrics] == [0, 10, 20]
    assert len({r.success_rate for r in run.metrics}) == 1
    assert run.final.agent == "rule" and run.nets == {}
    with pytest.raises(ValueError, match="unknown agent"):
        run_agent(SMALL, "bbq", small_env)
