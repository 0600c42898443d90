import pytest

from advdialog import checkpoint, metrics
from advdialog.cli import FRAME_HINT, chat_session, main
from advdialog.config import dump_config
from advdialog.domain import DialogueAct
from advdialog.domain.frames import UserGoal
from advdialog.policies import ConstantPolicy, RulePolicy
from advdialog.trainer import TrainConfig

SMALL = TrainConfig(seed=1, episodes=20, eval_every=10, eval_episodes=10, final_eval_episodes=20,
                    pretrain_examples=300, n_demos=2, demo_agent_episodes=0)


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(dump_config(SMALL))
    return p


@pytest.fixture
def run_dir(tmp_path, monkeypatch):
    d = tmp_path / "runs"
    monkeypatch.setenv("ADVDIALOG_RUN_DIR", str(d))
    return d


def test_usage_errors_exit_two(capsys, small_cfg, tmp_path):
    assert main(["train", "--agent", "bogus"]) == 2
    assert "invalid choice" in capsys.readouterr().err
    assert main([]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("[run]\nepisodez = 4\n")
    assert main(["train", "--agent", "rule", "--config", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert main(["collect-demos", "--config", str(small_cfg), "-n", "0"]) == 2


def test_missing_checkpoint_exits_one(capsys, tmp_path):
    assert main(["evaluate", str(tmp_path / "nope.ckpt")]) == 1
    junk = tmp_path / "junk.ckpt"
    junk.write_bytes(b"garbage")
    assert main(["evaluate", str(junk)]) == 1
    assert "not an advdialog" in capsys.readouterr().err


def test_train_layout_and_byte_identical_rerun(run_dir, small_cfg, tmp_path, capsys):
    assert main(["train", "--agent", "a2c", "--config", str(small_cfg)]) == 0
    out = run_dir / "a2c-1"
    assert sorted(p.name for p in out.iterdir()) == ["ckpt", "metrics.csv"]
    assert capsys.readouterr().out.startswith("a2c seed=1 success_rate=")
    rows = metrics.read_csv(out / "metrics.csv")
    assert [r.episode for r in rows] == [0, 10, 20]
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert main(["train", "--agent", "a2c", "--config", str(small_cfg), "--out", str(tmp_path / "again")]) == 0
    again = {p.name: p.read_bytes() for p in (tmp_path / "again" / "a2c-1").iterdir()}
    assert again == first

    nets, _, meta = checkpoint.load(out / "ckpt")
    assert set(nets) == {"actor", "critic"} and meta["agent"] == "a2c" and meta["seed"] == 1

    capsys.readouterr()
    csv = tmp_path / "eval.csv"
    assert main(["evaluate", str(out / "ckpt"), "--episodes", "5", "--out", str(csv)]) == 0
    assert main(["evaluate", str(out / "ckpt"), "--episodes", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == lines[1]
    (row,) = metrics.read_csv(csv)
    assert row.episode == 5 and row.agent == "a2c"


def test_seed_override(run_dir, small_cfg):
    assert main(["train", "--agent", "rule", "--config", str(small_cfg), "--seed", "6"]) == 0
    assert (run_dir / "rule-6" / "ckpt").exists()


def test_collect_demos(run_dir, small_cfg, capsys):
    assert main(["collect-demos", "--config", str(small_cfg), "-n", "1"]) == 0
    assert "dialogues=1" in capsys.readouterr().out
    _, demos, meta = checkpoint.load(run_dir / "demos.ckpt")
    assert demos["demos"].n_episodes == 1 and meta["attempts"] >= 1

    assert main(["train", "--agent", "rule", "--config", str(small_cfg)]) == 0
    out = run_dir / "from-rule.ckpt"
    assert main(["collect-demos", str(run_dir / "rule-1" / "ckpt"), "-n", "1", "--out", str(out)]) == 0
    assert checkpoint.load(out)[1]["demos"].n_episodes == 1


def test_train_adversarial_with_demo_file(run_dir, small_cfg):
    assert main(["collect-demos", "--config", str(small_cfg), "-n", "2"]) == 0
    assert main(["train", "--agent", "adv-a2c", "--config", str(small_cfg),
                 "--demos", str(run_dir / "demos.ckpt")]) == 0
    nets, demos, _ = checkpoint.load(run_dir / "adv-a2c-1" / "ckpt")
    assert set(nets) == {"actor", "critic", "gan_critic", "discriminator"}
    assert demos["demos"].n_episodes == 2


def test_rule_benchmark_table(run_dir, small_cfg, capsys):
    assert main(["benchmark", "--agent", "rule", "--seeds", "3", "--config", str(small_cfg)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["agent", "n", "success_rate", "avg_reward", "avg_turns"]
    assert out[1].startswith("rule") and out[1].split()[1] == "1"
    bench = run_dir / "benchmark"
    assert sorted(p.name for p in bench.iterdir()) == ["curves.csv", "final.csv", "summary.txt"]
    (final,) = metrics.read_csv(bench / "final.csv")
    assert final.seed == 3 and final.episode == 20


def test_gen_world(tmp_path, small_cfg):
    out = tmp_path / "world"
    assert main(["gen-world", "--config", str(small_cfg), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["goals.txt", "kb.tsv", "movie.ontology"]


# --- chat ------------------------------------------------------------------------

def scripted(lines):
    it = iter(lines)

    def read(prompt):
        try:
            return next(it)
        except StopIteration:
            raise EOFError from None

    return read


def test_chat_reprompts_and_aborts(env):
    goal = UserGoal({"moviename": "zootopia"}, frozenset({"ticket"}))
    said = []
    outcome, _ = chat_session(RulePolicy(env.actions), env, goal,
                              scripted(["gibberish(", "request(ticket, moviename=zootopia)", "deny()"]), said.append)
    assert said[0].startswith("goal: constraints [moviename=zootopia]")
    assert any(FRAME_HINT in s for s in said)
    assert sum(s.startswith("agent> ") for s in said) == 2
    assert said[-1] == "FAILURE (aborted)"


def test_chat_timeout(env):
    goal = UserGoal({"moviename": "zootopia"}, frozenset({"ticket"}))
    greeting = env.actions.index(DialogueAct.GREETING)
    said = []
    chat_session(ConstantPolicy(greeting), env, goal, scripted(["greeting()"] * 60), said.append)
    assert said[-1] == "FAILURE (timeout) reward=-80 turns=40"


def test_chat_eof_before_opening(env):
    said = []
    chat_session(RulePolicy(env.actions), env, UserGoal({}, frozenset({"ticket"})), scripted([]), said.append)
    assert said[-1] == "FAILURE (aborted)"
