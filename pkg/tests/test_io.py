import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from advdialog import checkpoint, metrics
from advdialog.adversarial import DemoBuffer
from advdialog.config import ConfigError, dump_config, load_config, parse_config
from advdialog.metrics import MetricsRow
from advdialog.nn import DenseNet
from advdialog.trainer import TrainConfig


def _nets():
    rng = np.random.default_rng(0)
    return {"actor": DenseNet(7, 4, 5, rng=rng), "critic": DenseNet(7, 1, 5, rng=rng)}


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    nets = _nets()
    nets["actor"].params["b2"][:] = [np.nextafter(0, 1), -0.0, 1e308, np.pi]
    demo = DemoBuffer(np.random.default_rng(1).normal(size=(6, 7)), [0, 1, 2, 3, 0, 1], [0, 0, 0, 1, 1, 1], 2)
    meta = {"agent": "a2c", "seed": 4}
    checkpoint.save(tmp_path / "c", nets, {"demos": demo}, meta)
    raw = (tmp_path / "c").read_bytes()
    assert raw.startswith(b"advdialog-ckpt v1\n")
    nets2, demos2, meta2 = checkpoint.load(tmp_path / "c")
    assert meta2 == meta
    for k in nets:
        assert nets2[k].equals(nets[k])
        for name in ("W1", "b1", "W2", "b2"):
            assert nets2[k].params[name].tobytes() == nets[k].params[name].tobytes()
    assert demos2["demos"].equals(demo)
    assert checkpoint.dumps(nets2, demos2, meta2) == raw


def test_checkpoint_rejects_bad_input():
    good = checkpoint.dumps(_nets())
    with pytest.raises(checkpoint.CheckpointError, match="not an advdialog"):
        checkpoint.loads(b"hello")
    with pytest.raises(checkpoint.CheckpointError, match="truncated"):
        checkpoint.loads(good[:60])
    with pytest.raises(checkpoint.CheckpointError, match="unknown record"):
        checkpoint.loads(b"advdialog-ckpt v1\nblob 3\n")
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.dumps({"bad name": DenseNet(1, 1, 1)})


def test_config_parsing(tmp_path):
    text = """
[run]
episodes = 300
seeds = 1, 2 3
[optim]
actor_lr = 0.01   # inline comment
success_bonus = none
"""
    cfg = parse_config(text)
    assert cfg.episodes == 300 and cfg.seeds == (1, 2, 3) and cfg.actor_lr == 0.01
    assert cfg.success_bonus is None
    assert parse_config(text, seed=9).seed == 9
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("[run]\nepisodez = 3\n")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("[run]\nepisodes = many\n")
    with pytest.raises(ConfigError, match="eval_every"):
        parse_config("[run]\nepisodes = 10\neval_every = 50\n")
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        parse_config("not ini at all")


def test_config_round_trip(tmp_path):
    cfg = TrainConfig(seed=5, episodes=50, eval_every=25, success_bonus=12.5, seeds=(3, 4))
    p = tmp_path / "run.cfg"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg
    assert load_config(None) == TrainConfig()


row_strategy = st.builds(
    MetricsRow,
    st.integers(0, 10**6),
    st.floats(0, 100),
    st.floats(-1e6, 1e6),
    st.floats(1, 40),
    st.integers(0, 2**31),
    st.sampled_from(["rule", "a2c", "adv-a2c"]),
)


@settings(max_examples=50)
@given(st.lists(row_strategy, max_size=8))
def test_metrics_csv_round_trip(rows):
    text = metrics.dumps(rows)
    assert text.splitlines()[0] == "episode,success_rate,avg_reward,avg_turns,seed,agent"
    assert metrics.loads(text) == rows


def test_metrics_append_and_auc(tmp_path):
    rows = [MetricsRow(0, 0.0, 0, 5, 1, "a2c"), MetricsRow(100, 50.0, 0, 5, 1, "a2c")]
    p = tmp_path / "m.csv"
    metrics.append_csv(rows[:1], p)
    metrics.append_csv(rows[1:], p)
    assert metrics.read_csv(p) == rows
    assert metrics.area_under_curve(rows) == 2500.0
    assert metrics.area_under_curve(rows[:1]) == 0.0
    with pytest.raises(ValueError):
        metrics.loads("a,b\n1,2\n")
