"""``advdialog`` command line: world generation, training, evaluation, demos, benchmarks and chat."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import checkpoint, metrics
from .a2c import Actor
from .adversarial import DemoBuffer, DemoCollectionError, collect_demonstrations
from .config import ConfigError, dump_config, load_config, parse_config
from .domain.frames import USER, parse_frame
from .domain.kb import save_goals, save_kb
from .domain.ontology import dump_ontology
from .policies import RulePolicy
from .simulator import Outcome
from .trainer import (
    AGENTS,
    ActorPolicy,
    TrainConfig,
    demos_for,
    evaluate,
    make_env,
    run_agent,
)

log = logging.getLogger("advdialog")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
RUN_DIR_ENV = "ADVDIALOG_RUN_DIR"
FRAME_HINT = "syntax: act(slot, slot=value, ...), e.g. request(ticket, moviename=zootopia) or deny()"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def run_root(out: str | None = None) -> Path:
    return Path(out or os.environ.get(RUN_DIR_ENV) or "runs")


def _config(args) -> TrainConfig:
    return load_config(getattr(args, "config", None), seed=getattr(args, "seed", None),
                       episodes=getattr(args, "episodes", None))


def _row_line(row: metrics.MetricsRow) -> str:
    return (f"{row.agent} seed={row.seed} success_rate={row.success_rate:.2f} "
            f"avg_reward={row.avg_reward:.3f} avg_turns={row.avg_turns:.3f}")


def _load_demos(path: str | Path) -> DemoBuffer:
    _, demos, _ = checkpoint.load(path)
    if "demos" not in demos:
        raise ConfigError(f"{path}: no demo buffer named 'demos'")
    return demos["demos"]


def _policy_from_checkpoint(path: str | Path):
    nets, _, meta = checkpoint.load(path)
    config = parse_config(meta.get("config", ""), f"{path}:meta")
    env = make_env(config)
    agent = meta.get("agent", "rule")
    if agent == "rule":
        return RulePolicy(env.actions), env, config, agent
    if "actor" not in nets:
        raise checkpoint.CheckpointError(f"{path}: no actor network")
    actor = Actor(env.state_dim, env.n_actions, config.hidden_size, zero=True)
    if actor.net.shape != nets["actor"].shape:
        raise checkpoint.CheckpointError(f"{path}: actor shape does not match the configured world")
    actor.net = nets["actor"]
    return ActorPolicy(actor, greedy=True), env, config, agent


# --- subcommands ----------------------------------------------------------------

def cmd_gen_world(args) -> int:
    config = _config(args)
    out = Path(args.out) if args.out else run_root() / f"world-{config.world_seed}"
    out.mkdir(parents=True, exist_ok=True)
    env = make_env(config)
    (out / "movie.ontology").write_text(dump_ontology(env.ontology), encoding="utf-8")
    save_kb(env.kb, out / "kb.tsv")
    save_goals(env.goals, out / "goals.txt")
    print(f"world seed={config.world_seed} rows={len(env.kb)} goals={len(env.goals)} -> {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _config(args)
    demos = _load_demos(args.demos) if args.demos else None
    run = run_agent(config, args.agent, demo_buffer=demos)
    out = run_root(args.out) / f"{args.agent}-{config.seed}"
    out.mkdir(parents=True, exist_ok=True)
    meta = {"agent": args.agent, "seed": config.seed, "config": dump_config(config),
            "final": metrics.dumps([run.final])}
    if run.pretrain_accuracy is not None:
        meta["pretrain_accuracy"] = run.pretrain_accuracy
    checkpoint.save(out / "ckpt", run.nets, {"demos": run.demos} if run.demos is not None else None, meta)
    metrics.write_csv(run.metrics, out / "metrics.csv")
    print(_row_line(run.final))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    policy, env, config, agent = _policy_from_checkpoint(args.checkpoint)
    seed = config.seed if args.seed is None else args.seed
    n = args.episodes or config.final_eval_episodes
    res = evaluate(policy, env, n, np.random.default_rng(np.random.SeedSequence([seed, 0xE7])))
    row = metrics.MetricsRow(n, res.success_rate, res.avg_reward, res.avg_turns, seed, agent)
    if args.out:
        metrics.write_csv([row], args.out)
    print(_row_line(row))
    return EXIT_OK


def cmd_collect_demos(args) -> int:
    if args.n < 1:
        raise UsageError("collect-demos: -n must be >= 1")
    if args.checkpoint:
        policy, env, config, _ = _policy_from_checkpoint(args.checkpoint)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        rng = np.random.default_rng(np.random.SeedSequence([config.demo_seed, 0xDE]))
        buf, attempts = collect_demonstrations(policy, env, args.n, rng)
    else:
        config = _config(args)
        buf, attempts = demos_for(config, n=args.n)
    out = Path(args.out) if args.out else run_root() / "demos.ckpt"
    out.parent.mkdir(parents=True, exist_ok=True)
    checkpoint.save(out, demos={"demos": buf}, meta={"config": dump_config(config), "attempts": attempts})
    print(f"demos dialogues={buf.n_episodes} pairs={len(buf)} attempts={attempts} -> {out}")
    return EXIT_OK


def _bench_cell(config: TrainConfig, agent: str, demos: DemoBuffer | None):
    try:
        run = run_agent(config, agent, demo_buffer=demos)
        return agent, config.seed, run.metrics, run.final, None
    except Exception as exc:  # reported per cell, the rest still run
        return agent, config.seed, None, None, f"{type(exc).__name__}: {exc}"


def summary_table(finals: Sequence[metrics.MetricsRow]) -> str:
    lines = [f"{'agent':<8} {'n':>2} {'success_rate':>16} {'avg_reward':>16} {'avg_turns':>14}"]
    for agent in AGENTS:
        rows = [r for r in finals if r.agent == agent]
        if not rows:
            continue
        cols = []
        for key, w in (("success_rate", 16), ("avg_reward", 16), ("avg_turns", 14)):
            v = np.array([getattr(r, key) for r in rows])
            cols.append(f"{v.mean():.2f} ± {v.std():.2f}".rjust(w))
        lines.append(f"{agent:<8} {len(rows):>2} " + " ".join(cols))
    return "\n".join(lines)


def cmd_benchmark(args) -> int:
    config = _config(args)
    seeds = tuple(args.seeds) if args.seeds else ((config.seed,) if args.seed is not None else config.seeds)
    agents = tuple(args.agent) if args.agent else AGENTS
    demos = None
    if "adv-a2c" in agents:
        demos = _load_demos(args.demos) if args.demos else demos_for(config)[0]
    cells = [(config.with_seed(s), a, demos if a == "adv-a2c" else None) for a in agents for s in seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_cell, *zip(*cells)))
    else:
        results = [_bench_cell(*c) for c in cells]

    curves, finals, failed = [], [], 0
    for agent, seed, rows, final, err in results:
        if err is not None:
            failed += 1
            print(f"cell {agent} seed={seed} FAILED: {err}", file=sys.stderr)
            continue
        curves.extend(rows)
        finals.append(final)
    out = run_root(args.out) / "benchmark"
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_csv(curves, out / "curves.csv")
    metrics.write_csv(finals, out / "final.csv")
    table = summary_table(finals)
    (out / "summary.txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return EXIT_RUNTIME if failed else EXIT_OK


def chat_session(policy, env, goal, read: Callable[[str], str], write: Callable[[str], None]) -> tuple[Outcome, float]:
    """Drive one dialogue where the human types the user's frames."""

    def ask(prompt: str):
        while True:
            try:
                text = read(prompt)
            except EOFError:
                return None
            try:
                return parse_frame(text, speaker=USER)
            except ValueError as exc:
                write(f"  could not parse: {exc}\n  {FRAME_HINT}")

    write(f"goal: {goal.format()}")
    opening = ask("user> ")
    if opening is None:
        write("FAILURE (aborted)")
        return Outcome.FAILURE, 0.0
    rng = np.random.default_rng(0)
    s = env.reset(rng, goal, opening=opening)
    total, aborted = 0.0, False
    while True:
        a = policy(s, env.tracker, rng)
        frame = env.tracker.instantiate(env.actions[a])
        write(f"agent> {frame.format()}")

        def respond(_agent_frame):
            nonlocal aborted
            reply = ask("user> ")
            if reply is None:
                aborted = True
                return parse_frame("closing()", speaker=USER)
            return reply

        s, r, done, outcome, _ = env.step_frame(frame, respond)
        total += r
        if aborted:
            write("FAILURE (aborted)")
            return Outcome.FAILURE, total
        if done:
            break
    if outcome == Outcome.SUCCESS:
        verdict = "SUCCESS"
    elif env.turn > env.max_turns:
        verdict = "FAILURE (timeout)"
    else:
        verdict = "FAILURE"
    write(f"{verdict} reward={total:g} turns={env.turn - 1}")
    return outcome, total


def cmd_chat(args) -> int:
    policy, env, config, agent = _policy_from_checkpoint(args.checkpoint)
    seed = config.seed if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    goal = env.goals[int(rng.integers(len(env.goals)))]
    print(f"chatting with {agent}; {FRAME_HINT}")
    chat_session(policy, env, goal, input, print)
    return EXIT_OK


# --- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration file (INI)")
    common.add_argument("--seed", type=int)
    common.add_argument("--episodes", type=int)
    common.add_argument("--out", help="output path (default: $ADVDIALOG_RUN_DIR or ./runs)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="advdialog", description="Adversarial advantage actor-critic dialogue policies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("gen-world", parents=[common], help="write the ontology, KB and goal corpus")

    t = sub.add_parser("train", parents=[common], help="train one agent on one seed")
    t.add_argument("--agent", required=True, choices=AGENTS)
    t.add_argument("--demos", help="demo buffer file for adv-a2c (default: collect from the demo agent)")

    e = sub.add_parser("evaluate", parents=[common], help="greedy evaluation of a checkpoint")
    e.add_argument("checkpoint")

    c = sub.add_parser("collect-demos", parents=[common], help="collect successful dialogues as demos")
    c.add_argument("checkpoint", nargs="?", help="agent checkpoint (default: train the demo agent)")
    c.add_argument("-n", type=int, default=50, help="successful dialogues to keep (default 50)")

    b = sub.add_parser("benchmark", parents=[common], help="all agents over all seeds")
    b.add_argument("--agent", action="append", choices=AGENTS, help="repeatable; default all")
    b.add_argument("--seeds", type=int, nargs="+", help="default: the config's seeds")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--demos")

    h = sub.add_parser("chat", parents=[common], help="play the user against a checkpoint")
    h.add_argument("checkpoint")
    return p


COMMANDS = {
    "gen-world": cmd_gen_world,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "collect-demos": cmd_collect_demos,
    "benchmark": cmd_benchmark,
    "chat": cmd_chat,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"advdialog {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DemoCollectionError, checkpoint.CheckpointError, OSError, ValueError, RuntimeError) as exc:
        print(f"advdialog {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
