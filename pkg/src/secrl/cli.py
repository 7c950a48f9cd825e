"""Command-line entry point: train, eval, compare, gen-testcase.

Configuration precedence is flags > config file > defaults; the effective
configuration is echoed into the output directory of every run.  Errors
exit nonzero after printing a machine-readable JSON record to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import ConfigurationError, EnvironmentFault, TrainingFault
from .checkpoint import load_agent, load_trainer_into, save_agent, save_trainer
from .config import RunConfig, parse_config, parse_override_strings
from .ddpg.train import Trainer
from .evaluation.experiment import (
    AgentPolicy,
    build_training_env,
    evaluate_policy,
    run_experiment,
    write_learning_curve,
)
from .evaluation.testcases import (
    GRID_LOAD_PROFILE,
    GRID_STEADYSTATE,
    MOTOR_REFERENCE_PROFILE,
    MOTOR_STEADYSTATE,
    TestCase,
    gen_grid_testcase,
    gen_motor_profile,
    gen_steadystate_testcase,
)
from .sec import actor_output_width

log = logging.getLogger("secrl")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="flat YAML config file")
    p.add_argument("--seed", type=int, default=None, help="run seed (overrides config)")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
        help="config override, repeatable (e.g. --override agent.gamma=0.9)",
    )
    p.add_argument("-v", "--verbose", action="store_true")


def _load_config(args) -> tuple[RunConfig, int, Path]:
    overrides = parse_override_strings(args.override)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    cfg = parse_config(args.config, overrides)
    out_dir = Path(cfg["out_dir"])
    return cfg, cfg["seed"], out_dir


def cmd_train(args) -> int:
    cfg, seed, out_dir = _load_config(args)
    variant = cfg["agent.variant"]
    if variant not in ("ddpg", "sec-ddpg"):
        raise ConfigurationError(f"agent.variant must be ddpg or sec-ddpg for train, got {variant!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.echo(out_dir / "effective_config.yaml")

    wrapped = build_training_env(cfg, variant, seed)
    width = actor_output_width(wrapped.env.action_dim, use_sec=(variant == "sec-ddpg"))
    agent_cfg = cfg.agent_config(wrapped.obs_dim, width)

    ckpt_path = out_dir / "checkpoint.npz"

    def checkpoint_fn(trainer):
        save_trainer(ckpt_path, trainer, config_echo=json.loads(cfg.to_json()))
        log.info("checkpoint written at step %d", trainer.step)

    settings = cfg.train_settings(checkpoint_fn=checkpoint_fn)
    trainer = Trainer(wrapped, agent_cfg, settings, seed)
    if args.resume is not None:
        load_trainer_into(args.resume, trainer)
        log.info("resumed from %s at step %d", args.resume, trainer.step)
    try:
        result = trainer.run(until_step=args.until_step)
    except KeyboardInterrupt:
        # Safe interruption: freeze the full training state for --resume.
        save_trainer(ckpt_path, trainer, config_echo=json.loads(cfg.to_json()))
        (out_dir / "events.json").write_text(json.dumps(trainer.events, indent=1))
        print(json.dumps({"interrupted_at_step": trainer.step,
                          "resume_from": str(ckpt_path)}), file=sys.stderr)
        return 130
    except Exception:
        # Keep the event log of the aborted run next to its artifacts.
        (out_dir / "events.json").write_text(json.dumps(trainer.events, indent=1))
        raise

    save_trainer(ckpt_path, trainer, config_echo=json.loads(cfg.to_json()))
    save_agent(out_dir / "agent.npz", result.agent, extra={
        "variant": variant, "seed": seed, "env_kind": cfg["env.kind"],
        "sec": {"t_i": cfg["sec.t_i"], "t_aw": cfg["sec.t_aw"]},
    })
    write_learning_curve(out_dir / "learning_curve.csv", result.curve)
    (out_dir / "events.json").write_text(json.dumps(result.events, indent=1))
    print(f"trained {variant} for {trainer.step} steps "
          f"({len(result.curve)} episodes); artifacts in {out_dir}")
    return 0


def cmd_eval(args) -> int:
    cfg, seed, out_dir = _load_config(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.echo(out_dir / "effective_config.yaml")
    agent, extra = load_agent(args.checkpoint)
    env_kind = extra.get("env_kind", cfg["env.kind"])
    if env_kind != cfg["env.kind"]:
        log.warning("checkpoint env %s overrides config env %s", env_kind, cfg["env.kind"])
        cfg.values["env.kind"] = env_kind
    m = 3 if env_kind == "grid" else 2
    expected_obs = (18 + 3 * cfg["env.past_measurements"]) if env_kind == "grid" \
        else (10 + 2 * cfg["env.past_measurements"])
    if agent.actor.layer_sizes[0] != expected_obs:
        raise ConfigurationError(
            f"checkpoint actor expects {agent.actor.layer_sizes[0]} features, "
            f"environment provides {expected_obs}"
        )
    sec_info = extra.get("sec", {})
    policy = AgentPolicy(agent.actor, m=m,
                         t_i=sec_info.get("t_i", cfg["sec.t_i"]),
                         t_aw=sec_info.get("t_aw", cfg["sec.t_aw"]))
    cases = [TestCase.load(p) for p in args.testcase]
    rows = evaluate_policy(cfg, policy, cases, run_seed=seed,
                           out_dir=out_dir, save_trajectories=True)
    with open(out_dir / "report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "seed", "test_case_id", "metric_name", "value"])
        for row in rows:
            writer.writerow([extra.get("variant", "agent"), seed,
                             row["test_case_id"], row["metric_name"], row["value"]])
    headline = {r["metric_name"]: r["value"] for r in rows
                if r["metric_name"] in ("mean_reward", "steady_state_mean")}
    print(json.dumps({"checkpoint": str(args.checkpoint), "metrics": headline}))
    return 0


def cmd_compare(args) -> int:
    cfg, _, out_dir = _load_config(args)
    summary = run_experiment(cfg, out_dir)
    ok = [r for r in summary["runs"] if r["status"] == "ok"]
    print(f"compare finished: {len(ok)}/{len(summary['runs'])} runs ok; "
          f"summary in {out_dir / 'summary.json'}")
    return 0 if ok else 1


def cmd_gen_testcase(args) -> int:
    cfg, seed, out_dir = _load_config(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    segments = cfg["experiment.segments"]
    seg_len = cfg["experiment.segment_length"]
    radius = cfg["env.motor.reference_radius"] * cfg["env.motor.i_lim"]
    if args.kind == GRID_LOAD_PROFILE:
        case = gen_grid_testcase(seed, args.steps or cfg["experiment.grid_transient_steps"])
    elif args.kind == GRID_STEADYSTATE:
        case = gen_steadystate_testcase("grid", seed, segments, seg_len)
    elif args.kind == MOTOR_REFERENCE_PROFILE:
        case = gen_motor_profile(seed, args.steps or cfg["experiment.motor_profile_steps"],
                                 seg_len, radius)
    elif args.kind == MOTOR_STEADYSTATE:
        case = gen_steadystate_testcase("motor", seed, segments, seg_len, radius)
    else:
        raise ConfigurationError(f"unknown test case kind {args.kind!r}")
    path = out_dir / f"testcase-{case.case_id}.npz"
    case.save(path)
    print(str(path))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secrl",
        description="Train and evaluate steady-state-error-compensated control agents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train one agent and write checkpoints")
    _add_common(p_train)
    p_train.add_argument("--resume", type=Path, default=None, help="trainer checkpoint to resume")
    p_train.add_argument("--until-step", type=int, default=None,
                         help="pause at this step, leaving a resumable checkpoint")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on frozen test cases")
    _add_common(p_eval)
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--testcase", type=Path, action="append", required=True,
                        help="test case file from gen-testcase, repeatable")
    p_eval.set_defaults(fn=cmd_eval)

    p_cmp = sub.add_parser("compare", help="train/evaluate variants x seeds, aggregate")
    _add_common(p_cmp)
    p_cmp.set_defaults(fn=cmd_compare)

    p_gen = sub.add_parser("gen-testcase", help="generate and freeze a test case")
    _add_common(p_gen)
    p_gen.add_argument("--kind", required=True, choices=[
        GRID_LOAD_PROFILE, GRID_STEADYSTATE, MOTOR_REFERENCE_PROFILE, MOTOR_STEADYSTATE,
    ])
    p_gen.add_argument("--steps", type=int, default=None)
    p_gen.set_defaults(fn=cmd_gen_testcase)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(json.dumps({"error": "configuration", "message": str(exc)}), file=sys.stderr)
        return 2
    except (TrainingFault, EnvironmentFault) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - last resort
        print(json.dumps({"error": "internal", "message": f"{type(exc).__name__}: {exc}"}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
