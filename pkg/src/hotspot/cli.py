"""Command line entry point: ``hotspot <command> ...``.

The optional ``--config`` file is JSON with any of the sections
``"scenario"`` (ScenarioConfig fields, nested ``plume``/``prior``/``enkf``),
``"train"`` (TrainConfig fields) and ``"eval"`` (EvalConfig fields).
Command-line flags override the file.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from hotspot.environment import EpisodeRecord, ScenarioConfig
from hotspot.errors import ConfigError, ContractViolation, DomainError, ForwardModelError
from hotspot.harness import EvalConfig, dump_field, dump_posterior, evaluate, parse_start, postprocess_curve
from hotspot.qlearning import TrainConfig, default_grid_path, greedy_rollout, load_policy, load_curve, save_curve, train
from hotspot.scoring import RewardKind

log = logging.getLogger("hotspot")


def _load_config(path):
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def _scenario(conf):
    return ScenarioConfig.from_dict(conf.get("scenario", {}))


def _policy(source, scenario):
    if source == "grid-path":
        return default_grid_path(scenario)
    if not Path(source).exists():
        raise ConfigError(f"policy file not found: {source}")
    return load_policy(source, scenario)


def cmd_train(args):
    conf = _load_config(args.config)
    scenario = _scenario(conf)
    tc = dict(conf.get("train", {}))
    for key, val in (("reward_kind", args.reward), ("episodes", args.episodes), ("seed", args.seed),
                     ("checkpoint_every", args.checkpoint_every)):
        if val is not None:
            tc[key] = val
    if tc.get("checkpoint_every"):
        tc.setdefault("checkpoint_dir", str(Path(args.out).with_suffix("")) + "_checkpoints")
    cfg = TrainConfig(**tc)
    q, curve = train(cfg, scenario, progress_every=args.progress)
    q.save(args.out)
    save_curve(args.curve or str(Path(args.out).with_suffix(".curve.csv")), curve)
    log.info("wrote %s", args.out)


def cmd_eval(args):
    conf = _load_config(args.config)
    scenario = _scenario(conf)
    ec = dict(conf.get("eval", {}))
    ec.pop("policy", None)
    ec.pop("starts", None)
    for key, val in (("n_flights", args.flights), ("true_flux", args.flux), ("seed", args.seed),
                     ("workers", args.workers), ("reward_kind", args.reward)):
        if val is not None:
            ec[key] = val
    if args.keep_records:
        ec["keep_records"] = True
    starts = None
    if args.start:
        starts = dict(parse_start(s, scenario) for s in args.start)
    report = evaluate(EvalConfig(policy=_policy(args.policy, scenario), starts=starts, **ec), scenario)
    report.metadata["policy"] = args.policy
    Path(args.out).write_text(report.to_json())
    for name, g in report.groups.items():
        print(f"{name:>10s} {tuple(g['cell'])}: CRPS {g['mean']:.2f} +/- {g['sd']:.2f} (n={g['n']})")


def cmd_simulate(args):
    scenario = _scenario(_load_config(args.config))
    policy = _policy(args.policy, scenario)
    start = parse_start(args.start, scenario)[1] if args.start else None
    rec = greedy_rollout(policy, scenario, np.random.default_rng(args.seed), true_flux=args.flux, start=start,
                         reward_kind=RewardKind.parse(args.reward))
    Path(args.out).write_text(rec.to_json() + "\n")
    print(f"path {[(c[0], c[1]) for c in rec.path]}  final CRPS {rec.final_crps:.3f}")


def cmd_dump_field(args):
    scenario = _scenario(_load_config(args.config))
    if args.flux < 0:
        raise DomainError("flux must be non-negative")
    Path(args.out).write_text(dump_field(scenario, args.flux))


def cmd_dump_posterior(args):
    scenario = _scenario(_load_config(args.config))
    lines = [ln for ln in Path(args.record).read_text().splitlines() if ln.strip()]
    rec = EpisodeRecord.from_json(lines[args.index])
    Path(args.out).write_text(dump_posterior(rec, args.points, scenario.prior))


def cmd_curve(args):
    series = load_curve(args.input)
    episodes, values = postprocess_curve(series, args.window)
    with open(args.out, "w") as fh:
        fh.write("episode,normalized_reward\n")
        for e, v in zip(episodes, values):
            fh.write(f"{int(e)},{float(v)!r}\n")


def build_parser():
    p = argparse.ArgumentParser(prog="hotspot", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    kinds = [k.value for k in RewardKind]

    t = sub.add_parser("train", help="train a Q-table")
    t.add_argument("--config")
    t.add_argument("--reward", choices=kinds)
    t.add_argument("--episodes", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--checkpoint-every", type=int)
    t.add_argument("--progress", type=int, default=10000, help="log every N episodes")
    t.add_argument("--curve", help="learning-curve CSV (default: <out>.curve.csv)")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a policy over many flights")
    e.add_argument("--config")
    e.add_argument("--policy", required=True, help="Q-table .npz, path .csv, or 'grid-path'")
    e.add_argument("--flights", type=int)
    e.add_argument("--flux", type=float)
    e.add_argument("--start", action="append", help="upwind|downwind|crosswind|cx,cy (repeatable)")
    e.add_argument("--seed", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--reward", choices=kinds)
    e.add_argument("--keep-records", action="store_true")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("simulate", help="fly one greedy episode and write its record")
    s.add_argument("--config")
    s.add_argument("--policy", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--flux", type=float)
    s.add_argument("--start")
    s.add_argument("--reward", choices=kinds, default=RewardKind.NEG_CRPS.value)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("dump-field", help="cell-centre concentration field as CSV")
    f.add_argument("--config")
    f.add_argument("--flux", type=float, default=250.0)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_dump_field)

    d = sub.add_parser("dump-posterior", help="prior/posterior densities of a recorded flight")
    d.add_argument("--config")
    d.add_argument("--record", required=True)
    d.add_argument("--index", type=int, default=0, help="line of the record file")
    d.add_argument("--points", type=int, default=1000)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_dump_posterior)

    c = sub.add_parser("curve", help="smooth and range-normalise a learning curve")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--window", type=int, default=1000)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_curve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (ConfigError, DomainError, ContractViolation, ForwardModelError, OSError, KeyError, TypeError,
            json.JSONDecodeError) as exc:
        print(f"hotspot {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
