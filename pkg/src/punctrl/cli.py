"""Command-line entry point: train, baseline, probe, report.

All randomness flows from --seed through named substreams; identical
invocations produce byte-identical output files. Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

import argparse
import glob
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .agents import AGENT_KINDS
from .config import ConfigError, as_train_config, load_config, write_manifest
from .metrics import (
    EpisodeRow,
    ProbeRow,
    SummaryRow,
    aggregate_episodes,
    aggregate_probes,
    read_csv,
    write_csv,
)
from .seeding import STREAM_PROBE, substream
from .svgchart import Series, emit_linechart
from .train import (
    ADAPTATION_CAP,
    MANUAL,
    load_checkpoint,
    manual_baseline,
    probe_adaptation,
    probe_reaction,
    train,
)

CHART_METRICS = (
    ("sum_reward", "rewards.svg", "episode sum reward"),
    ("tx_interrupted_ratio", "tx_interrupted.svg", "transmissions interrupted"),
    ("urllc_missed_ratio", "urllc_missed.svg", "URLLC requests missed"),
)


def _seed_type(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="punctrl",
        description="Train and probe puncturing schedulers on the mini-slot simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run seeded training repetitions")
    p_train.add_argument("--config", help="config file; defaults reproduce the reference setup")
    p_train.add_argument("--agent", choices=AGENT_KINDS, help="exploration strategy")
    p_train.add_argument("--seed", type=_seed_type, help="base seed; rep k uses seed+k")
    p_train.add_argument("--reps", type=int, help="number of seeded repetitions")
    p_train.add_argument("--out", help="output directory")
    p_train.add_argument("--jobs", type=int, help="parallel worker processes")
    p_train.add_argument("--checkpoint-every", type=int, dest="checkpoint_every",
                         help="checkpoint interval in episodes (0 = final only)")
    p_train.set_defaults(func=cmd_train)

    p_base = sub.add_parser("baseline", help="evaluate the manual scheduling heuristic")
    p_base.add_argument("--config", help="config file")
    p_base.add_argument("--seed", type=_seed_type, help="seed")
    p_base.add_argument("--episodes", type=int, help="number of evaluation episodes")
    p_base.add_argument("--out", help="output directory")
    p_base.set_defaults(func=cmd_baseline)

    p_probe = sub.add_parser("probe", help="probe trained checkpoints with a critical event")
    p_probe.add_argument("--checkpoints", required=True,
                         help="directory containing checkpoints and the run manifest")
    p_probe.add_argument("--mode", choices=("reaction", "adapt"), default="reaction")
    p_probe.add_argument("--reps", type=int, default=10,
                         help="adaptation repetitions per checkpoint")
    p_probe.add_argument("--cap", type=int, default=ADAPTATION_CAP,
                         help="give up after this many confrontations")
    p_probe.add_argument("--seed", type=_seed_type, default=0, help="probe sampling seed")
    p_probe.add_argument("--out", help="output CSV path (default: probes.csv in the run dir)")
    p_probe.set_defaults(func=cmd_probe)

    p_report = sub.add_parser("report", help="aggregate runs into summaries and charts")
    p_report.add_argument("--in", dest="indir", required=True, help="directory holding run outputs")
    p_report.add_argument("--out", required=True, help="report output directory")
    p_report.set_defaults(func=cmd_report)
    return parser


def _resolved_config(args):
    cfg = load_config(args.config)
    if getattr(args, "agent", None):
        cfg.agent.kind = args.agent
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "reps", None) is not None:
        cfg.reps = args.reps
    if getattr(args, "episodes", None) is not None:
        cfg.episodes = args.episodes
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    if getattr(args, "jobs", None) is not None:
        cfg.jobs = args.jobs
    if getattr(args, "checkpoint_every", None) is not None:
        cfg.checkpoint_every = args.checkpoint_every
    return cfg


def cmd_train(args) -> int:
    cfg = _resolved_config(args)
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    write_manifest(cfg, os.path.join(out_dir, "manifest.ini"))
    ckpt_dir = os.path.join(out_dir, "checkpoints")
    tasks = [
        as_train_config(cfg, seed=cfg.seed + rep, checkpoint_dir=ckpt_dir)
        for rep in range(cfg.reps)
    ]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(train, tasks))
    else:
        results = [train(task) for task in tasks]
    rows = [row for result in results for row in result.episodes]
    write_csv(rows, os.path.join(out_dir, "episodes.csv"), EpisodeRow)
    for result in results:
        mean_reward = (
            sum(r.sum_reward for r in result.episodes) / len(result.episodes)
            if result.episodes
            else float("nan")
        )
        print(f"{result.run_id}: {len(result.episodes)} episodes, "
              f"mean sum reward {mean_reward:.2f}")
    print(f"wrote {os.path.join(out_dir, 'episodes.csv')}")
    return 0


def cmd_baseline(args) -> int:
    cfg = _resolved_config(args)
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    write_manifest(cfg, os.path.join(out_dir, "manifest.ini"))
    result = manual_baseline(as_train_config(cfg))
    write_csv(result.episodes, os.path.join(out_dir, "episodes.csv"), EpisodeRow)
    mean_reward = sum(r.sum_reward for r in result.episodes) / max(len(result.episodes), 1)
    print(f"{result.run_id}: {len(result.episodes)} episodes, mean sum reward {mean_reward:.2f}")
    return 0


def _find_checkpoints(root: str) -> list:
    finals = sorted(glob.glob(os.path.join(root, "**", "*_final.ckpt"), recursive=True))
    if finals:
        return finals
    return sorted(glob.glob(os.path.join(root, "**", "*.ckpt"), recursive=True))


def cmd_probe(args) -> int:
    root = args.checkpoints
    if not os.path.isdir(root):
        print(f"checkpoint directory not found: {root}", file=sys.stderr)
        return 1
    manifest = os.path.join(root, "manifest.ini")
    cfg = load_config(manifest if os.path.exists(manifest) else None)
    files = _find_checkpoints(root)
    if not files:
        print(f"no checkpoints found under {root}", file=sys.stderr)
        return 1
    rows = []
    for path in files:
        params, kind, _ = load_checkpoint(path)
        spec = replace(cfg.agent, kind=kind).validate()
        run_id = os.path.basename(path).removesuffix(".ckpt")
        if args.mode == "reaction":
            outcome = probe_reaction(params, spec, cfg.sim)
            rows.append(
                ProbeRow(
                    run_id,
                    kind,
                    0,
                    md=outcome.md,
                    logstd_wait=outcome.logstd_wait,
                    mean_logstd_punct=outcome.mean_logstd_punct,
                )
            )
        else:
            train_cfg = as_train_config(cfg)
            train_cfg.agent = spec
            for rep in range(args.reps):
                rng = substream(args.seed, f"{STREAM_PROBE}/{run_id}/{rep}")
                steps = probe_adaptation(params, spec, train_cfg, rng, cap=args.cap)
                rows.append(ProbeRow(run_id, kind, rep, steps_until_explore=steps))
    out_path = args.out or os.path.join(root, "probes.csv")
    write_csv(rows, out_path, ProbeRow)
    print(f"wrote {len(rows)} probe rows to {out_path}")
    return 0


def _collect_rows(indir: str, filename: str, row_type):
    rows = []
    for path in sorted(glob.glob(os.path.join(indir, "**", filename), recursive=True)):
        rows.extend(read_csv(path, row_type))
    return rows


def _fmt_stat(mean: float, std: float) -> str:
    return f"{mean:.4g} ± {std:.3g}"


def _print_probe_tables(probe_summaries) -> None:
    by_metric: dict[str, dict[str, SummaryRow]] = {}
    for row in probe_summaries:
        by_metric.setdefault(row.metric, {})[row.agent] = row
    reaction_metrics = [m for m in ("md", "logstd_wait", "mean_logstd_punct") if m in by_metric]
    if reaction_metrics:
        agents = sorted({a for m in reaction_metrics for a in by_metric[m]})
        print("\nReaction to the unseen critical event (mean ± std over snapshots)")
        print(f"{'metric':<20}" + "".join(f"{a:>20}" for a in agents))
        for metric in reaction_metrics:
            cells = []
            for agent in agents:
                row = by_metric[metric].get(agent)
                cells.append(_fmt_stat(row.mean, row.std) if row else "-")
            print(f"{metric:<20}" + "".join(f"{c:>20}" for c in cells))
    if "steps_until_explore" in by_metric:
        print("\nTraining steps until the new event is explored (mean ± std)")
        for agent, row in sorted(by_metric["steps_until_explore"].items()):
            print(f"  {agent:<8} {_fmt_stat(row.mean, row.std)}")


def cmd_report(args) -> int:
    episode_rows = _collect_rows(args.indir, "episodes.csv", EpisodeRow)
    if not episode_rows:
        print(f"no runs found under {args.indir}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    agent_rows = [r for r in episode_rows if r.agent != MANUAL]
    manual_rows = [r for r in episode_rows if r.agent == MANUAL]
    summaries = aggregate_episodes(agent_rows) if agent_rows else []
    probe_rows = _collect_rows(args.indir, "probes.csv", ProbeRow)
    probe_summaries = aggregate_probes(probe_rows) if probe_rows else []
    write_csv(summaries + probe_summaries, os.path.join(args.out, "summary.csv"), SummaryRow)

    for metric, filename, y_label in CHART_METRICS:
        per_agent: dict[str, list[SummaryRow]] = {}
        for row in summaries:
            if row.metric == metric:
                per_agent.setdefault(row.agent, []).append(row)
        series = []
        for agent in sorted(per_agent):
            rows = sorted(per_agent[agent], key=lambda r: r.episode)
            series.append(
                Series(
                    label=agent,
                    x=[r.episode for r in rows],
                    mean=[r.mean for r in rows],
                    lo=[r.min for r in rows],
                    hi=[r.max for r in rows],
                )
            )
        baseline = None
        if manual_rows:
            baseline = sum(getattr(r, metric) for r in manual_rows) / len(manual_rows)
        emit_linechart(
            series,
            os.path.join(args.out, filename),
            title=y_label,
            x_label="episode",
            y_label=y_label,
            baseline=baseline,
        )
    _print_probe_tables(probe_summaries)
    print(f"\nwrote summary and charts to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
