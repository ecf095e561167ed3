"""Operator command line: rank, fraud, analyze, simulate, serve.

Exit codes: 0 success, 1 data error (unreadable or corrupt log), 2 config
error. All commands except serve are deterministic given their inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

from . import analytics
from .fraud import FraudConfig, run_fraud_sweep
from .models import AssetFormat, VoteMode, leaderboard_row, sort_leaderboard, RatingState
from .rating import BtConfig, EloConfig, build_snapshot
from .simulator import PersonaSpec, SimConfig, SimModel, recovery_experiment, simulate
from .store import ChecksumMismatchError, FlagRecord, VoteLog, replay, snapshot_export, write_log

DATA_ERROR = 1
CONFIG_ERROR = 2


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_state(path: str, recover: bool):
    log_path = Path(path)
    if not log_path.exists():
        raise FileNotFoundError(f"log file not found: {path}")
    return replay(log_path, recover=recover)


def _print_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    line = "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))
    print(line)
    print("  ".join("-" * w for w in widths))
    for row in rows:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))


def cmd_rank(args: argparse.Namespace) -> int:
    try:
        state = _load_state(args.log, args.recover)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(DATA_ERROR, str(exc))
    mode = VoteMode(args.mode)
    excluded = frozenset() if args.include_flagged else state.flagged_users()
    elo_config = EloConfig(k_factor=args.k)
    snapshot = build_snapshot(
        state.votes,
        excluded_users=excluded,
        mode=mode,
        elo_config=elo_config,
        bt_config=BtConfig(),
        resamples=args.resamples,
        seed=args.seed,
    )

    rows = []
    for model in state.registry.models.values():
        rating = snapshot.ratings.get(model.model_id)
        if rating is None:
            rating = RatingState(model_id=model.model_id, elo=elo_config.initial_rating)
        rows.append(leaderboard_row(model, rating))
    rows = sort_leaderboard(rows)

    table = []
    rank = 0
    for row in rows:
        if row.public:
            rank += 1
            label = str(rank)
        else:
            label = "-"
        name = row.display_name + ("" if row.public else " [anonymous]")
        table.append([label, name, str(row.elo), str(row.votes), row.win_rate_label, row.format_label])
    _print_table(["Rank", "Model", "ELO", "Votes", "Win Rate", "Format"], table)
    print(f"{snapshot.vote_count_processed} votes processed ({mode.value} mode), "
          f"{len(excluded)} excluded users")

    out = Path(args.out) if args.out else Path(args.log).with_suffix(".snapshot.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(snapshot.to_jsonl(), "utf-8")
    print(f"snapshot written to {out}")
    return 0


def cmd_fraud(args: argparse.Namespace) -> int:
    try:
        state = _load_state(args.log, args.recover)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(DATA_ERROR, str(exc))
    try:
        config = FraudConfig(p_threshold=args.p)
    except ValueError as exc:
        return _fail(CONFIG_ERROR, str(exc))
    users = sorted({v.user_id for v in state.votes})
    result = run_fraud_sweep(state.votes, users, config)

    out = Path(args.out) if args.out else Path(args.log).with_suffix(".fraud.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for user_id in sorted(result.reports):
        r = result.reports[user_id]
        lines.append(json.dumps({
            "agreements": r.agreements,
            "flagged": r.flagged,
            "null_p0": r.null_p0,
            "p_value": r.p_value,
            "scorable_votes": r.scorable_votes,
            "user_id": r.user_id,
        }, sort_keys=True, separators=(",", ":")))
    out.write_text("\n".join(lines) + ("\n" if lines else ""), "utf-8")

    rate = result.authenticity_rate
    rate_label = f"{rate * 100:.3f}%" if rate is not None else "undefined"
    print(f"flagged {len(result.flagged)} of {len(users)} users "
          f"(authenticity {rate_label}); report written to {out}")

    if args.apply and result.flagged:
        log = VoteLog(args.log, recover=True)
        added = 0
        for user_id in sorted(result.flagged):
            if user_id not in log.state.flags:
                log.append(FlagRecord(user_id=user_id, p_value=result.reports[user_id].p_value))
                added += 1
        log.close()
        print(f"appended {added} flag records to {args.log}")
    return 0


def _report_json(obj) -> dict:
    return asdict(obj)


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        state = _load_state(args.log, args.recover)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(DATA_ERROR, str(exc))
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.log).parent / (Path(args.log).stem + "-reports")
    out_dir.mkdir(parents=True, exist_ok=True)

    excluded = state.flagged_users()
    snapshot = build_snapshot(state.votes, excluded, VoteMode.STANDARD, bt_config=None)

    participation = analytics.participation_stats(state.votes)
    (out_dir / "participation.json").write_text(
        json.dumps(_report_json(participation), sort_keys=True, indent=2) + "\n", "utf-8")
    print("participation:")
    print(f"  users={participation.user_count} votes={participation.vote_count} "
          f"median={participation.median_votes_per_user} mean={participation.mean_votes_per_user}")
    if participation.bucket_shares:
        shares = "  ".join(f"{k}: {v * 100:.1f}%" for k, v in participation.bucket_shares.items())
        print(f"  buckets: {shares}")

    for key, filename in (("format", "format_segments.json"), ("textured", "texture_segments.json")):
        try:
            report = analytics.segment_effect(state.registry, snapshot, key)
            payload = _report_json(report)
        except (analytics.EmptySegmentError, ValueError) as exc:
            payload = {"key": key, "error": str(exc)}
            report = None
        (out_dir / filename).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "utf-8")
        print(f"{key} segments:")
        if report is None:
            print(f"  unavailable: {payload['error']}")
            continue
        for seg in report.segments:
            rate = f"{seg.win_rate * 100:.1f}%" if seg.win_rate is not None else "-"
            print(f"  {seg.label}: models={seg.model_count} mean_elo={seg.mean_elo:.1f} "
                  f"elo_std={seg.elo_std:.1f} win_rate={rate}")
        z = f"{report.z_statistic:.4f}" if report.z_statistic is not None else "-"
        print(f"  test={report.test} z={z} p={report.p_value}")

    try:
        polygons = analytics.polygon_correlation(
            state.registry, snapshot, exclude_models=args.exclude_model or ())
        payload = _report_json(polygons)
        print(f"polygon correlation: r={polygons.pearson_r} over {polygons.model_count} mesh models")
        for b in polygons.bins:
            rate = f"{b.win_rate * 100:.1f}%" if b.win_rate is not None else "-"
            print(f"  {b.label}: models={b.model_count} votes={b.votes} win_rate={rate}")
    except (analytics.InsufficientDataError, ValueError) as exc:
        payload = {"error": str(exc)}
        print(f"polygon correlation unavailable: {exc}")
    (out_dir / "polygon_bins.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "utf-8")

    mesh = analytics.mesh_geometry_stats(state.registry)
    (out_dir / "mesh_stats.json").write_text(
        json.dumps(_report_json(mesh), sort_keys=True, indent=2) + "\n", "utf-8")
    print(f"mesh geometry: files={mesh.file_count} mean={mesh.mean_polygons} median={mesh.median_polygons}")

    snapshot_export(out_dir / "bundle", state, snapshot, None, EloConfig())
    print(f"reports written to {out_dir}")
    return 0


def _parse_sim_config(path: str) -> SimConfig:
    raw = json.loads(Path(path).read_text("utf-8"))
    models = [
        SimModel(
            model_id=m["model_id"],
            true_elo=float(m["true_elo"]),
            format=AssetFormat(m.get("format", "mesh")),
            textured=bool(m.get("textured", True)),
            exposure_weight=float(m.get("exposure_weight", 1.0)),
            polygon_count=int(m.get("polygon_count", 50_000)),
        )
        for m in raw["models"]
    ]
    personas = {}
    for name, spec in raw.get("personas", {"honest": {"count": 100}}).items():
        if isinstance(spec, int):
            personas[name] = PersonaSpec(count=spec)
        else:
            personas[name] = PersonaSpec(
                count=int(spec["count"]),
                min_votes=int(spec.get("min_votes", 1)),
                fixed_votes=spec.get("fixed_votes"),
            )
    return SimConfig(
        models=models,
        personas=personas,
        total_votes=raw.get("total_votes"),
        n_prompts=int(raw.get("n_prompts", 20)),
        seed=int(raw.get("seed", 0)),
        position_left_prob=float(raw.get("position_left_prob", 0.9)),
        mode=VoteMode(raw.get("mode", "standard")),
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = _parse_sim_config(args.config)
    except FileNotFoundError:
        return _fail(CONFIG_ERROR, f"config file not found: {args.config}")
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        return _fail(CONFIG_ERROR, f"invalid simulation config: {exc}")

    out_dir = Path(args.out_dir) if args.out_dir else Path(args.config).parent / (Path(args.config).stem + "-sim")
    out_dir.mkdir(parents=True, exist_ok=True)

    sim = simulate(cfg)
    log_path = out_dir / "votes.log.jsonl"
    write_log(log_path, sim.records())

    result = recovery_experiment(cfg)
    summary = {
        "vote_count": result.vote_count,
        "spearman_true_vs_elo": result.spearman_true_vs_elo,
        "kendall_elo_vs_bt": result.kendall_elo_vs_bt,
        "fraud_recall": result.fraud_recall,
        "honest_false_positive_rate": result.honest_false_positive_rate,
        "flagged_count": result.flagged_count,
        "persona_flag_rates": result.persona_flag_rates,
        "bt_converged": result.bt_converged,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n", "utf-8")
    print(f"simulated {result.vote_count} votes -> {log_path}")
    print(f"recovery: spearman={result.spearman_true_vs_elo} kendall={result.kendall_elo_vs_bt} "
          f"fraud_recall={result.fraud_recall} honest_fpr={result.honest_false_positive_rate}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ArenaService, ConfigError, create_app, load_config

    try:
        config = load_config(args.config)
        service = ArenaService(config)
    except ConfigError as exc:
        return _fail(CONFIG_ERROR, str(exc))
    except ChecksumMismatchError as exc:
        return _fail(DATA_ERROR, str(exc))
    app = create_app(service)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arena", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    rank = sub.add_parser("rank", help="replay a log and print the leaderboard")
    rank.add_argument("--log", required=True)
    rank.add_argument("--k", type=float, default=32.0)
    rank.add_argument("--mode", choices=["standard", "topology"], default="standard")
    rank.add_argument("--include-flagged", action="store_true")
    rank.add_argument("--out", default=None)
    rank.add_argument("--resamples", type=int, default=0, help="bootstrap resamples (0 = off)")
    rank.add_argument("--seed", type=int, default=0)
    rank.add_argument("--recover", action="store_true", help="accept logs without a valid checksum")
    rank.set_defaults(func=cmd_rank)

    fraud = sub.add_parser("fraud", help="run the fraud sweep over a log")
    fraud.add_argument("--log", required=True)
    fraud.add_argument("--p", type=float, default=1e-5)
    fraud.add_argument("--out", default=None)
    fraud.add_argument("--apply", action="store_true", help="append flag records to the log")
    fraud.add_argument("--recover", action="store_true")
    fraud.set_defaults(func=cmd_fraud)

    analyze = sub.add_parser("analyze", help="compute participation/segment/polygon reports")
    analyze.add_argument("--log", required=True)
    analyze.add_argument("--out-dir", default=None)
    analyze.add_argument("--recover", action="store_true")
    analyze.add_argument("--exclude-model", action="append", default=[],
                         help="drop a model from the polygon correlation (repeatable)")
    analyze.set_defaults(func=cmd_analyze)

    simulate_p = sub.add_parser("simulate", help="generate a synthetic log and recovery summary")
    simulate_p.add_argument("--config", required=True)
    simulate_p.add_argument("--out-dir", default=None)
    simulate_p.set_defaults(func=cmd_simulate)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
