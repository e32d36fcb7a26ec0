"""Command-line pipeline: generate, block, score, match, sweep, eval,
review-serve.

Progress goes to stderr; machine-readable output goes to files. Exit codes:
0 success, 1 usage error, 2 data/validation error, 3 external-service
error. Every run writes a resolved-config echo and a JSON summary (the only
place a timestamp appears, keeping data outputs byte-reproducible).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import yaml

from . import __version__, blocking, datagen, evaluation, matching
from .config import RunConfig, load_config, resolved_dict, write_echo
from .embedding import make_provider
from .errors import ConfigError, DataError, TransportError, UnparseableResponse
from .fellegi_sunter import score_pair
from .records import Dataset, RecordPair, parse_records


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, not argparse's default 2
        raise UsageError(message)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _run_id(cfg: RunConfig, command: str) -> str:
    payload = yaml.safe_dump(resolved_dict(cfg), sort_keys=True) + command
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()


def _write_summary(out_dir: Path, cfg: RunConfig, command: str,
                   extra: dict) -> None:
    summary = {
        "run_id": _run_id(cfg, command),
        "command": command,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": resolved_dict(cfg),
        **extra,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_datasets(args) -> tuple[Dataset, Dataset]:
    fmt = getattr(args, "format", "csv")
    return (parse_records(args.a, "A", fmt=fmt),
            parse_records(args.b, "B", fmt=fmt))


def _provider(cfg: RunConfig):
    emb = cfg.embedding
    return make_provider(emb.provider, dim=emb.dim, n=emb.n, remote=emb.remote)


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(cfg: RunConfig, args) -> int:
    out = _prepare_out(args)
    paths = datagen.write_corpus(cfg.generate, out)
    _log(f"generated corpus under {out} "
         f"(seed {cfg.generate.seed}, {cfg.generate.n_persons} persons)")
    write_echo(cfg, out)
    _write_summary(out, cfg, "generate", {"outputs": paths})
    return 0


def cmd_block(cfg: RunConfig, args) -> int:
    out = _prepare_out(args)
    dataset_a, dataset_b = _load_datasets(args)
    mode = args.mode or cfg.blocking.mode
    extra: dict = {"mode": mode}

    if mode == "rules":
        pairs = blocking.block_by_rules(dataset_a, dataset_b, cfg.blocking.rules)
        blocking.write_pairs_csv(pairs, out / "pairs.csv")
        extra["candidate_count"] = len(pairs)
        _log(f"rule blocking: {len(pairs)} candidate pairs")
    elif mode == "knn":
        params = blocking.KnnParams(k=cfg.blocking.k, tau=cfg.blocking.tau)
        pairs = blocking.block_by_knn(dataset_a, dataset_b, _provider(cfg), params)
        blocking.write_pairs_csv(pairs, out / "pairs.csv")
        extra["candidate_count"] = len(pairs)
        _log(f"knn blocking (k={params.k}, tau={params.tau}): "
             f"{len(pairs)} candidate pairs")
    else:
        auto, dropped, escalated = blocking.hybrid_block(
            dataset_a, dataset_b, cfg.blocking.rules, cfg.comparators,
            cfg.blocking.band,
        )
        blocking.write_pairs_csv(auto, out / "auto_matches.csv")
        blocking.write_pairs_csv(escalated, out / "escalated.csv")
        extra.update({
            "auto_matches": len(auto),
            "auto_nonmatches_dropped": dropped,
            "escalated": len(escalated),
        })
        _log(f"hybrid blocking: {len(auto)} auto-matches, "
             f"{dropped} dropped, {len(escalated)} escalated")

    write_echo(cfg, out)
    _write_summary(out, cfg, f"block:{mode}", extra)
    return 0


def cmd_score(cfg: RunConfig, args) -> int:
    out = _prepare_out(args)
    dataset_a, dataset_b = _load_datasets(args)
    pairs = blocking.read_pairs_csv(args.pairs)
    lookup_a, lookup_b = dataset_a.by_id(), dataset_b.by_id()

    import csv as _csv
    with (out / "scores.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        fields = [c.field for c in cfg.comparators]
        writer.writerow(["left_id", "right_id", *fields,
                         "total_weight", "overall_score"])
        for cand in pairs:
            try:
                pair = RecordPair(lookup_a[cand.left_id], lookup_b[cand.right_id])
            except KeyError as exc:
                raise DataError(
                    f"pair references unknown record {exc.args[0]!r}",
                    path=str(args.pairs),
                ) from None
            scored = score_pair(pair, cfg.comparators)
            writer.writerow([
                cand.left_id, cand.right_id, *scored.vector,
                repr(scored.total_weight), repr(scored.overall_score),
            ])
    _log(f"scored {len(pairs)} pairs")
    write_echo(cfg, out)
    _write_summary(out, cfg, "score", {"pairs": len(pairs)})
    return 0


def cmd_match(cfg: RunConfig, args) -> int:
    out = _prepare_out(args)
    dataset_a, dataset_b = _load_datasets(args)
    pairs = blocking.read_pairs_csv(args.pairs)
    policy = cfg.cascade
    decisions, queued = matching.match_cascade(
        pairs, dataset_a, dataset_b, policy, cfg.comparators,
        llm_cfg=cfg.llm, parallelism=cfg.effective_parallelism(),
    )
    matching.write_decisions_csv(decisions, out / "decisions.csv")

    queue_path = out / "queue.jsonl"
    from .review import build_queue_entries
    from .review.service import write_queue_file
    queued_set = blocking.CandidatePairSet()
    for left_id, right_id in queued:
        queued_set.add(left_id, right_id, "escalated")
    entries = build_queue_entries(queued_set, dataset_a, dataset_b,
                                  cfg.comparators)
    write_queue_file(entries, queue_path)

    _log(f"cascade: {len(decisions)} decisions, {len(queued)} queued for review")
    write_echo(cfg, out)
    _write_summary(out, cfg, "match", {
        "decisions": len(decisions), "queued": len(queued),
        "escalation_target": policy.escalation_target,
    })
    return 0


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x)
    except ValueError:
        raise UsageError(f"expected a comma-separated number list, got {text!r}")


def cmd_sweep(cfg: RunConfig, args) -> int:
    out = _prepare_out(args)
    dataset_a, dataset_b = _load_datasets(args)
    truth = datagen.read_truth_csv(args.truth) if args.truth else set()
    k_set = (tuple(int(k) for k in _parse_float_list(args.k))
             if args.k else evaluation.DEFAULT_K_SET)
    tau_set = (_parse_float_list(args.tau)
               if args.tau else evaluation.DEFAULT_TAU_SET)

    grid = evaluation.run_sweep(dataset_a, dataset_b, _provider(cfg),
                                k_set, tau_set, truth)
    evaluation.write_sweep_csv(grid, out / "grid.csv")
    evaluation.write_sweep_long(grid, out / "grid_long.csv")
    _log(f"sweep: {len(grid.rows)} lattice points "
         f"(k in {list(k_set)}, tau in {list(tau_set)})")
    write_echo(cfg, out)
    _write_summary(out, cfg, "sweep", {
        "lattice_points": len(grid.rows),
        "k_set": list(k_set), "tau_set": list(tau_set),
    })
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    out = _prepare_out(args)
    truth = datagen.read_truth_csv(args.truth)
    report: dict = {}

    if args.pairs:
        if not (args.a and args.b):
            raise UsageError("eval with --pairs needs --a and --b for sizes")
        dataset_a, dataset_b = _load_datasets(args)
        pairs = blocking.read_pairs_csv(args.pairs)
        blocking_report = evaluation.eval_blocking(
            pairs, truth, len(dataset_a), len(dataset_b),
            baseline_count=args.baseline,
        )
        report["blocking"] = evaluation.blocking_report_dict(blocking_report)
        _log(f"blocking eval: completeness={blocking_report.pairs_completeness}")

    if args.decisions:
        decisions = matching.read_decisions_csv(args.decisions)
        matching_report = evaluation.eval_matching(decisions, truth)
        report["matching"] = evaluation.matching_report_dict(matching_report)
        import csv as _csv
        with (out / "confusion.csv").open("w", newline="",
                                          encoding="utf-8") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["tp", "fp", "fn", "tn", "precision", "recall", "f1"])
            writer.writerow([
                matching_report.tp, matching_report.fp, matching_report.fn,
                matching_report.tn, repr(matching_report.precision),
                repr(matching_report.recall), repr(matching_report.f1),
            ])
        _log(f"matching eval: f1={matching_report.f1:.6f} "
             f"(fp+fn={matching_report.fp + matching_report.fn})")

    if not report:
        raise UsageError("eval needs --pairs and/or --decisions")

    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_echo(cfg, out)
    _write_summary(out, cfg, "eval", report)
    return 0


def cmd_review_serve(cfg: RunConfig, args) -> int:
    import uvicorn

    from .fellegi_sunter import ClassificationThresholds
    from .review import ReviewQueue, create_app
    from .review.service import read_queue_file

    band = ClassificationThresholds(cfg.cascade.band.lower,
                                    cfg.cascade.band.upper)
    log_path = args.log or cfg.review.log_path
    queue = ReviewQueue(band=band, log_path=log_path,
                        lease_seconds=cfg.review.lease_seconds)
    entries = read_queue_file(args.queue)
    loaded = queue.load_entries(entries)
    replayed = queue.replay_log()
    _log(f"review queue: {loaded} items loaded, {replayed} log entries replayed")

    app = create_app(queue, ui_dir=args.ui)
    port = args.port or cfg.review.port
    _log(f"serving on http://{cfg.review.host}:{port}")
    uvicorn.run(app, host=cfg.review.host, port=port, log_level="warning")
    return 0


BLOCKING_MODE_CHOICES = ("rules", "knn", "hybrid")


def build_parser() -> _Parser:
    parser = _Parser(prog="reclink",
                     description="Patient record linkage pipeline")
    parser.add_argument("--version", action="version",
                        version=f"reclink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("generate", help="write a synthetic corpus")
    common(p)

    p = sub.add_parser("block", help="generate candidate pairs")
    common(p)
    p.add_argument("--mode", choices=BLOCKING_MODE_CHOICES)
    p.add_argument("--a", required=True, help="source-A records file")
    p.add_argument("--b", required=True, help="source-B records file")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("score", help="Fellegi-Sunter scores for a pair file")
    common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("match", help="run the matcher cascade")
    common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("sweep", help="k x tau blocking sweep")
    common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--truth", help="truth CSV for recall")
    p.add_argument("--k", help="comma-separated k values")
    p.add_argument("--tau", help="comma-separated tau values")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("eval", help="blocking/matching reports")
    common(p)
    p.add_argument("--truth", required=True)
    p.add_argument("--pairs")
    p.add_argument("--decisions")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--baseline", type=int,
                   help="baseline candidate count for reduction")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = sub.add_parser("review-serve", help="serve the clerical review queue")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--queue", required=True, help="queue JSONL from `match`")
    p.add_argument("--log", help="decision log path (overrides config)")
    p.add_argument("--port", type=int)
    p.add_argument("--ui", help="directory with the review UI bundle")

    return parser


_COMMANDS = {
    "generate": cmd_generate,
    "block": cmd_block,
    "score": cmd_score,
    "match": cmd_match,
    "sweep": cmd_sweep,
    "eval": cmd_eval,
    "review-serve": cmd_review_serve,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        overrides: dict = {}
        if getattr(args, "seed", None) is not None:
            overrides["seed"] = args.seed
        cfg = load_config(args.config, overrides)
        return _COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        _log(f"usage error: {exc}")
        return 1
    except (ConfigError, DataError) as exc:
        _log(f"error: {exc}")
        return 2
    except (TransportError, UnparseableResponse) as exc:
        _log(f"external service error: {exc}")
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
