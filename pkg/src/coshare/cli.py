"""Command-line entry point.

Subcommands: stats, build, detect, characterize, synth, eval, sweep, export.
Every value in the config file can be overridden by a flag; flags win.
Exit codes: 0 success, 2 config error, 3 I/O error, 4 empty result.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from . import detect as detect_mod
from . import forensics, ingest, matrix, network, pipeline, synth
from .fileio import atomic_open, atomic_write_text
from .models import ConfigError, EmptyResultError, InputError
from .pipeline import RunConfig

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EMPTY = 4

_OVERRIDE_FLAGS = [
    ("posts", str), ("profiles", str), ("expansion-map", str), ("suspended", str),
    ("min-urls", int), ("tfidf-variant", str), ("similarity-threshold", float),
    ("k-core", int), ("centrality-tol", float), ("centrality-max-iter", int),
    ("centrality-mode", str), ("normalization", str), ("percentile", float),
    ("bio-jaccard-min", float), ("bio-min-members", int), ("media-min-posters", int),
    ("top-k", int), ("out", str), ("seed", int), ("threads", int),
    ("n-organic", int), ("n-coordinated", int), ("url-catalog-size", int),
    ("zipf-exponent", float), ("shares-min", int), ("shares-max", int),
    ("campaign-pool-size", int), ("campaign-overlap", float),
]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON (or TOML on 3.11+) config file")
    for flag, typ in _OVERRIDE_FLAGS:
        parser.add_argument(f"--{flag}", type=typ, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coshare",
        description="Detect coordinated link-sharing campaigns in post corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, doc in [
        ("stats", "corpus descriptive statistics"),
        ("build", "share matrix and similarity network"),
        ("detect", "full detection pipeline"),
        ("characterize", "forensics over a flagged set"),
        ("synth", "generate a labeled synthetic corpus"),
        ("eval", "compare a report against ground truth"),
        ("sweep", "parameter sweep over synthetic corpora"),
        ("export", "convert a network snapshot"),
    ]:
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        if name == "characterize":
            p.add_argument("--flagged", required=True, help="report JSON or id list file")
        if name == "eval":
            p.add_argument("--report", required=True)
            p.add_argument("--truth", required=True)
        if name == "export":
            p.add_argument("--network", required=True, help="network snapshot JSON")
            p.add_argument("--format", choices=["csv", "graphml"], default="csv")
            p.add_argument("--export-k-core", type=int, default=None,
                           help="k-core filter for visualization (graphml default: 10)")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    for flag, _ in _OVERRIDE_FLAGS:
        attr = flag.replace("-", "_")
        value = getattr(args, attr, None)
        if value is not None:
            setattr(config, attr, value)
    config.validate()
    return config


def _ensure_out(config: RunConfig) -> str:
    os.makedirs(config.out, exist_ok=True)
    return config.out


def _require_file(path: str | None, what: str) -> str:
    if not path:
        raise ConfigError(f"{what} file is required")
    if not os.path.isfile(path):
        raise InputError(f"{what} file not found: {path}")
    return path


def _write_count_csv(path: str, rows: list[tuple[str, int]]) -> None:
    with atomic_open(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item", "count"])
        writer.writerows(rows)


def cmd_stats(config: RunConfig) -> int:
    posts_path = _require_file(config.posts, "posts")
    out = _ensure_out(config)
    reader = ingest.parse_posts(posts_path, config.post_schema)
    stats = ingest.compute_corpus_stats(reader)

    payload = {
        "n_posts": stats.n_posts,
        "n_users": stats.n_users,
        "hashtag_counts": stats.hashtag_counts,
        "mention_counts": stats.mention_counts,
        "domain_counts": stats.domain_counts,
        "language_distribution": stats.language_distribution,
        "interaction_histograms": {
            k: {str(c): f for c, f in sorted(v.items())}
            for k, v in stats.interaction_histograms.items()
        },
        "rejected_urls": stats.rejected_urls,
        "rejected_lines": reader.rejects,
    }
    atomic_write_text(os.path.join(out, "corpus_stats.json"),
                      json.dumps(payload, sort_keys=True, indent=1) + "\n")
    for name, counts in [("hashtags", stats.hashtag_counts),
                         ("mentions", stats.mention_counts),
                         ("domains", stats.domain_counts),
                         ("languages", stats.language_distribution)]:
        _write_count_csv(os.path.join(out, f"top_{name}.csv"),
                         ingest.top_k(counts, config.top_k))
    pipeline.write_run_metadata(config, "stats", out, [posts_path])
    return EXIT_OK


def cmd_build(config: RunConfig) -> int:
    posts_path = _require_file(config.posts, "posts")
    out = _ensure_out(config)
    reader = ingest.parse_posts(posts_path, config.post_schema)
    expansion = None
    if config.expansion_map:
        expansion = pipeline.ExpansionMap.from_file(
            _require_file(config.expansion_map, "expansion map"))
    shares = ingest.collect_shares(reader, expansion)
    active = shares.active_users(config.min_urls)
    if not active:
        raise EmptyResultError("no users pass the activity filter")
    m = matrix.build_matrix(shares.iter_shares(), active, config.tfidf_variant)
    g = network.project_similarity(m, config.similarity_threshold,
                                   threads=config.effective_threads)
    if config.k_core > 0:
        g = network.k_core(g, config.k_core)

    matrix.save_snapshot(m, os.path.join(out, "matrix.json"), config.similarity_threshold)
    network.save_network(g, os.path.join(out, "network.json"))
    network.write_edgelist_csv(g, os.path.join(out, "edges.csv"))
    network.write_graphml(g, os.path.join(out, "network.graphml"))
    atomic_write_text(os.path.join(out, "graph_metrics.json"),
                      json.dumps(network.graph_metrics(g), sort_keys=True, indent=1) + "\n")
    pipeline.write_run_metadata(config, "build", out, [posts_path])
    return EXIT_OK


def cmd_detect(config: RunConfig) -> int:
    posts_path = _require_file(config.posts, "posts")
    out = _ensure_out(config)
    reader = ingest.parse_posts(posts_path, config.post_schema)
    result = pipeline.run_detection(config, reader)
    report = result.report

    inputs = [posts_path]
    if config.suspended:
        suspended_path = _require_file(config.suspended, "suspended handles")
        profiles_path = _require_file(config.profiles, "profiles")
        inputs += [suspended_path, profiles_path]
        handles = ingest.load_suspended_handles(suspended_path)
        handle_by_user = {
            p.user_id: p.handle
            for p in ingest.parse_profiles(profiles_path, config.profile_schema)
        }
        report = detect_mod.annotate_suspensions(report, handles, handle_by_user)

    detect_mod.write_report_json(report, os.path.join(out, "report.json"), result.scores)
    detect_mod.write_report_csv(report, os.path.join(out, "report.csv"))
    network.write_edgelist_csv(result.network, os.path.join(out, "edges.csv"))
    network.write_graphml(result.network, os.path.join(out, "network.graphml"))
    pipeline.write_run_metadata(
        config, "detect", out, inputs,
        extra={"flagged_count": len(report.flagged),
               "network_nodes": result.network.n_nodes,
               "network_edges": result.network.n_edges,
               "excluded_users": len(result.network.excluded_users),
               "rejected_lines": reader.rejects,
               "rejected_urls": result.shares.rejected_urls if result.shares else 0},
    )
    return EXIT_OK


def _load_flagged(path: str) -> set[str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return {line.strip() for line in text.splitlines() if line.strip()}
    if isinstance(data, dict) and "flagged" in data:
        entries = data["flagged"]
        return {e["user_id"] if isinstance(e, dict) else str(e) for e in entries}
    if isinstance(data, list):
        return {str(e) for e in data}
    raise InputError(f"cannot interpret flagged file {path}")


def cmd_characterize(config: RunConfig, flagged_path: str) -> int:
    profiles_path = _require_file(config.profiles, "profiles")
    flagged = _load_flagged(_require_file(flagged_path, "flagged"))
    out = _ensure_out(config)
    profiles = list(ingest.parse_profiles(profiles_path, config.profile_schema))
    posts = []
    inputs = [profiles_path, flagged_path]
    if config.posts:
        posts_path = _require_file(config.posts, "posts")
        posts = list(ingest.parse_posts(posts_path, config.post_schema))
        inputs.append(posts_path)

    platform_map = {**forensics.DEFAULT_PLATFORM_MAP, **config.platform_map}
    report = forensics.forensics_report(
        profiles, posts, flagged,
        min_members=config.bio_min_members,
        jaccard_min=config.bio_jaccard_min,
        min_posters=config.media_min_posters,
        probes=config.template_probes,
        platform_map=platform_map,
    )
    forensics.write_forensics_json(report, os.path.join(out, "forensics.json"))
    _write_count_csv(
        os.path.join(out, "flagged_domains.csv"),
        ingest.top_k(report["domain_counts"], config.top_k),
    )
    _write_count_csv(
        os.path.join(out, "flagged_platforms.csv"),
        sorted(report["platform_counts"].items(), key=lambda kv: (-kv[1], kv[0])),
    )
    pipeline.write_run_metadata(config, "characterize", out, inputs)
    return EXIT_OK


def cmd_synth(config: RunConfig) -> int:
    out = _ensure_out(config)
    scfg = synth.SynthConfig(
        seed=config.seed,
        n_organic=config.n_organic,
        n_coordinated=config.n_coordinated,
        url_catalog_size=config.url_catalog_size,
        zipf_exponent=config.zipf_exponent,
        shares_per_user=(config.shares_min, config.shares_max),
        campaign_pool_size=config.campaign_pool_size,
        campaign_overlap=config.campaign_overlap,
    )
    posts_path = os.path.join(out, "posts.jsonl")
    profiles_path = os.path.join(out, "profiles.jsonl")
    truth_path = os.path.join(out, "truth.json")
    n = synth.write_corpus(scfg, posts_path, profiles_path, truth_path)
    pipeline.write_run_metadata(
        config, "synth", out, [],
        extra={"posts_written": n,
               "corpus_digest": pipeline.file_digest(posts_path)},
    )
    return EXIT_OK


def cmd_eval(config: RunConfig, report_path: str, truth_path: str) -> int:
    out = _ensure_out(config)
    flagged = _load_flagged(_require_file(report_path, "report"))
    with open(_require_file(truth_path, "truth"), encoding="utf-8") as fh:
        truth = set(json.load(fh)["coordinated_ids"])
    metrics = synth.evaluate(flagged, truth)
    payload = metrics.to_dict()
    payload["n_flagged"] = len(flagged)
    payload["n_truth"] = len(truth)
    atomic_write_text(os.path.join(out, "metrics.json"),
                      json.dumps(payload, sort_keys=True, indent=1) + "\n")
    print(json.dumps(payload, sort_keys=True))
    pipeline.write_run_metadata(config, "eval", out, [report_path, truth_path])
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    if not config.sweep_grid:
        raise ConfigError("sweep requires a sweep_grid in the config file")
    out = _ensure_out(config)
    base = synth.SynthConfig(
        seed=config.seed,
        n_organic=config.n_organic,
        n_coordinated=config.n_coordinated,
        url_catalog_size=config.url_catalog_size,
        zipf_exponent=config.zipf_exponent,
        shares_per_user=(config.shares_min, config.shares_max),
        campaign_pool_size=config.campaign_pool_size,
        campaign_overlap=config.campaign_overlap,
    )
    rows = synth.sweep(
        base, config.sweep_grid,
        pipeline_params={
            "min_urls": config.min_urls,
            "tfidf_variant": config.tfidf_variant,
            "similarity_threshold": config.similarity_threshold,
            "k_core": config.k_core,
            "percentile": config.percentile,
        },
        threads=config.effective_threads,
    )
    if rows:
        fieldnames = list(rows[0])
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
        atomic_write_text(os.path.join(out, "metrics.csv"), buf.getvalue())
    pipeline.write_run_metadata(config, "sweep", out, [])
    return EXIT_OK


def cmd_export(config: RunConfig, network_path: str, fmt: str,
               export_k_core: int | None) -> int:
    out = _ensure_out(config)
    g = network.load_network(_require_file(network_path, "network"))
    if fmt == "graphml":
        k = 10 if export_k_core is None else export_k_core
        if k > 0:
            g = network.k_core(g, k)
        network.write_graphml(g, os.path.join(out, "network.graphml"))
    else:
        if export_k_core:
            g = network.k_core(g, export_k_core)
        network.write_edgelist_csv(g, os.path.join(out, "edges.csv"))
    pipeline.write_run_metadata(config, "export", out, [network_path])
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
        if args.command == "stats":
            return cmd_stats(config)
        if args.command == "build":
            return cmd_build(config)
        if args.command == "detect":
            return cmd_detect(config)
        if args.command == "characterize":
            return cmd_characterize(config, args.flagged)
        if args.command == "synth":
            return cmd_synth(config)
        if args.command == "eval":
            return cmd_eval(config, args.report, args.truth)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "export":
            return cmd_export(config, args.network, args.format, args.export_k_core)
        parser.error(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EmptyResultError as exc:
        print(f"empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
