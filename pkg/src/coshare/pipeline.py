"""Run configuration and end-to-end pipeline wiring.

Configuration comes from a JSON (or, on Python 3.11+, TOML) file plus
command-line overrides; flags win. Every numeric parameter is validated
against its documented domain before any work starts.
"""

from __future__ import annotations

import json
import os
from collections.abc import Iterable
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

from . import detect as detect_mod
from . import kernels, matrix, network
from .fileio import atomic_write_text, file_digest
from .ingest import ShareLog, collect_shares
from .matrix import TFIDF_VARIANTS
from .models import (
    CentralityScores,
    ConfigError,
    CoordinationReport,
    EmptyResultError,
    Post,
    SimilarityNetwork,
    UserUrlMatrix,
)
from .synth import RNG_NAME
from .urls import ExpansionMap

PACKAGE_VERSION = "0.1.0"


@dataclass
class RunConfig:
    posts: str | None = None
    profiles: str | None = None
    expansion_map: str | None = None
    suspended: str | None = None
    post_schema: dict[str, str] = field(default_factory=dict)
    profile_schema: dict[str, str] = field(default_factory=dict)

    min_urls: int = 5
    tfidf_variant: str = "raw"
    similarity_threshold: float = 0.5
    k_core: int = 0
    centrality_tol: float = 1e-10
    centrality_max_iter: int = 1000
    centrality_mode: str = "global"
    normalization: str = "l2"
    percentile: float = 99.0

    platform_map: dict[str, str] = field(default_factory=dict)
    template_probes: list[str] = field(default_factory=list)
    bio_jaccard_min: float = 0.8
    bio_min_members: int = 2
    media_min_posters: int = 2
    top_k: int = 20

    out: str = "out"
    seed: int = 0
    threads: int = 0

    n_organic: int = 1000
    n_coordinated: int = 30
    url_catalog_size: int = 2000
    zipf_exponent: float = 1.1
    shares_min: int = 5
    shares_max: int = 15
    campaign_pool_size: int = 10
    campaign_overlap: float = 0.9
    sweep_grid: dict[str, list] = field(default_factory=dict)

    def validate(self) -> None:
        if self.min_urls < 1:
            raise ConfigError("min_urls must be >= 1")
        if self.tfidf_variant not in TFIDF_VARIANTS:
            raise ConfigError(f"tfidf_variant must be one of {TFIDF_VARIANTS}")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ConfigError("similarity_threshold must be in [0, 1]")
        if self.k_core < 0:
            raise ConfigError("k_core must be >= 0")
        if self.centrality_tol <= 0:
            raise ConfigError("centrality_tol must be > 0")
        if self.centrality_max_iter < 1:
            raise ConfigError("centrality_max_iter must be >= 1")
        if self.centrality_mode not in detect_mod.CENTRALITY_MODES:
            raise ConfigError(f"centrality_mode must be one of {detect_mod.CENTRALITY_MODES}")
        if self.normalization not in detect_mod.NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {detect_mod.NORMALIZATIONS}")
        if not 0.0 < self.percentile < 100.0:
            raise ConfigError("percentile must be in (0, 100)")
        if not 0.0 < self.bio_jaccard_min <= 1.0:
            raise ConfigError("bio_jaccard_min must be in (0, 1]")
        if self.bio_min_members < 2:
            raise ConfigError("bio_min_members must be >= 2")
        if self.media_min_posters < 2:
            raise ConfigError("media_min_posters must be >= 2")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")
        if self.n_organic < 0 or self.n_coordinated < 0:
            raise ConfigError("synthetic user counts must be >= 0")
        if self.url_catalog_size < 1:
            raise ConfigError("url_catalog_size must be >= 1")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf_exponent must be > 0")
        if not 1 <= self.shares_min <= self.shares_max:
            raise ConfigError("shares must satisfy 1 <= shares_min <= shares_max")
        if not 0.0 <= self.campaign_overlap <= 1.0:
            raise ConfigError("campaign_overlap must be in [0, 1]")

    @property
    def effective_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        if path.endswith(".toml"):
            try:
                import tomllib
            except ImportError as exc:
                raise ConfigError("TOML config requires Python 3.11+; use JSON") from exc
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        else:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DetectionResult:
    matrix: UserUrlMatrix
    network: SimilarityNetwork
    scores: CentralityScores
    report: CoordinationReport
    shares: ShareLog | None = None


def detect_from_shares(
    shares: ShareLog,
    min_urls: int = 5,
    tfidf_variant: str = "raw",
    similarity_threshold: float = 0.5,
    k_core: int = 0,
    centrality_tol: float = 1e-10,
    centrality_max_iter: int = 1000,
    centrality_mode: str = "global",
    normalization: str = "l2",
    percentile: float = 99.0,
    threads: int = 1,
) -> DetectionResult:
    """shares -> matrix -> similarity network -> centrality -> flagged set."""
    active = shares.active_users(min_urls)
    if not active:
        raise EmptyResultError("no users pass the activity filter")
    m = matrix.build_matrix(shares.iter_shares(), active, tfidf_variant)
    g = network.project_similarity(m, similarity_threshold, threads=threads)
    if k_core > 0:
        g = network.k_core(g, k_core)
    if g.n_nodes == 0:
        raise EmptyResultError("similarity network is empty")
    scores = detect_mod.eigenvector_centrality(
        g, tol=centrality_tol, max_iter=centrality_max_iter,
        normalization=normalization, mode=centrality_mode,
    )
    if centrality_mode == "per_component":
        report = detect_mod.percentile_threshold_per_component(g, scores, percentile)
    else:
        report = detect_mod.percentile_threshold(scores, percentile)
    report.clusters = detect_mod.extract_clusters(g, report.flagged, m)
    return DetectionResult(matrix=m, network=g, scores=scores, report=report, shares=shares)


def detect_in_memory(
    posts: Iterable[Post],
    expansion: ExpansionMap | None = None,
    **params,
) -> DetectionResult:
    return detect_from_shares(collect_shares(posts, expansion), **params)


def run_detection(config: RunConfig, posts: Iterable[Post]) -> DetectionResult:
    expansion = ExpansionMap.from_file(config.expansion_map) if config.expansion_map else None
    return detect_in_memory(
        posts,
        expansion=expansion,
        min_urls=config.min_urls,
        tfidf_variant=config.tfidf_variant,
        similarity_threshold=config.similarity_threshold,
        k_core=config.k_core,
        centrality_tol=config.centrality_tol,
        centrality_max_iter=config.centrality_max_iter,
        centrality_mode=config.centrality_mode,
        normalization=config.normalization,
        percentile=config.percentile,
        threads=config.effective_threads,
    )


def write_run_metadata(config: RunConfig, command: str, out_dir: str,
                       inputs: list[str], extra: dict | None = None) -> None:
    """Machine-readable record sufficient to reproduce the run exactly.

    The timestamp is the only field excluded from byte-identity between
    repeated runs of the same configuration.
    """
    meta = {
        "command": command,
        "parameters": config.to_dict(),
        "inputs": {p: file_digest(p) for p in inputs if p},
        "package_version": PACKAGE_VERSION,
        "kernel_backend": kernels.backend_name(),
        "rng": RNG_NAME,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    atomic_write_text(
        os.path.join(out_dir, "run_metadata.json"),
        json.dumps(meta, sort_keys=True, indent=1) + "\n",
    )
