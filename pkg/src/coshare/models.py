"""Core data types shared across the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CoshareError(Exception):
    """Base class for pipeline errors."""


class ConfigError(CoshareError):
    """A configuration value is outside its documented domain."""


class InputError(CoshareError):
    """An input file is missing or unreadable."""


class EmptyResultError(CoshareError):
    """A pipeline stage produced no usable data (e.g. empty matrix or network)."""


@dataclass
class Post:
    """One social-media message."""

    post_id: str
    author_id: str
    created_at: int = 0
    text: str = ""
    raw_urls: list[str] = field(default_factory=list)
    hashtags: list[str] = field(default_factory=list)
    mentions: list[str] = field(default_factory=list)
    media_digests: list[str] = field(default_factory=list)
    language: str = ""
    likes: int = 0
    retweets: int = 0
    replies: int = 0
    quotes: int = 0
    is_repost: bool = False


@dataclass
class UserProfile:
    """Account metadata used by the forensics stage."""

    user_id: str
    handle: str = ""
    display_name: str = ""
    bio: str = ""
    bio_urls: list[str] = field(default_factory=list)
    profile_image_digest: str | None = None
    cover_image_digest: str | None = None
    suspended: bool | None = None


@dataclass(frozen=True)
class CanonicalUrl:
    """A normalized URL plus the domain used for aggregation."""

    full: str
    registered_domain: str


@dataclass
class CorpusStats:
    """Descriptive counts over a post corpus."""

    n_posts: int = 0
    n_users: int = 0
    hashtag_counts: dict[str, int] = field(default_factory=dict)
    mention_counts: dict[str, int] = field(default_factory=dict)
    domain_counts: dict[str, int] = field(default_factory=dict)
    language_distribution: dict[str, int] = field(default_factory=dict)
    interaction_histograms: dict[str, dict[int, int]] = field(default_factory=dict)
    rejected_urls: int = 0


@dataclass
class UserUrlMatrix:
    """Sparse user x URL share matrix with TF-IDF weights.

    `counts` and `weights` share one CSR structure (`indptr`, `indices`);
    weight entries are zero wherever the URL's idf is zero.
    """

    users: list[str]
    urls: list[str]
    indptr: np.ndarray      # int64, len(users)+1
    indices: np.ndarray     # int64 column ids, sorted within each row
    counts: np.ndarray      # int64 share counts
    weights: np.ndarray     # float64 TF-IDF weights
    tfidf_variant: str = "raw"

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.users), len(self.urls))

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    def row(self, i: int) -> dict[str, float]:
        """Weight vector of user *i* as a url->weight mapping (test/debug aid)."""
        lo, hi = int(self.indptr[i]), int(self.indptr[i + 1])
        return {self.urls[int(c)]: float(w) for c, w in zip(self.indices[lo:hi], self.weights[lo:hi])}


@dataclass
class SimilarityNetwork:
    """Weighted undirected user graph from the cosine projection.

    Edges are stored once per unordered pair with src index < dst index,
    sorted by (src, dst). `excluded_users` lists matrix users dropped
    because their weight rows were all zero.
    """

    nodes: list[str]
    src: np.ndarray        # int64 indices into nodes
    dst: np.ndarray        # int64 indices into nodes
    weight: np.ndarray     # float64 cosine similarities
    threshold: float = 0.0
    excluded_users: list[str] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def edges(self) -> list[tuple[str, str, float]]:
        return [
            (self.nodes[int(a)], self.nodes[int(b)], float(w))
            for a, b, w in zip(self.src, self.dst, self.weight)
        ]


@dataclass
class CentralityScores:
    """Eigenvector-centrality result for one similarity network."""

    scores: dict[str, float]
    normalization: str = "l2"       # "l2" or "max"
    iterations_used: int = 0
    converged: bool = True
    mode: str = "global"            # "global" or "per_component"


@dataclass
class Cluster:
    """A connected group of flagged accounts with its sharing evidence."""

    members: list[str]
    top_urls: list[tuple[str, float]] = field(default_factory=list)
    top_domains: list[tuple[str, float]] = field(default_factory=list)


@dataclass
class CoordinationReport:
    """Detector output: flagged accounts plus supporting structure."""

    flagged: set[str]
    percentile: float
    threshold_value: float
    scores: dict[str, float] = field(default_factory=dict)
    clusters: list[Cluster] = field(default_factory=list)
    suspended_count: int = 0
    suspended_users: set[str] = field(default_factory=set)
    unmatched_handles: int = 0
    mode: str = "global"
    component_thresholds: dict[int, float] = field(default_factory=dict)
