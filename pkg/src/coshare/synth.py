"""Labeled synthetic corpora: organic users plus injected campaigns.

Organic users draw URLs independently from a Zipf distribution over a
catalog; coordinated users draw a fixed fraction of their shares from a
small campaign pool and camouflage the rest with organic draws. All
randomness comes from one seeded numpy PCG64 stream, so a config is fully
reproducible; the generator name is recorded in run metadata.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Iterator
from dataclasses import asdict, dataclass, field

import numpy as np

from .fileio import atomic_open
from .models import ConfigError, Post, UserProfile

RNG_NAME = "numpy-pcg64"
_EPOCH = 1_714_521_600  # fixed corpus start time (UTC seconds)

_LANGS = ["en", "es", "fr", "de", "pt"]
_LANG_P = [0.8, 0.08, 0.05, 0.04, 0.03]
_HASHTAGS = [
    "breaking", "politics", "vote", "news", "debate", "economy",
    "freedom", "truth", "media", "poll", "campaign", "rally",
]
_MENTIONS = [
    "newsdesk", "pollwatch", "civicvoice", "dailybrief", "factline",
    "wirereport", "townhall", "statehouse", "pressroom", "opendata",
]
_ORGANIC_BIOS = [
    "coffee first, headlines second",
    "watching the polls so you don't have to",
    "local news junkie",
    "opinions are my own",
    "politics, maps, and baseball",
]
_CAMPAIGN_BIO = "Real stories the networks skip. Tap the link below"


@dataclass
class SynthConfig:
    seed: int = 0
    n_organic: int = 1000
    n_coordinated: int = 30
    url_catalog_size: int = 2000
    zipf_exponent: float = 1.1
    shares_per_user: tuple[int, int] = (5, 15)
    campaign_pool_size: int = 10
    campaign_overlap: float = 0.9

    def __post_init__(self):
        smin, smax = self.shares_per_user
        if self.n_organic < 0 or self.n_coordinated < 0:
            raise ConfigError("user counts must be >= 0")
        if self.n_organic + self.n_coordinated == 0:
            raise ConfigError("at least one user is required")
        if self.url_catalog_size < 1:
            raise ConfigError("url_catalog_size must be >= 1")
        if self.zipf_exponent <= 0:
            raise ConfigError("zipf_exponent must be > 0")
        if not 1 <= smin <= smax:
            raise ConfigError("shares_per_user must satisfy 1 <= min <= max")
        if self.n_coordinated > 0 and self.campaign_pool_size < 1:
            raise ConfigError("campaign_pool_size must be >= 1 when coordinated users exist")
        if not 0.0 <= self.campaign_overlap <= 1.0:
            raise ConfigError("campaign_overlap must be in [0, 1]")


@dataclass
class GroundTruth:
    coordinated_ids: set[str] = field(default_factory=set)


def organic_url(config: SynthConfig, k: int) -> str:
    n_domains = max(1, config.url_catalog_size // 8)
    return f"https://news-{k % n_domains:05d}.example.org/article/{k}"


def campaign_url(k: int) -> str:
    return f"https://campaign-hub-{k:02d}.example.net/featured/{k}"


def _user_ids(config: SynthConfig) -> list[str]:
    total = config.n_organic + config.n_coordinated
    return [f"u{i:06d}" for i in range(total)]


def _pool_share_count(total_shares: int, overlap: float) -> int:
    # ceil keeps the guarantee "at least overlap * shares pool draws".
    return min(total_shares, math.ceil(overlap * total_shares))


def iter_posts(config: SynthConfig) -> Iterator[Post]:
    """Yield the post stream for *config*; deterministic given the seed."""
    rng = np.random.default_rng(config.seed)
    users = _user_ids(config)
    n_users = len(users)
    smin, smax = config.shares_per_user
    shares = rng.integers(smin, smax + 1, n_users)

    # Per-user split between campaign-pool draws and organic camouflage.
    pool_counts = np.zeros(n_users, dtype=np.int64)
    for i in range(config.n_organic, n_users):
        pool_counts[i] = _pool_share_count(int(shares[i]), config.campaign_overlap)
    organic_counts = shares - pool_counts

    ranks = np.arange(1, config.url_catalog_size + 1, dtype=np.float64)
    pmf = ranks ** -config.zipf_exponent
    cdf = np.cumsum(pmf)
    cdf /= cdf[-1]

    total_organic = int(organic_counts.sum())
    total_pool = int(pool_counts.sum())
    organic_draws = np.searchsorted(cdf, rng.random(total_organic), side="right")
    pool_draws = (
        rng.integers(0, config.campaign_pool_size, total_pool)
        if total_pool
        else np.empty(0, dtype=np.int64)
    )

    total_posts = int(shares.sum())
    lang_ix = rng.choice(len(_LANGS), size=total_posts, p=_LANG_P)
    n_tags = rng.integers(0, 3, total_posts)
    tag_ix = rng.integers(0, len(_HASHTAGS), (total_posts, 2))
    has_mention = rng.random(total_posts) < 0.25
    mention_ix = rng.integers(0, len(_MENTIONS), total_posts)
    likes = rng.geometric(0.05, total_posts) - 1
    retweets = rng.geometric(0.12, total_posts) - 1
    replies = rng.geometric(0.3, total_posts) - 1
    quotes = rng.geometric(0.5, total_posts) - 1
    is_repost = rng.random(total_posts) < 0.1

    post_idx = 0
    org_pos = 0
    pool_pos = 0
    for i, uid in enumerate(users):
        n_pool = int(pool_counts[i])
        n_org = int(organic_counts[i])
        urls = [campaign_url(int(pool_draws[pool_pos + t])) for t in range(n_pool)]
        urls += [organic_url(config, int(organic_draws[org_pos + t])) for t in range(n_org)]
        pool_pos += n_pool
        org_pos += n_org
        for url in urls:
            tags = [_HASHTAGS[int(t)] for t in tag_ix[post_idx, : int(n_tags[post_idx])]]
            mentions = [_MENTIONS[int(mention_ix[post_idx])]] if has_mention[post_idx] else []
            yield Post(
                post_id=f"p{post_idx:08d}",
                author_id=uid,
                created_at=_EPOCH + post_idx * 11,
                text=f"take a look {url}",
                raw_urls=[url],
                hashtags=tags,
                mentions=mentions,
                media_digests=[],
                language=_LANGS[int(lang_ix[post_idx])],
                likes=int(likes[post_idx]),
                retweets=int(retweets[post_idx]),
                replies=int(replies[post_idx]),
                quotes=int(quotes[post_idx]),
                is_repost=bool(is_repost[post_idx]),
            )
            post_idx += 1


def build_profiles(config: SynthConfig) -> list[UserProfile]:
    users = _user_ids(config)
    profiles = []
    for i, uid in enumerate(users):
        if i < config.n_organic:
            profiles.append(UserProfile(
                user_id=uid,
                handle=uid,
                display_name=f"User {i}",
                bio=_ORGANIC_BIOS[i % len(_ORGANIC_BIOS)],
            ))
        else:
            outlet = campaign_url(i % max(1, config.campaign_pool_size)).split("/featured")[0]
            profiles.append(UserProfile(
                user_id=uid,
                handle=uid,
                display_name=f"User {i}",
                bio=f"{_CAMPAIGN_BIO} #standup #speakout",
                bio_urls=[outlet],
            ))
    return profiles


def generate(config: SynthConfig) -> tuple[list[Post], list[UserProfile], GroundTruth]:
    """Materialize the full corpus; see iter_posts for the streaming form."""
    posts = list(iter_posts(config))
    profiles = build_profiles(config)
    truth = GroundTruth(coordinated_ids=set(_user_ids(config)[config.n_organic:]))
    return posts, profiles, truth


def ground_truth(config: SynthConfig) -> GroundTruth:
    return GroundTruth(coordinated_ids=set(_user_ids(config)[config.n_organic:]))


def post_record(post: Post) -> dict:
    return {
        "post_id": post.post_id,
        "author_id": post.author_id,
        "created_at": post.created_at,
        "text": post.text,
        "urls": post.raw_urls,
        "hashtags": post.hashtags,
        "mentions": post.mentions,
        "media_digests": post.media_digests,
        "language": post.language,
        "likes": post.likes,
        "retweets": post.retweets,
        "replies": post.replies,
        "quotes": post.quotes,
        "is_repost": post.is_repost,
    }


def profile_record(profile: UserProfile) -> dict:
    return {
        "user_id": profile.user_id,
        "handle": profile.handle,
        "display_name": profile.display_name,
        "bio": profile.bio,
        "bio_urls": profile.bio_urls,
        "profile_image_digest": profile.profile_image_digest,
        "cover_image_digest": profile.cover_image_digest,
        "suspended": profile.suspended,
    }


def write_corpus(config: SynthConfig, posts_path: str, profiles_path: str,
                 truth_path: str) -> int:
    """Stream the corpus to .jsonl/.json files; returns the post count."""
    n = 0
    with atomic_open(posts_path) as fh:
        for post in iter_posts(config):
            fh.write(json.dumps(post_record(post), sort_keys=True))
            fh.write("\n")
            n += 1
    with atomic_open(profiles_path) as fh:
        for profile in build_profiles(config):
            fh.write(json.dumps(profile_record(profile), sort_keys=True))
            fh.write("\n")
    truth = ground_truth(config)
    with atomic_open(truth_path) as fh:
        json.dump(
            {"coordinated_ids": sorted(truth.coordinated_ids), "config": _config_dict(config)},
            fh, sort_keys=True,
        )
        fh.write("\n")
    return n


def _config_dict(config: SynthConfig) -> dict:
    d = asdict(config)
    d["shares_per_user"] = list(config.shares_per_user)
    d["rng"] = RNG_NAME
    return d


@dataclass
class Metrics:
    tp: int
    fp: int
    fn: int
    precision: float | None
    recall: float | None
    f1: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(flagged, truth) -> Metrics:
    """Compare a flagged set against ground truth.

    Accepts a CoordinationReport or a plain set for *flagged*, and a
    GroundTruth or a plain set for *truth*. Precision is 1.0 when both
    sides are empty and None (undefined) when nothing was flagged but
    coordination exists; recall is None when there is no ground truth to
    recover.
    """
    flagged_set = set(getattr(flagged, "flagged", flagged))
    truth_set = set(getattr(truth, "coordinated_ids", truth))
    tp = len(flagged_set & truth_set)
    fp = len(flagged_set - truth_set)
    fn = len(truth_set - flagged_set)

    if flagged_set:
        precision: float | None = tp / len(flagged_set)
    else:
        precision = 1.0 if not truth_set else None
    if truth_set:
        recall: float | None = tp / len(truth_set)
    else:
        recall = 1.0 if not flagged_set else None
    if precision is None or recall is None:
        f1: float | None = None
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return Metrics(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)


SYNTH_GRID_KEYS = {
    "seed", "n_organic", "n_coordinated", "url_catalog_size", "zipf_exponent",
    "campaign_pool_size", "campaign_overlap", "shares_min", "shares_max",
}
PIPELINE_GRID_KEYS = {
    "min_urls", "tfidf_variant", "similarity_threshold", "k_core", "percentile",
}


def sweep(base_synth: SynthConfig, grid: dict[str, list], pipeline_params: dict | None = None,
          threads: int = 1) -> list[dict]:
    """One detection run per grid point, in deterministic grid order.

    Grid keys may name SynthConfig fields or pipeline parameters. Failed
    runs become rows with a nonempty "error" column; the sweep continues.
    """
    from . import pipeline  # deferred: pipeline imports this module's sibling types

    unknown = set(grid) - SYNTH_GRID_KEYS - PIPELINE_GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown sweep parameter(s): {sorted(unknown)}")
    base_pipeline = {
        "min_urls": 5, "tfidf_variant": "raw", "similarity_threshold": 0.5,
        "k_core": 0, "percentile": 99.0,
    }
    base_pipeline.update(pipeline_params or {})

    keys = list(grid)
    rows = []
    for values in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, values))
        row = dict(point)
        try:
            synth_kwargs = asdict(base_synth)
            synth_kwargs["shares_per_user"] = tuple(base_synth.shares_per_user)
            for k, v in point.items():
                if k in SYNTH_GRID_KEYS:
                    if k == "shares_min":
                        synth_kwargs["shares_per_user"] = (v, synth_kwargs["shares_per_user"][1])
                    elif k == "shares_max":
                        synth_kwargs["shares_per_user"] = (synth_kwargs["shares_per_user"][0], v)
                    else:
                        synth_kwargs[k] = v
            params = dict(base_pipeline)
            params.update({k: v for k, v in point.items() if k in PIPELINE_GRID_KEYS})

            config = SynthConfig(**synth_kwargs)
            posts, _, truth = generate(config)
            result = pipeline.detect_in_memory(posts, threads=threads, **params)
            metrics = evaluate(result.report, truth)
            row.update(metrics.to_dict())
            row["n_flagged"] = len(result.report.flagged)
            row["n_nodes"] = result.network.n_nodes
            row["n_edges"] = result.network.n_edges
            row["error"] = ""
        except Exception as exc:  # noqa: BLE001 - a failed point must not kill the sweep
            row.update({"tp": "", "fp": "", "fn": "", "precision": "", "recall": "",
                        "f1": "", "n_flagged": "", "n_nodes": "", "n_edges": ""})
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows
