"""Corpus ingestion: line-delimited JSON parsing, activity filtering, stats.

Input files are .jsonl with one object per line. Field names are remappable
via a schema dict (canonical name -> input field name); the canonical names
are the defaults documented in DEFAULT_POST_SCHEMA / DEFAULT_PROFILE_SCHEMA.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Iterator
from datetime import datetime, timezone

from .models import CorpusStats, Post, UserProfile
from .urls import CanonicalUrl, ExpansionMap, canonicalize_url

log = logging.getLogger(__name__)

DEFAULT_POST_SCHEMA = {
    "post_id": "post_id",
    "author_id": "author_id",
    "created_at": "created_at",
    "text": "text",
    "urls": "urls",
    "hashtags": "hashtags",
    "mentions": "mentions",
    "media_digests": "media_digests",
    "language": "language",
    "likes": "likes",
    "retweets": "retweets",
    "replies": "replies",
    "quotes": "quotes",
    "is_repost": "is_repost",
}

DEFAULT_PROFILE_SCHEMA = {
    "user_id": "user_id",
    "handle": "handle",
    "display_name": "display_name",
    "bio": "bio",
    "bio_urls": "bio_urls",
    "profile_image_digest": "profile_image_digest",
    "cover_image_digest": "cover_image_digest",
    "suspended": "suspended",
}

INTERACTION_FIELDS = ("likes", "retweets", "replies", "quotes")


def _as_timestamp(value) -> int:
    if value is None:
        return 0
    if isinstance(value, bool):
        return 0
    if isinstance(value, (int, float)):
        return int(value)
    try:
        return int(value)
    except (TypeError, ValueError):
        pass
    try:
        return int(datetime.fromisoformat(str(value).replace("Z", "+00:00"))
                   .replace(tzinfo=timezone.utc).timestamp())
    except ValueError:
        return 0


def _as_str_list(value) -> list[str]:
    if not value:
        return []
    if isinstance(value, str):
        return [value]
    return [str(v) for v in value if v is not None]


def _as_count(value) -> int:
    try:
        n = int(value)
    except (TypeError, ValueError):
        return 0
    return n if n >= 0 else 0


def _strip_tag(tag: str, prefix: str) -> str:
    return tag.lstrip(prefix).lower()


class JsonlReader:
    """Iterate records of a .jsonl file, counting rejected lines.

    Lines that are not valid JSON objects, or that fail the row factory,
    increment `rejects` and are skipped; the stream itself never raises on
    bad lines. The open() call propagates I/O errors.
    """

    def __init__(self, path: str, factory):
        self.path = path
        self.rejects = 0
        self._factory = factory

    def __iter__(self):
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    if not isinstance(record, dict):
                        raise ValueError("not an object")
                    item = self._factory(record)
                except (ValueError, KeyError):
                    self.rejects += 1
                    continue
                yield item


def _post_factory(schema: dict[str, str]):
    s = {**DEFAULT_POST_SCHEMA, **(schema or {})}

    def build(record: dict) -> Post:
        post_id = record.get(s["post_id"])
        author_id = record.get(s["author_id"])
        if not post_id or not author_id:
            raise KeyError("missing post_id/author_id")
        return Post(
            post_id=str(post_id),
            author_id=str(author_id),
            created_at=_as_timestamp(record.get(s["created_at"])),
            text=str(record.get(s["text"]) or ""),
            raw_urls=_as_str_list(record.get(s["urls"])),
            hashtags=[_strip_tag(t, "#") for t in _as_str_list(record.get(s["hashtags"]))],
            mentions=[_strip_tag(m, "@") for m in _as_str_list(record.get(s["mentions"]))],
            media_digests=_as_str_list(record.get(s["media_digests"])),
            language=str(record.get(s["language"]) or ""),
            likes=_as_count(record.get(s["likes"])),
            retweets=_as_count(record.get(s["retweets"])),
            replies=_as_count(record.get(s["replies"])),
            quotes=_as_count(record.get(s["quotes"])),
            is_repost=bool(record.get(s["is_repost"], False)),
        )

    return build


def _profile_factory(schema: dict[str, str]):
    s = {**DEFAULT_PROFILE_SCHEMA, **(schema or {})}

    def build(record: dict) -> UserProfile:
        user_id = record.get(s["user_id"])
        if not user_id:
            raise KeyError("missing user_id")
        suspended = record.get(s["suspended"])
        return UserProfile(
            user_id=str(user_id),
            handle=str(record.get(s["handle"]) or ""),
            display_name=str(record.get(s["display_name"]) or ""),
            bio=str(record.get(s["bio"]) or ""),
            bio_urls=_as_str_list(record.get(s["bio_urls"])),
            profile_image_digest=record.get(s["profile_image_digest"]) or None,
            cover_image_digest=record.get(s["cover_image_digest"]) or None,
            suspended=None if suspended is None else bool(suspended),
        )

    return build


def parse_posts(path: str, schema: dict[str, str] | None = None) -> JsonlReader:
    """Stream Posts from a .jsonl file; invalid lines are counted, not fatal."""
    return JsonlReader(path, _post_factory(schema or {}))


def parse_profiles(path: str, schema: dict[str, str] | None = None) -> JsonlReader:
    """Stream UserProfiles from a .jsonl file."""
    return JsonlReader(path, _profile_factory(schema or {}))


class ShareLog:
    """Interned (user, canonical URL) share pairs collected in one pass.

    Keeps ids as integers so a million-share corpus stays small; the string
    tables map back to user ids and URL strings.
    """

    def __init__(self):
        self.user_table: list[str] = []
        self.url_table: list[str] = []
        self.url_domains: list[str] = []
        self._user_ids: dict[str, int] = {}
        self._url_ids: dict[str, int] = {}
        self.share_users: list[int] = []
        self.share_urls: list[int] = []
        self.user_share_counts: list[int] = []
        self.rejected_urls = 0

    def _user(self, user_id: str) -> int:
        idx = self._user_ids.get(user_id)
        if idx is None:
            idx = len(self.user_table)
            self._user_ids[user_id] = idx
            self.user_table.append(user_id)
            self.user_share_counts.append(0)
        return idx

    def _url(self, url: CanonicalUrl) -> int:
        idx = self._url_ids.get(url.full)
        if idx is None:
            idx = len(self.url_table)
            self._url_ids[url.full] = idx
            self.url_table.append(url.full)
            self.url_domains.append(url.registered_domain)
        return idx

    def add(self, user_id: str, url: CanonicalUrl) -> None:
        u = self._user(user_id)
        self.share_users.append(u)
        self.share_urls.append(self._url(url))
        self.user_share_counts[u] += 1

    def __len__(self) -> int:
        return len(self.share_users)

    def active_users(self, min_urls: int) -> set[str]:
        return {
            self.user_table[i]
            for i, n in enumerate(self.user_share_counts)
            if n >= min_urls
        }

    def iter_shares(self) -> Iterator[tuple[str, str]]:
        for u, v in zip(self.share_users, self.share_urls):
            yield self.user_table[u], self.url_table[v]


def collect_shares(posts: Iterable[Post], expansion: ExpansionMap | None = None) -> ShareLog:
    """Canonicalize every post URL once and log (author, URL) share pairs."""
    shares = ShareLog()
    cache: dict[str, CanonicalUrl | None] = {}
    for post in posts:
        for raw in post.raw_urls:
            url = cache.get(raw, _MISSING)
            if url is _MISSING:
                url = canonicalize_url(raw)
                if url is not None and expansion is not None:
                    url = expansion.apply(url)
                cache[raw] = url
            if url is None:
                shares.rejected_urls += 1
                continue
            shares.add(post.author_id, url)
    return shares


_MISSING = object()


def filter_active_users(posts: Iterable[Post], min_urls: int) -> set[str]:
    """Users whose posts contain at least *min_urls* canonicalizable URL shares."""
    if min_urls < 1:
        raise ValueError("min_urls must be >= 1")
    return collect_shares(posts).active_users(min_urls)


def compute_corpus_stats(posts: Iterable[Post]) -> CorpusStats:
    """Exact descriptive counts; order-independent by construction."""
    hashtags: Counter[str] = Counter()
    mentions: Counter[str] = Counter()
    domains: Counter[str] = Counter()
    languages: Counter[str] = Counter()
    histograms: dict[str, Counter[int]] = {f: Counter() for f in INTERACTION_FIELDS}
    users: set[str] = set()
    n_posts = 0
    rejected = 0
    cache: dict[str, str | None] = {}

    for post in posts:
        n_posts += 1
        users.add(post.author_id)
        hashtags.update(post.hashtags)
        mentions.update(post.mentions)
        if post.language:
            languages[post.language] += 1
        for field in INTERACTION_FIELDS:
            histograms[field][getattr(post, field)] += 1
        for raw in post.raw_urls:
            if raw not in cache:
                url = canonicalize_url(raw)
                cache[raw] = url.registered_domain if url else None
            domain = cache[raw]
            if domain is None:
                rejected += 1
            else:
                domains[domain] += 1

    return CorpusStats(
        n_posts=n_posts,
        n_users=len(users),
        hashtag_counts=dict(hashtags),
        mention_counts=dict(mentions),
        domain_counts=dict(domains),
        language_distribution=dict(languages),
        interaction_histograms={f: dict(h) for f, h in histograms.items()},
        rejected_urls=rejected,
    )


def top_k(counts: dict[str, int], k: int) -> list[tuple[str, int]]:
    """Highest-count items, ties broken alphabetically for stable output."""
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def load_suspended_handles(path: str) -> set[str]:
    """Newline-delimited handle list; '@' prefixes and case are ignored."""
    handles = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            handle = line.strip().lstrip("@")
            if handle:
                handles.add(handle.casefold())
    return handles
