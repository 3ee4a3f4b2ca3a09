"""Account- and content-level forensics over a flagged account set.

Covers templated bios, identical bio hashtag sequences, duplicate media
posted independently by several accounts, domain-level share statistics,
and bio links pointing at common domains.
"""

from __future__ import annotations

import json
import logging
import re
import string
from collections import Counter, defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field

from .fileio import atomic_open
from .models import Post, UserProfile
from .urls import canonicalize_url

log = logging.getLogger(__name__)

HASHTAG_RE = re.compile(r"#(\w+)")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)

# Domain -> platform label used by domain_stats. "this-platform" marks the
# network the corpus itself came from.
DEFAULT_PLATFORM_MAP = {
    "youtube.com": "video-platform",
    "youtu.be": "video-platform",
    "facebook.com": "other-social",
    "instagram.com": "other-social",
    "reddit.com": "other-social",
    "t.me": "other-social",
    "x.com": "this-platform",
    "twitter.com": "this-platform",
    "t.co": "this-platform",
}


@dataclass
class BioCluster:
    normalized_text: str
    members: list[str]
    match_kind: str  # "exact_template" or "near_duplicate"


@dataclass
class HashtagSequenceCluster:
    hashtags: tuple[str, ...]
    members: list[str]


@dataclass
class DuplicateMediaGroup:
    media_digest: str
    postings: list[tuple[str, str, int]]  # (user_id, post_id, created_at)


@dataclass
class LinkTargetProfile:
    domain_counts: dict[str, int] = field(default_factory=dict)
    platform_counts: dict[str, int] = field(default_factory=dict)
    rejected_urls: int = 0


@dataclass
class BioLinkReport:
    domains: dict[str, list[str]] = field(default_factory=dict)  # domain -> user ids
    rejected_urls: int = 0


def normalize_bio(text: str) -> str:
    """Lowercase, strip ASCII punctuation, collapse whitespace. Idempotent."""
    lowered = text.lower().translate(_PUNCT_TABLE)
    return " ".join(lowered.split())


def char_ngrams(text: str, n: int = 3) -> set[str]:
    if len(text) < n:
        return {text} if text else set()
    return {text[i : i + n] for i in range(len(text) - n + 1)}


def jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def find_bio_templates(
    profiles: list[UserProfile],
    min_members: int = 2,
    jaccard_min: float = 0.8,
    probes: Iterable[str] | None = None,
) -> list[BioCluster]:
    """Cluster accounts by templated bios.

    Exact clusters group identical normalized bios; a supplied probe phrase
    also groups every bio that *contains* it, regardless of surrounding
    text. Near-duplicate clusters use character-3-gram Jaccard with
    single linkage and are reported only when they span more than one
    distinct normalized text.
    """
    if min_members < 2:
        raise ValueError("min_members must be >= 2")
    if not 0.0 < jaccard_min <= 1.0:
        raise ValueError("jaccard_min must be in (0, 1]")

    normalized = [(p.user_id, normalize_bio(p.bio)) for p in profiles if p.bio.strip()]
    clusters: list[BioCluster] = []

    for probe in probes or ():
        probe_norm = normalize_bio(probe)
        if not probe_norm:
            continue
        members = sorted(uid for uid, bio in normalized if probe_norm in bio)
        if len(members) >= min_members:
            clusters.append(BioCluster(probe_norm, members, "exact_template"))

    by_text: dict[str, list[str]] = defaultdict(list)
    for uid, bio in normalized:
        by_text[bio].append(uid)
    for text, members in sorted(by_text.items()):
        if len(members) >= min_members:
            clusters.append(BioCluster(text, sorted(members), "exact_template"))

    # Single-linkage over distinct texts passing the Jaccard threshold.
    texts = sorted(by_text)
    grams = [char_ngrams(t) for t in texts]
    parent = list(range(len(texts)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(len(texts)):
        for j in range(i + 1, len(texts)):
            if jaccard(grams[i], grams[j]) >= jaccard_min:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = defaultdict(list)
    for i in range(len(texts)):
        groups[find(i)].append(i)
    for members_idx in groups.values():
        if len(members_idx) < 2:
            continue
        members = sorted(uid for i in members_idx for uid in by_text[texts[i]])
        if len(members) >= min_members:
            rep = min((texts[i] for i in members_idx), key=lambda t: (len(t), t))
            clusters.append(BioCluster(rep, members, "near_duplicate"))

    clusters.sort(key=lambda c: (-len(c.members), c.match_kind, c.normalized_text))
    return clusters


def find_hashtag_sequences(
    profiles: list[UserProfile], min_members: int = 2
) -> list[HashtagSequenceCluster]:
    """Group accounts whose bios carry the same hashtags in the same order."""
    if min_members < 2:
        raise ValueError("min_members must be >= 2")
    by_seq: dict[tuple[str, ...], list[str]] = defaultdict(list)
    for p in profiles:
        tags = tuple(t.lower() for t in HASHTAG_RE.findall(p.bio))
        if tags:
            by_seq[tags].append(p.user_id)
    out = [
        HashtagSequenceCluster(seq, sorted(members))
        for seq, members in by_seq.items()
        if len(members) >= min_members
    ]
    out.sort(key=lambda c: (-len(c.members), c.hashtags))
    return out


def find_duplicate_media(
    posts: Iterable[Post], min_posters: int = 2
) -> list[DuplicateMediaGroup]:
    """Media digests posted as original content by several distinct accounts.

    Reposts are ignored entirely: a digest that cascades through reposts
    from a single original author is not evidence of coordination.
    """
    if min_posters < 2:
        raise ValueError("min_posters must be >= 2")
    postings: dict[str, list[tuple[str, str, int]]] = defaultdict(list)
    for post in posts:
        if post.is_repost:
            continue
        for digest in post.media_digests:
            postings[digest].append((post.author_id, post.post_id, post.created_at))
    groups = []
    for digest, items in postings.items():
        authors = {a for a, _, _ in items}
        if len(authors) >= min_posters:
            groups.append(DuplicateMediaGroup(digest, sorted(items)))
    groups.sort(key=lambda g: (-len(g.postings), g.media_digest))
    return groups


def domain_stats(
    posts: Iterable[Post],
    users: set[str] | None = None,
    platform_map: dict[str, str] | None = None,
) -> LinkTargetProfile:
    """Registered-domain counts over the selected users' posts.

    Every counted domain is classified by *platform_map* (falling back to
    "web"), so platform counts always sum to the domain total.
    """
    pmap = DEFAULT_PLATFORM_MAP if platform_map is None else platform_map
    domains: Counter[str] = Counter()
    platforms: Counter[str] = Counter()
    rejected = 0
    for post in posts:
        if users is not None and post.author_id not in users:
            continue
        for raw in post.raw_urls:
            url = canonicalize_url(raw)
            if url is None:
                rejected += 1
                continue
            domains[url.registered_domain] += 1
            platforms[pmap.get(url.registered_domain, "web")] += 1
    return LinkTargetProfile(
        domain_counts=dict(domains),
        platform_counts=dict(platforms),
        rejected_urls=rejected,
    )


def shared_bio_links(profiles: list[UserProfile]) -> BioLinkReport:
    """Domains that at least two accounts link from their bios."""
    by_domain: dict[str, set[str]] = defaultdict(set)
    rejected = 0
    for p in profiles:
        for raw in p.bio_urls:
            url = canonicalize_url(raw)
            if url is None:
                rejected += 1
                continue
            by_domain[url.registered_domain].add(p.user_id)
    domains = {
        d: sorted(users) for d, users in by_domain.items() if len(users) >= 2
    }
    return BioLinkReport(domains=domains, rejected_urls=rejected)


def forensics_report(
    profiles: list[UserProfile],
    posts: list[Post],
    flagged: set[str],
    min_members: int = 2,
    jaccard_min: float = 0.8,
    min_posters: int = 2,
    probes: Iterable[str] | None = None,
    platform_map: dict[str, str] | None = None,
) -> dict:
    """Run every forensic over the flagged subset and assemble one report."""
    profile_ids = {p.user_id for p in profiles}
    missing = sorted(flagged - profile_ids)
    if missing:
        log.warning("%d flagged user(s) have no profile", len(missing))
    flagged_profiles = [p for p in profiles if p.user_id in flagged]
    flagged_posts = [p for p in posts if p.author_id in flagged]

    bio_clusters = find_bio_templates(flagged_profiles, min_members, jaccard_min, probes)
    tag_clusters = find_hashtag_sequences(flagged_profiles, min_members)
    media_groups = find_duplicate_media(flagged_posts, min_posters)
    links = domain_stats(flagged_posts, platform_map=platform_map)
    bio_links = shared_bio_links(flagged_profiles)

    return {
        "flagged_count": len(flagged),
        "profiles_missing": missing,
        "bio_clusters": [
            {"normalized_text": c.normalized_text, "members": c.members,
             "match_kind": c.match_kind}
            for c in bio_clusters
        ],
        "hashtag_sequences": [
            {"hashtags": list(c.hashtags), "members": c.members} for c in tag_clusters
        ],
        "duplicate_media": [
            {"media_digest": g.media_digest,
             "postings": [[u, p, t] for u, p, t in g.postings]}
            for g in media_groups
        ],
        "domain_counts": dict(sorted(links.domain_counts.items())),
        "platform_counts": dict(sorted(links.platform_counts.items())),
        "rejected_urls": links.rejected_urls,
        "bio_link_domains": bio_links.domains,
        "bio_link_rejected": bio_links.rejected_urls,
    }


def write_forensics_json(report: dict, path: str) -> None:
    with atomic_open(path) as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
