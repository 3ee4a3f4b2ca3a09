import json
import random

import pytest

from coshare.ingest import (
    collect_shares,
    compute_corpus_stats,
    filter_active_users,
    load_suspended_handles,
    parse_posts,
    parse_profiles,
    top_k,
)
from coshare.models import Post


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r if isinstance(r, str) else json.dumps(r))
            fh.write("\n")


def post(author, urls=(), **kw):
    post.counter = getattr(post, "counter", 0) + 1
    return Post(post_id=f"p{post.counter}", author_id=author, raw_urls=list(urls), **kw)


def test_parse_skips_malformed_lines(tmp_path):
    path = tmp_path / "posts.jsonl"
    write_jsonl(path, [
        {"post_id": "1", "author_id": "a"},
        "{this is not json",
        {"post_id": "2", "author_id": "b"},
    ])
    reader = parse_posts(str(path))
    posts = list(reader)
    assert [p.post_id for p in posts] == ["1", "2"]
    assert reader.rejects == 1


def test_parse_empty_file(tmp_path):
    path = tmp_path / "posts.jsonl"
    path.write_text("")
    reader = parse_posts(str(path))
    assert list(reader) == []
    assert reader.rejects == 0


def test_parse_preserves_raw_urls(tmp_path):
    path = tmp_path / "posts.jsonl"
    write_jsonl(path, [{"post_id": "1", "author_id": "a", "urls": ["https://t.co/abc"]}])
    (p,) = parse_posts(str(path))
    assert p.raw_urls == ["https://t.co/abc"]


def test_parse_missing_ids_counted(tmp_path):
    path = tmp_path / "posts.jsonl"
    write_jsonl(path, [{"post_id": "1"}, {"author_id": "a"}, {"post_id": "2", "author_id": "b"}])
    reader = parse_posts(str(path))
    assert len(list(reader)) == 1
    assert reader.rejects == 2


def test_parse_normalizes_tags_and_mentions(tmp_path):
    path = tmp_path / "posts.jsonl"
    write_jsonl(path, [{
        "post_id": "1", "author_id": "a",
        "hashtags": ["#MAGA2024", "Vote"], "mentions": ["@SomeOne"],
    }])
    (p,) = parse_posts(str(path))
    assert p.hashtags == ["maga2024", "vote"]
    assert p.mentions == ["someone"]


def test_parse_schema_remap(tmp_path):
    path = tmp_path / "posts.jsonl"
    write_jsonl(path, [{"id": "1", "user": "a", "links": ["http://x.org/1"]}])
    (p,) = parse_posts(str(path), {"post_id": "id", "author_id": "user", "urls": "links"})
    assert p.post_id == "1" and p.author_id == "a" and p.raw_urls == ["http://x.org/1"]


def test_parse_profiles(tmp_path):
    path = tmp_path / "profiles.jsonl"
    write_jsonl(path, [
        {"user_id": "a", "handle": "HandleA", "bio": "hello", "bio_urls": ["http://x.org"]},
        {"handle": "orphan"},
    ])
    reader = parse_profiles(str(path))
    profiles = list(reader)
    assert len(profiles) == 1 and profiles[0].handle == "HandleA"
    assert reader.rejects == 1


def test_missing_file_raises():
    with pytest.raises(OSError):
        list(parse_posts("/nonexistent/posts.jsonl"))


def test_filter_boundary_inclusion():
    posts = [post("u1", ["http://a.com/1"] * 5)]
    assert filter_active_users(posts, 5) == {"u1"}


def test_filter_excludes_url_free_users():
    posts = [post("u1")]
    for k in (1, 2, 5):
        assert filter_active_users(posts, k) == set()


def test_filter_counts_over_toy_corpus():
    posts = (
        [post("u1", [f"http://a.com/{i}"]) for i in range(5)]
        + [post("u2", ["http://a.com/0", "http://b.com/0"])]
        + [post("u3", ["http://c.com/0"])]
    )
    assert filter_active_users(posts, 2) == {"u1", "u2"}


def test_filter_counts_repeats():
    posts = [post("u1", ["http://a.com/same"] * 3)]
    assert filter_active_users(posts, 3) == {"u1"}


def test_filter_monotone_in_min_urls():
    rng = random.Random(0)
    posts = [
        post(f"u{i % 7}", [f"http://d{rng.randint(0, 4)}.com/x" for _ in range(rng.randint(0, 6))])
        for i in range(40)
    ]
    prev = None
    for k in range(1, 8):
        cur = filter_active_users(posts, k)
        if prev is not None:
            assert cur <= prev
        prev = cur


def test_filter_rejects_bad_min():
    with pytest.raises(ValueError):
        filter_active_users([], 0)


def test_stats_counts_and_conservation():
    posts = [
        post("u1", ["http://a.com/1", "not a url"], hashtags=["x", "y"], language="en", likes=3),
        post("u2", ["https://www.a.com/1"], hashtags=["x"], mentions=["m"], language="en"),
        post("u3", [], language="fr", likes=3),
    ]
    stats = compute_corpus_stats(posts)
    assert stats.n_posts == 3 and stats.n_users == 3
    assert stats.hashtag_counts == {"x": 2, "y": 1}
    assert stats.mention_counts == {"m": 1}
    assert stats.domain_counts == {"a.com": 2}
    assert stats.rejected_urls == 1
    assert sum(stats.language_distribution.values()) == 3
    assert stats.interaction_histograms["likes"][3] == 2


def test_stats_empty_corpus():
    stats = compute_corpus_stats([])
    assert stats.hashtag_counts == {} and stats.domain_counts == {}
    assert stats.n_posts == 0


def test_stats_permutation_invariant():
    rng = random.Random(1)
    posts = [
        post(f"u{rng.randint(0, 5)}", [f"http://d{rng.randint(0, 3)}.org/{rng.randint(0, 9)}"],
             hashtags=[f"t{rng.randint(0, 3)}"], likes=rng.randint(0, 4))
        for _ in range(60)
    ]
    a = compute_corpus_stats(posts)
    shuffled = posts[:]
    rng.shuffle(shuffled)
    b = compute_corpus_stats(shuffled)
    assert a == b


def test_collect_shares_interning_and_rejects():
    posts = [post("u1", ["http://a.com/1", "http://a.com/1", "::nope::"])]
    shares = collect_shares(posts)
    assert len(shares) == 2
    assert shares.rejected_urls == 1
    assert list(shares.iter_shares()) == [("u1", "http://a.com/1")] * 2


def test_top_k_ties_alphabetical():
    assert top_k({"b": 2, "a": 2, "c": 9}, 2) == [("c", 9), ("a", 2)]


def test_load_suspended_handles(tmp_path):
    path = tmp_path / "suspended.txt"
    path.write_text("@UserOne\nusertwo\n\n")
    assert load_suspended_handles(str(path)) == {"userone", "usertwo"}
