import random

import pytest

from coshare.forensics import (
    char_ngrams,
    domain_stats,
    find_bio_templates,
    find_duplicate_media,
    find_hashtag_sequences,
    forensics_report,
    jaccard,
    normalize_bio,
    shared_bio_links,
)
from coshare.models import Post, UserProfile

PROBE = "Sick of the same old headlines? tap the link below"


def profile(uid, bio="", bio_urls=()):
    return UserProfile(user_id=uid, handle=uid, bio=bio, bio_urls=list(bio_urls))


def post(pid, author, media=(), urls=(), is_repost=False):
    return Post(post_id=pid, author_id=author, media_digests=list(media),
                raw_urls=list(urls), is_repost=is_repost)


def test_normalize_bio_idempotent():
    for text in ["Hello, WORLD!!", "  a   b\tc ", "#tag @name", "émojis 👍 stay"]:
        once = normalize_bio(text)
        assert normalize_bio(once) == once


def test_probe_groups_varied_surroundings():
    profiles = [
        profile(f"u{i}", f"patriot {i} here. {PROBE} — est. 20{i:02d}")
        for i in range(15)
    ]
    profiles.append(profile("organic", "just a regular account"))
    clusters = find_bio_templates(profiles, probes=[PROBE])
    exact = [c for c in clusters if c.match_kind == "exact_template"
             and c.normalized_text == normalize_bio(PROBE)]
    assert len(exact) == 1
    assert len(exact[0].members) == 15


def test_identical_bios_cluster_without_probe():
    profiles = [profile(f"u{i}", "Same Exact Bio!") for i in range(3)]
    (cluster,) = find_bio_templates(profiles)
    assert cluster.match_kind == "exact_template"
    assert len(cluster.members) == 3


def test_emoji_variants_near_duplicate():
    a = "real news for real people, follow the link"
    b = a + " 🔥🔥"
    grams_a, grams_b = char_ngrams(normalize_bio(a)), char_ngrams(normalize_bio(b))
    assert jaccard(grams_a, grams_b) >= 0.8  # brute-force check of the pair
    clusters = find_bio_templates([profile("u1", a), profile("u2", b)], jaccard_min=0.8)
    kinds = {c.match_kind for c in clusters}
    assert kinds == {"near_duplicate"}
    assert clusters[0].members == ["u1", "u2"]


def test_all_distinct_bios_no_clusters():
    profiles = [
        profile("u1", "astronomy and coffee"),
        profile("u2", "vintage bicycles restored"),
        profile("u3", "weather maps all day"),
    ]
    assert find_bio_templates(profiles) == []


def test_bio_param_validation():
    with pytest.raises(ValueError):
        find_bio_templates([], min_members=1)
    with pytest.raises(ValueError):
        find_bio_templates([], jaccard_min=0.0)


def test_hashtag_sequence_exact_order():
    seq_bio = "all in #maga2024 #trump2024theonlychoice #trump2024"
    profiles = [profile("u1", seq_bio), profile("u2", "vote! " + seq_bio.split(" ", 2)[2])]
    clusters = find_hashtag_sequences(profiles)
    assert len(clusters) == 1
    assert clusters[0].hashtags == ("maga2024", "trump2024theonlychoice", "trump2024")
    assert clusters[0].members == ["u1", "u2"]


def test_hashtag_sequence_order_sensitive():
    profiles = [
        profile("u1", "#alpha #beta"),
        profile("u2", "#beta #alpha"),
    ]
    assert find_hashtag_sequences(profiles) == []


def test_hashtag_sequence_empty_bios():
    assert find_hashtag_sequences([profile("u1", "no tags here")]) == []


def test_duplicate_media_three_independent_posters():
    posts = [post(f"p{i}", f"u{i}", media=["digest-x"]) for i in range(3)]
    posts += [post(f"r{i}", f"reposter{i}", media=["digest-x"], is_repost=True)
              for i in range(50)]
    (group,) = find_duplicate_media(posts)
    assert group.media_digest == "digest-x"
    assert len(group.postings) == 3
    assert {u for u, _, _ in group.postings} == {"u0", "u1", "u2"}


def test_duplicate_media_cascade_excluded():
    posts = [post("p0", "origin", media=["d"])]
    posts += [post(f"r{i}", f"u{i}", media=["d"], is_repost=True) for i in range(100)]
    assert find_duplicate_media(posts) == []


def test_duplicate_media_distinct_digests():
    posts = [post(f"p{i}", f"u{i}", media=[f"d{i}"]) for i in range(5)]
    assert find_duplicate_media(posts) == []


def test_duplicate_media_never_contains_reposts():
    rng = random.Random(0)
    posts = []
    for i in range(200):
        posts.append(post(f"p{i}", f"u{rng.randint(0, 10)}",
                          media=[f"d{rng.randint(0, 5)}"],
                          is_repost=rng.random() < 0.5))
    repost_ids = {p.post_id for p in posts if p.is_repost}
    for group in find_duplicate_media(posts):
        assert not any(pid in repost_ids for _, pid, _ in group.postings)


def test_domain_stats_counts_and_platforms():
    posts = [
        post("p1", "u1", urls=["https://youtu.be/abc", "https://www.example.com/x"]),
        post("p2", "u1", urls=["https://youtube.com/watch?v=1"]),
        post("p3", "u2", urls=["https://facebook.com/page"]),
        post("p4", "outsider", urls=["https://ignored.com/y"]),
    ]
    stats = domain_stats(posts, users={"u1", "u2"})
    assert stats.domain_counts == {
        "youtu.be": 1, "example.com": 1, "youtube.com": 1, "facebook.com": 1,
    }
    assert stats.platform_counts == {"video-platform": 2, "web": 1, "other-social": 1}
    assert sum(stats.platform_counts.values()) == sum(stats.domain_counts.values())


def test_domain_stats_no_links():
    stats = domain_stats([post("p1", "u1")], users={"u1"})
    assert stats.domain_counts == {} and stats.platform_counts == {}


def test_domain_stats_conservation_random():
    rng = random.Random(5)
    posts = []
    good = 0
    for i in range(100):
        urls = []
        for _ in range(rng.randint(0, 3)):
            if rng.random() < 0.9:
                urls.append(f"https://d{rng.randint(0, 10)}.net/{rng.randint(0, 5)}")
                good += 1
            else:
                urls.append("::broken::")
        posts.append(post(f"p{i}", "u1", urls=urls))
    stats = domain_stats(posts)
    assert sum(stats.domain_counts.values()) == good
    assert sum(stats.platform_counts.values()) == good


def test_shared_bio_links_two_outlets():
    profiles = [
        profile(f"u{i}", bio_urls=["https://meigsbarrett.com"]) for i in range(8)
    ] + [
        profile(f"v{i}", bio_urls=["https://boveed.beehiiv.com/"]) for i in range(7)
    ]
    report = shared_bio_links(profiles)
    assert set(report.domains) == {"meigsbarrett.com", "boveed.beehiiv.com"}
    assert len(report.domains["meigsbarrett.com"]) == 8


def test_shared_bio_links_singletons_dropped():
    profiles = [profile("u1", bio_urls=["https://a.com"]),
                profile("u2", bio_urls=["https://b.com"])]
    assert shared_bio_links(profiles).domains == {}


def test_shared_bio_links_malformed_counted():
    profiles = [profile("u1", bio_urls=["::nope::"])]
    report = shared_bio_links(profiles)
    assert report.domains == {} and report.rejected_urls == 1


def test_forensics_report_assembles(tmp_path):
    profiles = [profile("u1", PROBE), profile("u2", PROBE)]
    posts = [post("p1", "u1", urls=["https://youtu.be/z"], media=["m"]),
             post("p2", "u2", media=["m"])]
    report = forensics_report(profiles, posts, {"u1", "u2", "ghost"}, probes=[PROBE])
    assert report["flagged_count"] == 3
    assert report["profiles_missing"] == ["ghost"]
    assert len(report["bio_clusters"]) >= 1
    assert len(report["duplicate_media"]) == 1
    assert report["domain_counts"] == {"youtu.be": 1}


def test_forensics_input_order_invariant():
    rng = random.Random(9)
    profiles = [profile(f"u{i}", f"bio {i % 4}") for i in range(20)]
    posts = [post(f"p{i}", f"u{i % 20}", urls=[f"https://d{i % 3}.org/a"]) for i in range(40)]
    flagged = {f"u{i}" for i in range(20)}
    a = forensics_report(profiles, posts, flagged)
    profiles2, posts2 = profiles[:], posts[:]
    rng.shuffle(profiles2)
    rng.shuffle(posts2)
    b = forensics_report(profiles2, posts2, flagged)
    assert a == b
