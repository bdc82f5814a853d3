import json
from collections import Counter

import numpy as np
import pytest

from likeminded.core import EmptyCorpusError, ValidationError
from likeminded.corpus import (
    Corpus,
    TweetRecord,
    ingest,
    merge_corpora,
    stats,
    write_corpus,
)

from helpers import corpus_of, rec, record_line


def test_ingest_counts_valid_lines(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        "\n".join(
            [
                record_line("t1", "alice"),
                record_line("t2", "bob", retweet_of="alice"),
                record_line("t3", "carol", hashtags=["corona"]),
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    corpus = ingest(path)
    assert corpus.total_tweets == 3
    assert corpus.skipped_count == 0


def test_ingest_skips_malformed_lines(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        record_line("t1", "alice") + "\n" + "{not json\n" + record_line("t2", "bob") + "\n",
        encoding="utf-8",
    )
    corpus = ingest(path)
    assert corpus.total_tweets == 2
    assert corpus.skipped_count == 1
    assert corpus.skipped_malformed == 1


def test_ingest_keeps_first_duplicate(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        record_line("t1", "alice", text="first") + "\n" + record_line("t1", "bob") + "\n",
        encoding="utf-8",
    )
    corpus = ingest(path)
    assert corpus.total_tweets == 1
    assert corpus.records[0].author_id == "alice"
    assert corpus.skipped_duplicates == 1


def test_ingest_strips_leading_hash_and_rejects_bad_hashtags(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        record_line("t1", "alice", hashtags=["#Corona"])
        + "\n"
        + record_line("t2", "bob", hashtags=["has space"])
        + "\n"
        + record_line("t3", "carol", hashtags=[""])
        + "\n",
        encoding="utf-8",
    )
    corpus = ingest(path)
    assert corpus.total_tweets == 1
    assert corpus.records[0].hashtags == ("Corona",)
    assert corpus.skipped_malformed == 2


def test_ingest_rejects_self_retweet_lines(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        record_line("t1", "alice", retweet_of="alice") + "\n" + record_line("t2", "bob") + "\n",
        encoding="utf-8",
    )
    corpus = ingest(path)
    assert corpus.total_tweets == 1
    assert corpus.skipped_malformed == 1


def test_ingest_empty_or_unparseable_raises(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(EmptyCorpusError):
        ingest(empty)
    junk = tmp_path / "junk.jsonl"
    junk.write_text("nope\nstill nope\n", encoding="utf-8")
    with pytest.raises(EmptyCorpusError):
        ingest(junk)


def test_ingest_unreadable_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        ingest(tmp_path / "missing.jsonl")


def test_ingest_10k_lines_matches_line_scan_tally(tmp_path):
    # oracle: a single-pass recount over the raw file, independent of Corpus
    rng = np.random.default_rng(404)
    authors = [f"u{i}" for i in range(80)]
    targets = [f"star{i}" for i in range(12)]
    lines = []
    for n in range(10_000):
        author = authors[int(rng.integers(len(authors)))]
        if rng.random() < 0.6:
            target = targets[int(rng.integers(len(targets)))]
            lines.append(record_line(f"t{n}", author, retweet_of=target))
        else:
            lines.append(record_line(f"t{n}", author))
    path = tmp_path / "big.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    oracle: Counter = Counter()
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            if "retweet_of" in obj:
                oracle[obj["retweet_of"]] += 1

    corpus = ingest(path)
    assert corpus.retweet_count_by_original_author == dict(oracle)


def test_roundtrip_ingest_write_ingest(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text(
        "\n".join(
            [
                record_line("t1", "alice", hashtags=["Corona", "Impfung"], text="hallo wältچ"),
                record_line("t2", "bob", retweet_of="alice", created_at=123),
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    first = ingest(path)
    out = tmp_path / "rewritten.jsonl"
    write_corpus(first, out)
    second = ingest(out)
    assert first.records == second.records


def test_record_invariants_enforced():
    with pytest.raises(ValidationError):
        TweetRecord("t1", "alice", "alice", 0, "", hashtags=("#bad",))
    with pytest.raises(ValidationError):
        TweetRecord("t1", "alice", "alice", 0, "", retweet_of="alice")
    with pytest.raises(ValidationError):
        TweetRecord("", "alice", "alice", 0, "")


def test_direct_construction_rejects_duplicate_ids():
    with pytest.raises(ValidationError):
        Corpus.from_records([rec("t1", "a"), rec("t1", "b")])


def test_indexes_rebuildable_from_records():
    corpus = corpus_of(
        rec("t1", "a"),
        rec("t2", "b", retweet_of="a"),
        rec("t3", "b", retweet_of="a"),
        rec("t4", "c", retweet_of="b"),
    )
    rebuilt = Corpus.from_records(corpus.records)
    assert rebuilt.user_index == corpus.user_index
    assert rebuilt.retweet_count_by_original_author == corpus.retweet_count_by_original_author


def test_stats_no_retweets_is_zero():
    corpus = corpus_of(rec("t1", "a"), rec("t2", "b"))
    assert stats(corpus, 10).retweet_share_of_top_k == 0.0


def test_stats_single_target_full_share():
    corpus = corpus_of(rec("t1", "a", retweet_of="x"), rec("t2", "b", retweet_of="x"))
    result = stats(corpus, 1)
    assert result.retweet_share_of_top_k == 1.0
    assert result.total_retweets == 2


def test_stats_matches_brute_force_tally_on_synthetic():
    from likeminded.synth import SynthConfig, generate

    corpus, _ = generate(
        SynthConfig(
            n_communities=4,
            influencers_per_community=25,
            users_per_community=200,
            noise_users=30,
            retweets_per_user=6.0,
            hashtags_per_community=0,
            shared_hashtags=0,
            hashtag_posts_per_user=0.0,
            seed=99,
        )
    )
    k = 100
    # oracle: rank targets by (count desc, id asc) straight off the records
    tally: Counter = Counter()
    for record in corpus.records:
        if record.retweet_of is not None:
            tally[record.retweet_of] += 1
    top = set(
        [a for a, _ in sorted(tally.items(), key=lambda item: (-item[1], item[0]))[:k]]
    )
    expected = sum(c for a, c in tally.items() if a in top) / sum(tally.values())
    assert abs(stats(corpus, k).retweet_share_of_top_k - expected) < 1e-12


def test_stats_monotone_in_k():
    corpus = corpus_of(
        *[rec(f"t{i}", f"u{i}", retweet_of=f"x{i % 7}") for i in range(40)]
    )
    shares = [stats(corpus, k).retweet_share_of_top_k for k in range(1, 10)]
    assert all(a <= b + 1e-12 for a, b in zip(shares, shares[1:]))


def test_merge_in_shard_order_equals_single_pass(tmp_path):
    lines = [record_line(f"t{i}", f"u{i % 5}", retweet_of="x" if i % 2 else None) for i in range(30)]
    full = tmp_path / "full.jsonl"
    full.write_text("\n".join(lines) + "\n", encoding="utf-8")
    shard_paths = []
    for s in range(3):
        p = tmp_path / f"shard{s}.jsonl"
        p.write_text("\n".join(lines[s * 10 : (s + 1) * 10]) + "\n", encoding="utf-8")
        shard_paths.append(p)
    single = ingest(full)
    merged = merge_corpora([ingest(p) for p in shard_paths])
    assert merged.records == single.records
    assert merged.user_index == single.user_index


def test_merge_is_associative_and_order_insensitive_on_indexes(tmp_path):
    parts = []
    for s in range(3):
        p = tmp_path / f"s{s}.jsonl"
        p.write_text(
            "\n".join(record_line(f"t{s}_{i}", f"u{i}", retweet_of=f"x{s}") for i in range(8)) + "\n",
            encoding="utf-8",
        )
        parts.append(ingest(p))
    a, b, c = parts
    left = merge_corpora([merge_corpora([a, b]), c])
    right = merge_corpora([a, merge_corpora([b, c])])
    assert left.records == right.records
    permuted = merge_corpora([c, a, b])
    assert sorted(permuted.records, key=lambda r: r.tweet_id) == sorted(
        left.records, key=lambda r: r.tweet_id
    )
    assert permuted.retweet_count_by_original_author == left.retweet_count_by_original_author
