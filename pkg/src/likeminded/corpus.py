"""Tweet records, line-delimited ingestion, and corpus-level statistics.

The on-disk format is one JSON object per line (UTF-8, LF) with keys
``id``, ``author_id``, ``author_handle``, ``created_at`` (epoch seconds),
``text``, ``hashtags`` (array of strings) and optionally ``retweet_of``
(the id of the original author when the record is a retweet).
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .core import EmptyCorpusError, ValidationError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TweetRecord:
    """A single post. ``retweet_of`` holds the original author's id, if any."""

    tweet_id: str
    author_id: str
    author_handle: str
    created_at: int
    text: str
    hashtags: tuple[str, ...] = ()
    retweet_of: str | None = None

    def __post_init__(self) -> None:
        if not self.tweet_id or not self.author_id:
            raise ValidationError("tweet_id and author_id must be non-empty")
        for tag in self.hashtags:
            if not tag or "#" in tag or any(ch.isspace() for ch in tag):
                raise ValidationError(f"invalid hashtag {tag!r} in tweet {self.tweet_id}")
        if self.retweet_of is not None and self.retweet_of == self.author_id:
            raise ValidationError(f"tweet {self.tweet_id} retweets its own author")

    @property
    def is_retweet(self) -> bool:
        return self.retweet_of is not None


@dataclass(frozen=True)
class Corpus:
    """An immutable record collection with derived per-user indexes.

    ``user_index`` and ``retweet_count_by_original_author`` are always
    rebuilt from ``records``; they carry no state of their own.
    """

    records: tuple[TweetRecord, ...]
    user_index: dict[str, tuple[int, ...]]
    retweet_count_by_original_author: dict[str, int]
    skipped_malformed: int = 0
    skipped_duplicates: int = 0

    @classmethod
    def from_records(
        cls,
        records: Iterable[TweetRecord],
        skipped_malformed: int = 0,
        skipped_duplicates: int = 0,
    ) -> "Corpus":
        recs = tuple(records)
        positions: dict[str, list[int]] = {}
        retweets: Counter[str] = Counter()
        seen_ids: set[str] = set()
        for pos, rec in enumerate(recs):
            if rec.tweet_id in seen_ids:
                raise ValidationError(f"duplicate tweet_id {rec.tweet_id!r}")
            seen_ids.add(rec.tweet_id)
            positions.setdefault(rec.author_id, []).append(pos)
            if rec.retweet_of is not None:
                retweets[rec.retweet_of] += 1
        return cls(
            records=recs,
            user_index={uid: tuple(p) for uid, p in positions.items()},
            retweet_count_by_original_author=dict(retweets),
            skipped_malformed=skipped_malformed,
            skipped_duplicates=skipped_duplicates,
        )

    @property
    def total_tweets(self) -> int:
        return len(self.records)

    @property
    def distinct_users(self) -> int:
        return len(self.user_index)

    @property
    def total_retweets(self) -> int:
        return sum(self.retweet_count_by_original_author.values())

    @property
    def skipped_count(self) -> int:
        return self.skipped_malformed + self.skipped_duplicates


@dataclass(frozen=True)
class CorpusStats:
    total_tweets: int
    distinct_users: int
    total_retweets: int
    top_k: int
    retweet_share_of_top_k: float


def _parse_line(line: str) -> TweetRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValidationError("record line is not an object")
    tweet_id = obj["id"]
    author_id = obj["author_id"]
    author_handle = obj.get("author_handle", "")
    created_at = obj["created_at"]
    text = obj.get("text", "")
    raw_tags = obj.get("hashtags", [])
    retweet_of = obj.get("retweet_of")
    if not isinstance(tweet_id, str) or not isinstance(author_id, str):
        raise ValidationError("id and author_id must be strings")
    if not isinstance(author_handle, str) or not isinstance(text, str):
        raise ValidationError("author_handle and text must be strings")
    if isinstance(created_at, bool) or not isinstance(created_at, int):
        raise ValidationError("created_at must be an integer")
    if not isinstance(raw_tags, list) or any(not isinstance(t, str) for t in raw_tags):
        raise ValidationError("hashtags must be an array of strings")
    if retweet_of is not None and not isinstance(retweet_of, str):
        raise ValidationError("retweet_of must be a string when present")
    hashtags = tuple(t[1:] if t.startswith("#") else t for t in raw_tags)
    return TweetRecord(
        tweet_id=tweet_id,
        author_id=author_id,
        author_handle=author_handle,
        created_at=created_at,
        text=text,
        hashtags=hashtags,
        retweet_of=retweet_of,
    )


def ingest(path: str | Path) -> Corpus:
    """Read a line-delimited record file into a :class:`Corpus`.

    Malformed lines and duplicate tweet ids are counted and skipped
    (first record wins). Raises :class:`EmptyCorpusError` when no line
    parses, and propagates ``OSError`` for unreadable files.
    """
    path = Path(path)
    records: list[TweetRecord] = []
    seen: set[str] = set()
    malformed = 0
    duplicates = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = _parse_line(line)
            except (json.JSONDecodeError, KeyError, ValidationError) as exc:
                malformed += 1
                log.debug("skipping malformed line %d of %s: %s", lineno, path, exc)
                continue
            if rec.tweet_id in seen:
                duplicates += 1
                continue
            seen.add(rec.tweet_id)
            records.append(rec)
    if not records:
        raise EmptyCorpusError(f"no parseable records in {path}")
    return Corpus.from_records(records, skipped_malformed=malformed, skipped_duplicates=duplicates)


def record_to_obj(rec: TweetRecord) -> dict:
    obj = {
        "id": rec.tweet_id,
        "author_id": rec.author_id,
        "author_handle": rec.author_handle,
        "created_at": rec.created_at,
        "text": rec.text,
        "hashtags": list(rec.hashtags),
    }
    if rec.retweet_of is not None:
        obj["retweet_of"] = rec.retweet_of
    return obj


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    """Serialize records back to the line-delimited format (round-trip safe)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in corpus.records:
            fh.write(json.dumps(record_to_obj(rec), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def top_retweeted_authors(corpus: Corpus, k: int) -> list[tuple[str, int]]:
    """The ``k`` most-retweeted author ids with counts, ties broken by id."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    ranked = sorted(
        corpus.retweet_count_by_original_author.items(), key=lambda item: (-item[1], item[0])
    )
    return ranked[:k]


def stats(corpus: Corpus, top_k: int) -> CorpusStats:
    """Corpus totals plus the retweet share captured by the top ``top_k`` authors."""
    total_retweets = corpus.total_retweets
    if total_retweets == 0:
        share = 0.0
    else:
        top = {author for author, _ in top_retweeted_authors(corpus, top_k)}
        captured = sum(
            count
            for author, count in corpus.retweet_count_by_original_author.items()
            if author in top
        )
        share = captured / total_retweets
    return CorpusStats(
        total_tweets=corpus.total_tweets,
        distinct_users=corpus.distinct_users,
        total_retweets=total_retweets,
        top_k=top_k,
        retweet_share_of_top_k=share,
    )


def merge_corpora(parts: Sequence[Corpus]) -> Corpus:
    """Merge shard corpora in order, deduplicating tweet ids across shards.

    Merging shards in file order reproduces single-pass ingestion exactly;
    the derived indexes are order-insensitive.
    """
    if not parts:
        raise ValidationError("merge_corpora needs at least one corpus")
    records: list[TweetRecord] = []
    seen: set[str] = set()
    malformed = 0
    duplicates = 0
    for part in parts:
        malformed += part.skipped_malformed
        duplicates += part.skipped_duplicates
        for rec in part.records:
            if rec.tweet_id in seen:
                duplicates += 1
                continue
            seen.add(rec.tweet_id)
            records.append(rec)
    return Corpus.from_records(records, skipped_malformed=malformed, skipped_duplicates=duplicates)


def retweeting_users(corpus: Corpus) -> set[str]:
    """Users that posted at least one retweet."""
    return {rec.author_id for rec in corpus.records if rec.is_retweet}
