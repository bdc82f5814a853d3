"""Synthetic corpora with planted communities and power-law influencer popularity.

Every downstream stage is tested against corpora from this generator: the
planted community assignment is the ground truth that recovered clusters
are scored against (via :func:`adjusted_rand_index`).
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Mapping

import numpy as np

from .core import NOISE, ValidationError
from .corpus import Corpus, TweetRecord

# Synthetic timestamps start here (an arbitrary fixed epoch); only ordering
# matters downstream.
_EPOCH = 1_614_556_800


@dataclass(frozen=True)
class SynthConfig:
    n_communities: int = 3
    influencers_per_community: int = 10
    users_per_community: int = 100
    noise_users: int = 0
    p_in: float = 0.9
    retweets_per_user: float = 10.0
    power_law_b: float = 39_215.0
    power_law_m: float = 0.65
    hashtags_per_community: int = 20
    shared_hashtags: int = 5
    hashtag_posts_per_user: float = 20.0
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.p_in <= 1.0:
            raise ValidationError("p_in must be in [0, 1]")
        counts = {
            "n_communities": self.n_communities,
            "influencers_per_community": self.influencers_per_community,
            "users_per_community": self.users_per_community,
            "noise_users": self.noise_users,
            "hashtags_per_community": self.hashtags_per_community,
            "shared_hashtags": self.shared_hashtags,
        }
        for name, value in counts.items():
            if value < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.retweets_per_user < 0 or self.hashtag_posts_per_user < 0:
            raise ValidationError("per-user means must be >= 0")
        if self.power_law_m <= 0 or self.power_law_b <= 0:
            raise ValidationError("power_law_b and power_law_m must be > 0")


@dataclass(frozen=True)
class PlantedTruth:
    """Ground-truth community of every generated influencer and user.

    Noise users carry the reserved community id ``NOISE``.
    """

    influencer_community: dict[str, int]
    user_community: dict[str, int]


def _draw_count(rng: np.random.Generator, mean: float) -> int:
    # floor(mean) plus a Bernoulli for the fractional part: seeded, integer,
    # and exact in expectation, so a mean of 1.0 forces exactly one draw.
    base = int(math.floor(mean))
    frac = mean - base
    if frac > 0.0 and rng.random() < frac:
        return base + 1
    return base


def generate(config: SynthConfig) -> tuple[Corpus, PlantedTruth]:
    """Build a corpus with planted retweet and hashtag communities.

    Influencer ranks are global (1-based); the rank-x influencer is drawn
    with weight ``b * x**(-m)``, so realized retweet counts follow the
    configured inverse power law. Community members target their own
    community's influencers with probability ``p_in`` and a uniformly
    random other-community influencer otherwise. Noise users retweet
    uniformly and post only shared hashtags. Fully deterministic per seed.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)

    n_inf = config.n_communities * config.influencers_per_community
    influencer_ids = [f"inf{x:04d}" for x in range(1, n_inf + 1)]
    # Round-robin rank assignment keeps every community's weight mass
    # comparable, so the global rank-popularity curve survives p_in mixing.
    influencer_comm = {
        influencer_ids[x - 1]: (x - 1) % config.n_communities for x in range(1, n_inf + 1)
    }
    weights = np.array(
        [config.power_law_b * x ** (-config.power_law_m) for x in range(1, n_inf + 1)]
    )

    comm_members: list[np.ndarray] = []
    comm_probs: list[np.ndarray] = []
    other_members: list[np.ndarray] = []
    for c in range(config.n_communities):
        own = np.array([i for i in range(n_inf) if i % config.n_communities == c], dtype=int)
        rest = np.array([i for i in range(n_inf) if i % config.n_communities != c], dtype=int)
        comm_members.append(own)
        comm_probs.append(weights[own] / weights[own].sum() if own.size else np.array([]))
        other_members.append(rest)

    shared_tags = [f"shared{j:02d}" for j in range(config.shared_hashtags)]
    comm_tags = [
        [f"c{c}tag{j:02d}" for j in range(config.hashtags_per_community)]
        for c in range(config.n_communities)
    ]

    records: list[TweetRecord] = []
    user_comm: dict[str, int] = {}
    counter = 0

    def emit_retweet(author: str, target_idx: int) -> None:
        nonlocal counter
        counter += 1
        records.append(
            TweetRecord(
                tweet_id=f"t{counter:09d}",
                author_id=author,
                author_handle=author,
                created_at=_EPOCH + counter,
                text=f"RT @{influencer_ids[target_idx]}",
                retweet_of=influencer_ids[target_idx],
            )
        )

    def emit_hashtag_post(author: str, tag: str) -> None:
        nonlocal counter
        counter += 1
        records.append(
            TweetRecord(
                tweet_id=f"t{counter:09d}",
                author_id=author,
                author_handle=author,
                created_at=_EPOCH + counter,
                text=f"#{tag}",
                hashtags=(tag,),
            )
        )

    for c in range(config.n_communities):
        vocab = comm_tags[c] + shared_tags
        for j in range(config.users_per_community):
            uid = f"user_c{c}_{j:05d}"
            user_comm[uid] = c
            n_rt = _draw_count(rng, config.retweets_per_user)
            if n_rt and n_inf:
                can_leave = other_members[c].size > 0
                n_own = rng.binomial(n_rt, config.p_in) if can_leave else n_rt
                if n_own and comm_members[c].size:
                    for idx in rng.choice(comm_members[c], size=n_own, p=comm_probs[c]):
                        emit_retweet(uid, int(idx))
                if n_rt - n_own > 0 and can_leave:
                    for idx in rng.choice(other_members[c], size=n_rt - n_own):
                        emit_retweet(uid, int(idx))
            n_posts = _draw_count(rng, config.hashtag_posts_per_user)
            if n_posts and vocab:
                for t in rng.choice(len(vocab), size=n_posts):
                    emit_hashtag_post(uid, vocab[int(t)])

    for j in range(config.noise_users):
        uid = f"noise_{j:05d}"
        user_comm[uid] = NOISE
        n_rt = _draw_count(rng, config.retweets_per_user)
        if n_rt and n_inf:
            for idx in rng.choice(n_inf, size=n_rt):
                emit_retweet(uid, int(idx))
        n_posts = _draw_count(rng, config.hashtag_posts_per_user)
        if n_posts and shared_tags:
            for t in rng.choice(len(shared_tags), size=n_posts):
                emit_hashtag_post(uid, shared_tags[int(t)])

    truth = PlantedTruth(influencer_community=influencer_comm, user_community=user_comm)
    return Corpus.from_records(records), truth


def write_truth(truth: PlantedTruth, path: str | Path) -> None:
    """Write the planted assignment as a two-column id,community table."""
    rows = sorted(truth.influencer_community.items()) + sorted(truth.user_community.items())
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "community"])
        writer.writerows(rows)


def read_truth(path: str | Path) -> dict[str, int]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return {row["id"]: int(row["community"]) for row in reader}


def adjusted_rand_index(
    labels_a: Mapping[Hashable, Hashable], labels_b: Mapping[Hashable, Hashable]
) -> float:
    """Adjusted Rand index of two labelings over their shared keys.

    Returns 1.0 iff the labelings induce identical partitions of the
    shared key set, 0.0 in expectation for independent labelings.
    """
    shared = sorted(set(labels_a) & set(labels_b), key=repr)
    n = len(shared)
    if n < 2:
        raise ValidationError("adjusted_rand_index needs at least 2 shared keys")
    contingency: Counter[tuple[Hashable, Hashable]] = Counter()
    sizes_a: Counter[Hashable] = Counter()
    sizes_b: Counter[Hashable] = Counter()
    for key in shared:
        la, lb = labels_a[key], labels_b[key]
        contingency[(la, lb)] += 1
        sizes_a[la] += 1
        sizes_b[lb] += 1
    sum_cells = sum(math.comb(v, 2) for v in contingency.values())
    sum_a = sum(math.comb(v, 2) for v in sizes_a.values())
    sum_b = sum(math.comb(v, 2) for v in sizes_b.values())
    total_pairs = math.comb(n, 2)
    expected = sum_a * sum_b / total_pairs
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        # both partitions trivial (all singletons or one block): identical
        return 1.0
    return (sum_cells - expected) / (max_index - expected)
