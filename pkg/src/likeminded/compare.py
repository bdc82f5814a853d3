"""Cross-method comparison: Sankey flows between the two cluster sets and
the filter-funnel report of how many items each pipeline stage discards."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

from .core import NOISE, UNDEFINED, FunnelError, ValidationError
from .corpus import Corpus, retweeting_users

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SankeyFlow:
    source: int
    target: int
    user_count: int


@dataclass(frozen=True)
class SankeyFlows:
    flows: tuple[SankeyFlow, ...]
    totals: dict[int, int]


def _clustered(labels: Mapping[str, int]) -> dict[int, set[str]]:
    groups: dict[int, set[str]] = {}
    for user, label in labels.items():
        if label != NOISE:
            groups.setdefault(label, set()).add(user)
    return groups


def build_sankey(
    net_labels: Mapping[str, int],
    lang_labels: Mapping[str, int],
    include_noise_source: bool = False,
) -> SankeyFlows:
    """User flows from every network cluster into the language clusters.

    Users of a network cluster that the language side never labeled (or
    labeled noise) flow to the UNDEFINED target. Noise-labeled network
    users are excluded as sources unless ``include_noise_source`` is set.
    """
    sources = _clustered(net_labels)
    if include_noise_source:
        noise_users = {u for u, label in net_labels.items() if label == NOISE}
        if noise_users:
            sources[NOISE] = noise_users
    flows: list[SankeyFlow] = []
    totals: dict[int, int] = {}
    for source in sorted(sources, key=lambda s: (s == NOISE, s)):
        users = sources[source]
        totals[source] = len(users)
        by_target: dict[int, int] = {}
        for user in users:
            target = lang_labels.get(user, NOISE)
            if target == NOISE:
                target = UNDEFINED
            by_target[target] = by_target.get(target, 0) + 1
        for target in sorted(by_target, key=lambda t: (t == UNDEFINED, t)):
            flows.append(SankeyFlow(source=source, target=target, user_count=by_target[target]))
    return SankeyFlows(flows=tuple(flows), totals=totals)


def overlap_fraction(
    net_labels: Mapping[str, int], lang_labels: Mapping[str, int]
) -> tuple[float, float]:
    """(share of net-clustered users unlabeled by lang, and vice versa)."""
    net_users = {u for u, label in net_labels.items() if label != NOISE}
    lang_users = {u for u, label in lang_labels.items() if label != NOISE}
    if not net_users or not lang_users:
        log.warning("overlap_fraction: one side has no clustered users")
    net_unmatched = len(net_users - lang_users) / len(net_users) if net_users else 0.0
    lang_unmatched = len(lang_users - net_users) / len(lang_users) if lang_users else 0.0
    return net_unmatched, lang_unmatched


@dataclass(frozen=True)
class FunnelStage:
    side: str
    name: str
    kind: str
    items_in: int
    items_out: int

    def __post_init__(self) -> None:
        if self.items_out > self.items_in:
            raise ValidationError(f"stage {self.name!r}: items_out exceeds items_in")

    @property
    def filtered_fraction(self) -> float:
        if self.items_in == 0:
            return 0.0
        return (self.items_in - self.items_out) / self.items_in


@dataclass(frozen=True)
class FilterReport:
    stages: tuple[FunnelStage, ...]

    def as_table(self) -> str:
        width = max([len(st.name) for st in self.stages] + [5])
        header = f"{'side':<5} {'stage':<{width}} {'kind':<9} {'in':>10} {'out':>10} {'filtered':>9}"
        lines = [header, "-" * len(header)]
        for st in self.stages:
            lines.append(
                f"{st.side:<5} {st.name:<{width}} {st.kind:<9} {st.items_in:>10} "
                f"{st.items_out:>10} {st.filtered_fraction:>9.4f}"
            )
        return "\n".join(lines)


def _require(intermediates, attribute: str, stage: str):
    if not hasattr(intermediates, attribute):
        raise FunnelError(f"stage {stage!r} is missing intermediate {attribute!r}")
    value = getattr(intermediates, attribute)
    if value is None:
        raise FunnelError(f"stage {stage!r} is missing intermediate {attribute!r}")
    return value


def filter_funnel(corpus: Corpus, net=None, lang=None) -> FilterReport:
    """Stage-by-stage survivor counts for both pipelines.

    ``net`` and ``lang`` are run objects carrying the captured
    intermediates (``NetworkRun`` / ``LanguageRun``); either side may be
    omitted. User and tweet counts are reported side by side on the
    network stages.
    """
    if net is None and lang is None:
        raise ValidationError("filter_funnel needs at least one side of intermediates")
    stages: list[FunnelStage] = []
    if net is not None:
        user_edges = _require(net, "user_edges", "users retweeting influencers")
        thresholded = _require(net, "thresholded", "users surviving threshold")
        all_users = corpus.distinct_users
        retweeters = len(retweeting_users(corpus))
        influencer_retweeters = len(user_edges)
        surviving = thresholded.user_count
        stages.append(FunnelStage("net", "all users -> retweeting users", "users", all_users, retweeters))
        stages.append(
            FunnelStage(
                "net",
                "retweeting users -> retweet influencers",
                "users",
                retweeters,
                influencer_retweeters,
            )
        )
        stages.append(
            FunnelStage(
                "net",
                "retweet influencers -> above threshold",
                "users",
                influencer_retweeters,
                surviving,
            )
        )
        all_tweets = corpus.total_tweets
        retweets = corpus.total_retweets
        retweets_to_influencers = sum(sum(w.values()) for w in user_edges.values())
        surviving_users = {user for members in thresholded.members.values() for user in members}
        surviving_retweets = sum(
            sum(w.values()) for user, w in user_edges.items() if user in surviving_users
        )
        stages.append(FunnelStage("net", "all tweets -> retweets", "tweets", all_tweets, retweets))
        stages.append(
            FunnelStage(
                "net",
                "retweets -> retweets of influencers",
                "tweets",
                retweets,
                retweets_to_influencers,
            )
        )
        stages.append(
            FunnelStage(
                "net",
                "retweets of influencers -> above threshold",
                "tweets",
                retweets_to_influencers,
                surviving_retweets,
            )
        )
    if lang is not None:
        per_user_counts = _require(lang, "per_user_counts", "users above usage minimum")
        per_user_min = _require(lang, "per_user_min", "users above usage minimum")
        vocab = getattr(lang, "vocab", None)
        if vocab is None and not hasattr(lang, "vocab"):
            raise FunnelError("stage 'vocabulary-retained hashtags' is missing intermediate 'vocab'")
        distinct_lemmas = len(vocab.total_counts) if vocab is not None else 0
        retained_lemmas = len(vocab.retained) if vocab is not None else 0
        stages.append(
            FunnelStage(
                "lang",
                "all hashtags -> vocabulary retained",
                "hashtags",
                distinct_lemmas,
                retained_lemmas,
            )
        )
        retained_set = set(vocab.retained) if vocab is not None else set()
        above_minimum = sum(
            1
            for counts in per_user_counts.values()
            if sum(c for lemma, c in counts.items() if lemma in retained_set) > per_user_min
        )
        stages.append(
            FunnelStage(
                "lang",
                "all users -> above usage minimum",
                "users",
                corpus.distinct_users,
                above_minimum,
            )
        )
    return FilterReport(stages=tuple(stages))
