"""Retweet-network community detection.

Pipeline: rank the most-retweeted accounts (influencers), build the
user-influencer bipartite graph, collapse users that retweet the same
influencer subset into superusers, optionally damp high-rank dominance by
a log-rank factor, cut weak edges at a threshold, then cluster influencers
with a DBSCAN variant in which nodes already claimed by a cluster (or
queued in the ongoing expansion) no longer count toward a core point's
neighbour quota. Superusers and their member users inherit labels by
maximum surviving edge weight.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import NOISE, ConsistencyError, InsufficientDataError, ValidationError
from .corpus import Corpus, top_retweeted_authors

# A superuser is identified by the exact subset of influencers its members
# retweet, as a tuple in rank order.
SuperKey = tuple[str, ...]

RAW = "raw"
NORMALIZED = "normalized"
THRESHOLDED = "thresholded"


@dataclass(frozen=True)
class InfluencerRanking:
    """Top-K retweeted author ids with counts, sorted by count descending."""

    entries: tuple[tuple[str, int], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(author for author, _ in self.entries)

    def rank_of(self, author_id: str) -> int:
        """1-based rank of an influencer."""
        for idx, (author, _) in enumerate(self.entries):
            if author == author_id:
                return idx + 1
        raise KeyError(author_id)


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of count = b * rank**(-m) on log-log axes."""

    m: float
    b: float
    r_squared: float
    degenerate: bool = False


@dataclass(frozen=True)
class RetweetGraph:
    """Superuser-influencer graph at one pipeline stage.

    ``members`` maps each superuser key to its sorted user ids; ``edges``
    maps (superuser key, influencer id) to the weight g. Weights are
    integer counts at stage ``raw`` and reals after normalization.
    """

    influencers: tuple[str, ...]
    members: dict[SuperKey, tuple[str, ...]]
    edges: dict[tuple[SuperKey, str], float]
    stage: str = RAW

    @property
    def superusers(self) -> tuple[SuperKey, ...]:
        return tuple(sorted(self.members))

    @property
    def user_count(self) -> int:
        return sum(len(m) for m in self.members.values())


@dataclass(frozen=True)
class NetParams:
    min_pts: int
    threshold: float
    normalized: bool
    log_rank_offset: int = 1


@dataclass(frozen=True)
class NetClusterResult:
    influencer_label: dict[str, int]
    superuser_label: dict[SuperKey, int]
    user_label: dict[str, int]
    params: NetParams


def rank_influencers(corpus: Corpus, k: int) -> InfluencerRanking:
    """Top-k authors by incoming retweet count; ties broken by id ascending."""
    return InfluencerRanking(entries=tuple(top_retweeted_authors(corpus, k)))


def fit_power_law(ranking: InfluencerRanking) -> PowerLawFit:
    """Fit log(count) = log(b) - m*log(rank) over the positive-count entries."""
    points = [
        (rank, count)
        for rank, (_, count) in enumerate(ranking.entries, start=1)
        if count > 0
    ]
    if len(points) < 3:
        raise InsufficientDataError("power-law fit needs >= 3 entries with positive counts")
    x = np.log(np.array([rank for rank, _ in points], dtype=float))
    y = np.log(np.array([count for _, count in points], dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res < 1e-12 else 0.0
    else:
        r_squared = max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    m = -float(slope)
    return PowerLawFit(m=m, b=float(math.exp(intercept)), r_squared=r_squared, degenerate=m <= 0)


def build_edges(corpus: Corpus, ranking: InfluencerRanking) -> dict[str, dict[str, int]]:
    """Per-user retweet counts toward each influencer (the pre-aggregation view).

    Users that never retweet an influencer do not appear.
    """
    influencers = set(ranking.ids())
    edges: dict[str, dict[str, int]] = {}
    for rec in corpus.records:
        if rec.retweet_of is not None and rec.retweet_of in influencers:
            user = edges.setdefault(rec.author_id, {})
            user[rec.retweet_of] = user.get(rec.retweet_of, 0) + 1
    return edges


def aggregate_superusers(
    user_edges: Mapping[str, Mapping[str, int]], ranking: InfluencerRanking
) -> RetweetGraph:
    """Collapse users that retweet the same influencer subset into superusers.

    Edge weights of a superuser are the sums over its members; member sets
    partition the users that retweet at least one influencer.
    """
    influencer_order = ranking.ids()
    rank_index = {author: idx for idx, author in enumerate(influencer_order)}
    members: dict[SuperKey, list[str]] = {}
    edges: dict[tuple[SuperKey, str], float] = {}
    for user in sorted(user_edges):
        weights = user_edges[user]
        key: SuperKey = tuple(sorted(weights, key=rank_index.__getitem__))
        if not key:
            continue
        members.setdefault(key, []).append(user)
        for influencer, g in weights.items():
            edges[(key, influencer)] = edges.get((key, influencer), 0) + g
    return RetweetGraph(
        influencers=influencer_order,
        members={key: tuple(users) for key, users in members.items()},
        edges=edges,
        stage=RAW,
    )


def normalize_weights(
    graph: RetweetGraph, ranking: InfluencerRanking, offset: int = 1
) -> RetweetGraph:
    """Multiply each edge weight by log10(rank + offset) of its influencer.

    The default offset of 1 keeps rank-1 edges alive (log10 of the bare
    rank would zero them); offset 0 gives the undamped literal rule.
    """
    if graph.stage != RAW:
        raise ValidationError(f"normalize_weights expects stage {RAW!r}, got {graph.stage!r}")
    ranked = set(ranking.ids())
    for influencer in graph.influencers:
        if influencer not in ranked:
            raise ConsistencyError(f"influencer {influencer!r} missing from ranking")
    multiplier = {
        influencer: math.log10(ranking.rank_of(influencer) + offset)
        for influencer in graph.influencers
    }
    edges = {
        (key, influencer): g * multiplier[influencer]
        for (key, influencer), g in graph.edges.items()
    }
    return RetweetGraph(
        influencers=graph.influencers, members=dict(graph.members), edges=edges, stage=NORMALIZED
    )


def default_threshold(graph: RetweetGraph, fraction: float) -> float:
    """The cut value: ``fraction`` of the maximum edge weight in the graph."""
    if not graph.edges:
        raise ValidationError("cannot derive a threshold from a graph with no edges")
    if not 0.0 < fraction < 1.0:
        raise ValidationError("fraction must be in (0, 1)")
    return fraction * max(graph.edges.values())


def apply_threshold(graph: RetweetGraph, t: float) -> RetweetGraph:
    """Keep edges with weight strictly greater than ``t``.

    Superusers left without edges disappear together with their members;
    influencers are retained even when isolated (they become noise later).
    """
    if graph.stage not in (RAW, NORMALIZED):
        raise ValidationError(f"apply_threshold expects stage raw or normalized, got {graph.stage!r}")
    if t < 0:
        raise ValidationError("threshold must be >= 0")
    edges = {edge: g for edge, g in graph.edges.items() if g > t}
    surviving = {key for key, _ in edges}
    members = {key: users for key, users in graph.members.items() if key in surviving}
    return RetweetGraph(
        influencers=graph.influencers, members=members, edges=edges, stage=THRESHOLDED
    )


def influencer_adjacency(graph: RetweetGraph) -> dict[str, set[str]]:
    """Influencers are adjacent iff some superuser has edges to both."""
    by_superuser: dict[SuperKey, list[str]] = {}
    for key, influencer in graph.edges:
        by_superuser.setdefault(key, []).append(influencer)
    neighbors: dict[str, set[str]] = {influencer: set() for influencer in graph.influencers}
    for connected in by_superuser.values():
        for a in connected:
            for b in connected:
                if a != b:
                    neighbors[a].add(b)
    return neighbors


def modified_dbscan_on_adjacency(
    neighbors: Mapping[str, set[str]], seed_order: Sequence[str], min_pts: int
) -> dict[str, int]:
    """DBSCAN over an adjacency where visited nodes stop counting as neighbours.

    A node is core iff it has at least ``min_pts`` neighbours that are
    neither assigned to a cluster nor queued in the ongoing breadth-first
    expansion, evaluated at the moment the node is inspected. Expansion
    joins the unvisited neighbours of every core node; joined nodes are
    expanded further only if core under the same rule. Anything never
    joined is noise. Seeds are tried in ``seed_order``; cluster ids count
    up from 0 in discovery order.
    """
    if min_pts < 1:
        raise ValidationError("min_pts must be >= 1")
    position = {node: idx for idx, node in enumerate(seed_order)}
    labels = {node: NOISE for node in seed_order}
    visited: set[str] = set()
    next_cluster = 0
    for seed in seed_order:
        if seed in visited:
            continue
        if len(neighbors.get(seed, set()) - visited) < min_pts:
            continue  # not core now; a later expansion may still absorb it
        labels[seed] = next_cluster
        visited.add(seed)
        queue: deque[str] = deque([seed])
        while queue:
            node = queue.popleft()
            unvisited = neighbors.get(node, set()) - visited
            if len(unvisited) < min_pts:
                continue  # border: belongs to the cluster but does not expand
            for neighbor in sorted(unvisited, key=position.__getitem__):
                labels[neighbor] = next_cluster
                visited.add(neighbor)
                queue.append(neighbor)
        next_cluster += 1
    return labels


def modified_dbscan(graph: RetweetGraph, min_pts: int = 2) -> dict[str, int]:
    """Cluster the influencers of a thresholded graph; see the adjacency variant."""
    if graph.stage != THRESHOLDED:
        raise ValidationError(f"modified_dbscan expects stage {THRESHOLDED!r}, got {graph.stage!r}")
    return modified_dbscan_on_adjacency(influencer_adjacency(graph), graph.influencers, min_pts)


def assign_superusers_and_users(
    graph: RetweetGraph, influencer_labels: Mapping[str, int], params: NetParams
) -> NetClusterResult:
    """Complete the result: label superusers and expand over their members.

    A superuser takes the cluster gathering the most surviving edge weight,
    lower cluster id on ties; superusers connected only to noise
    influencers are noise themselves.
    """
    by_superuser: dict[SuperKey, list[tuple[str, float]]] = {}
    for (key, influencer), g in graph.edges.items():
        by_superuser.setdefault(key, []).append((influencer, g))
    superuser_label: dict[SuperKey, int] = {}
    user_label: dict[str, int] = {}
    rank_index = {influencer: idx for idx, influencer in enumerate(graph.influencers)}
    for key in sorted(graph.members):
        weight_by_cluster: dict[int, float] = {}
        for influencer, g in sorted(by_superuser.get(key, []), key=lambda e: rank_index[e[0]]):
            label = influencer_labels.get(influencer, NOISE)
            if label != NOISE:
                weight_by_cluster[label] = weight_by_cluster.get(label, 0.0) + g
        if weight_by_cluster:
            label = min(weight_by_cluster, key=lambda c: (-weight_by_cluster[c], c))
        else:
            label = NOISE
        superuser_label[key] = label
        for user in graph.members[key]:
            user_label[user] = label
    return NetClusterResult(
        influencer_label=dict(influencer_labels),
        superuser_label=superuser_label,
        user_label=user_label,
        params=params,
    )


@dataclass
class NetworkRun:
    """All intermediates of one network-clustering run (funnel + export input)."""

    ranking: InfluencerRanking
    fit: PowerLawFit | None
    user_edges: dict[str, dict[str, int]]
    raw: RetweetGraph
    prepared: RetweetGraph
    threshold: float
    thresholded: RetweetGraph
    result: NetClusterResult


def run_network(
    corpus: Corpus,
    top_k: int = 100,
    min_pts: int = 2,
    threshold_fraction: float = 0.0065,
    explicit_threshold: float | None = None,
    normalize: bool = True,
    log_rank_offset: int = 1,
) -> NetworkRun:
    """Run the full network pipeline with the given hyperparameters."""
    ranking = rank_influencers(corpus, top_k)
    try:
        fit = fit_power_law(ranking)
    except InsufficientDataError:
        fit = None
    user_edges = build_edges(corpus, ranking)
    raw = aggregate_superusers(user_edges, ranking)
    prepared = normalize_weights(raw, ranking, offset=log_rank_offset) if normalize else raw
    if explicit_threshold is not None:
        threshold = float(explicit_threshold)
    elif prepared.edges:
        threshold = default_threshold(prepared, threshold_fraction)
    else:
        threshold = 0.0
    thresholded = apply_threshold(prepared, threshold)
    influencer_labels = modified_dbscan(thresholded, min_pts)
    params = NetParams(
        min_pts=min_pts,
        threshold=threshold,
        normalized=normalize,
        log_rank_offset=log_rank_offset,
    )
    result = assign_superusers_and_users(thresholded, influencer_labels, params)
    return NetworkRun(
        ranking=ranking,
        fit=fit,
        user_edges=user_edges,
        raw=raw,
        prepared=prepared,
        threshold=threshold,
        thresholded=thresholded,
        result=result,
    )
