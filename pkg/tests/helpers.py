"""Shared builders and reference oracles used across test modules."""

from __future__ import annotations

import json

import numpy as np

from likeminded.core import NOISE
from likeminded.corpus import Corpus, TweetRecord
from likeminded.langcluster import ConsensusMatrix


def rec(
    tweet_id: str,
    author: str,
    retweet_of: str | None = None,
    hashtags: tuple[str, ...] = (),
    created_at: int = 1_000_000,
    text: str = "",
) -> TweetRecord:
    return TweetRecord(
        tweet_id=tweet_id,
        author_id=author,
        author_handle=author,
        created_at=created_at,
        text=text,
        hashtags=hashtags,
        retweet_of=retweet_of,
    )


def corpus_of(*records: TweetRecord) -> Corpus:
    return Corpus.from_records(records)


def record_line(
    tweet_id: str,
    author: str,
    retweet_of: str | None = None,
    hashtags: list[str] | None = None,
    created_at: int = 1_000_000,
    text: str = "",
) -> str:
    obj = {
        "id": tweet_id,
        "author_id": author,
        "author_handle": author,
        "created_at": created_at,
        "text": text,
        "hashtags": hashtags or [],
    }
    if retweet_of is not None:
        obj["retweet_of"] = retweet_of
    return json.dumps(obj)


def retweet_corpus(user_edges: dict[str, dict[str, int]]) -> Corpus:
    """A corpus realizing exactly the given user -> influencer -> count edges."""
    records = []
    n = 0
    for user in sorted(user_edges):
        for target in sorted(user_edges[user]):
            for _ in range(user_edges[user][target]):
                n += 1
                records.append(rec(f"t{n:06d}", user, retweet_of=target))
    return Corpus.from_records(records)


def random_adjacency(rng: np.random.Generator, max_nodes: int = 12):
    """A random undirected adjacency over up to ``max_nodes`` named nodes."""
    n = int(rng.integers(1, max_nodes + 1))
    nodes = [f"i{j:02d}" for j in range(n)]
    neighbors: dict[str, set[str]] = {v: set() for v in nodes}
    p = float(rng.uniform(0.1, 0.6))
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < p:
                neighbors[nodes[a]].add(nodes[b])
                neighbors[nodes[b]].add(nodes[a])
    return nodes, neighbors


def standard_dbscan_extents(neighbors: dict[str, set[str]], min_pts: int) -> list[set]:
    """Clusters of plain DBSCAN on an adjacency graph, as maximal extents.

    Core points count their full neighbourhood; each cluster is a connected
    component of core points together with every neighbour (so a border
    point reachable from two components appears in both extents, which is
    exactly what a subset check needs).
    """
    cores = {v for v in neighbors if len(neighbors[v]) >= min_pts}
    seen: set[str] = set()
    extents = []
    for start in sorted(cores):
        if start in seen:
            continue
        component = set()
        stack = [start]
        while stack:
            node = stack.pop()
            if node in component:
                continue
            component.add(node)
            seen.add(node)
            stack.extend(v for v in neighbors[node] if v in cores and v not in component)
        extent = set(component)
        for core in component:
            extent |= neighbors[core]
        extents.append(extent)
    return extents


def reference_dbscan(matrix: ConsensusMatrix, min_pts: int, eps: int) -> dict[str, int]:
    """Independent level-order DBSCAN over a consensus matrix (the oracle)."""
    n = len(matrix.users)
    order = sorted(range(n), key=lambda i: matrix.users[i])
    adjacent = [[i != j and matrix.counts[i, j] >= eps for j in range(n)] for i in range(n)]
    core = [sum(adjacent[i]) >= min_pts for i in range(n)]
    labels: dict[int, int] = {}
    cluster = 0
    for seed in order:
        if seed in labels or not core[seed]:
            continue
        labels[seed] = cluster
        frontier = [seed]
        while frontier:
            next_frontier = []
            for u in frontier:
                if not core[u]:
                    continue
                for v in order:
                    if adjacent[u][v] and v not in labels:
                        labels[v] = cluster
                        next_frontier.append(v)
            frontier = next_frontier
        cluster += 1
    return {matrix.users[i]: labels.get(i, NOISE) for i in range(n)}
