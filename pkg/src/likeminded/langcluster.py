"""Hashtag-language community detection.

Hashtags are lowercased, lemmatized through a pluggable dictionary and
stripped of stop words; a quantile filter keeps the informative slice of
the vocabulary; users become binary feature vectors; repeated cosine
k-means rounds fill a consensus matrix whose strong co-clusterings a
standard DBSCAN turns into communities; per-cluster hashtag lift profiles
describe what each community talks about.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .core import NOISE, ValidationError
from .corpus import Corpus

log = logging.getLogger(__name__)

# One k-means round per entry; mirrors a 15-round sweep of growing k.
DEFAULT_K_LIST: tuple[int, ...] = tuple(range(5, 80, 5))


@dataclass(frozen=True)
class LemmaMap:
    """Surface-form to lemma lookup with identity fallback, all lowercase."""

    mapping: dict[str, str]

    @classmethod
    def load(cls, path: str | Path) -> "LemmaMap":
        mapping: dict[str, str] = {}
        with Path(path).open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValidationError(f"{path}:{lineno}: expected 'surface<TAB>lemma'")
                surface, lemma = parts
                mapping[surface.lower()] = lemma.lower()
        return cls(mapping=mapping)

    @classmethod
    def identity(cls) -> "LemmaMap":
        return cls(mapping={})

    def lookup(self, token: str) -> str:
        token = token.lower()
        return self.mapping.get(token, token)


@dataclass(frozen=True)
class StopWordList:
    words: frozenset[str]

    @classmethod
    def load(cls, path: str | Path) -> "StopWordList":
        words = set()
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                words.add(line.lower())
        return cls(words=frozenset(words))

    @classmethod
    def empty(cls) -> "StopWordList":
        return cls(words=frozenset())

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.words


def bundled_lemma_map() -> LemmaMap:
    """The small German lemma table shipped with the package."""
    ref = resources.files("likeminded").joinpath("data/german_lemmas.tsv")
    mapping: dict[str, str] = {}
    for line in ref.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        surface, lemma = line.split("\t")
        mapping[surface.lower()] = lemma.lower()
    return LemmaMap(mapping=mapping)


def bundled_stop_words() -> StopWordList:
    """The German stop-word list shipped with the package."""
    ref = resources.files("likeminded").joinpath("data/german_stopwords.txt")
    words = {
        line.strip().lower()
        for line in ref.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    }
    return StopWordList(words=frozenset(words))


@dataclass(frozen=True)
class HashtagVocabulary:
    """The retained hashtag lemmas, in lexicographic order (stable dimensions)."""

    retained: tuple[str, ...]
    total_counts: dict[str, int]
    q_low_value: int
    q_high_value: int

    def dimension_index(self) -> dict[str, int]:
        return {lemma: idx for idx, lemma in enumerate(self.retained)}


@dataclass(frozen=True, eq=False)
class UserFeatureVector:
    user_id: str
    bits: np.ndarray

    def __post_init__(self) -> None:
        if not self.bits.any():
            raise ValidationError(f"all-zero feature vector for user {self.user_id}")


@dataclass(frozen=True, eq=False)
class ConsensusMatrix:
    """users[i] and users[j] were co-clustered in counts[i, j] of ``rounds`` rounds."""

    users: tuple[str, ...]
    counts: np.ndarray
    rounds: int


@dataclass(frozen=True)
class LangParams:
    k_list: tuple[int, ...]
    min_pts: int
    eps: int
    base_seed: int


@dataclass(frozen=True)
class LangClusterResult:
    user_label: dict[str, int]
    params: LangParams


class ProfileEntry(NamedTuple):
    lemma: str
    lift: float
    in_cluster_count: int


@dataclass(frozen=True)
class ClusterProfile:
    """Per-cluster hashtag lemmas ranked by lift (in-cluster vs corpus share)."""

    clusters: dict[int, tuple[ProfileEntry, ...]]


def normalize_hashtags(
    corpus: Corpus, lemmas: LemmaMap, stops: StopWordList
) -> dict[str, Counter[str]]:
    """Per-user lemma counts: lowercase, lemmatize, then drop stop words."""
    per_user: dict[str, Counter[str]] = {}
    for rec in corpus.records:
        for tag in rec.hashtags:
            lemma = lemmas.lookup(tag)
            if lemma in stops:
                continue
            per_user.setdefault(rec.author_id, Counter())[lemma] += 1
    return per_user


def total_lemma_counts(per_user_counts: Mapping[str, Mapping[str, int]]) -> Counter[str]:
    totals: Counter[str] = Counter()
    for counts in per_user_counts.values():
        totals.update(counts)
    return totals


def build_vocabulary(
    counts: Mapping[str, int], q_low: float = 0.97, q_high: float = 0.9998
) -> HashtagVocabulary:
    """Keep lemmas used at least twice whose totals sit inside the quantile band.

    Quantiles use the nearest-rank method over the multiset of per-lemma
    totals: the value at position ceil(q*N) of the ascending sort, both
    bounds inclusive.
    """
    if not counts:
        raise ValidationError("cannot build a vocabulary from zero lemmas")
    if not (0.0 <= q_low <= q_high <= 1.0):
        raise ValidationError("quantiles must satisfy 0 <= q_low <= q_high <= 1")
    values = sorted(counts.values())
    n = len(values)

    def nearest_rank(q: float) -> int:
        return values[max(1, math.ceil(q * n)) - 1]

    q_low_value = nearest_rank(q_low)
    q_high_value = nearest_rank(q_high)
    retained = tuple(
        sorted(
            lemma
            for lemma, count in counts.items()
            if count >= 2 and q_low_value <= count <= q_high_value
        )
    )
    return HashtagVocabulary(
        retained=retained,
        total_counts=dict(counts),
        q_low_value=q_low_value,
        q_high_value=q_high_value,
    )


def build_feature_vectors(
    per_user_counts: Mapping[str, Mapping[str, int]],
    vocab: HashtagVocabulary,
    per_tag_min: int = 3,
    per_user_min: int = 6,
) -> tuple[list[UserFeatureVector], int]:
    """Binary vectors over the vocabulary dimensions, plus the all-zero drop count.

    A user is kept iff their summed usage of retained lemmas is strictly
    above ``per_user_min``; a bit is set iff the per-lemma count is
    strictly above ``per_tag_min``. Users whose vector ends up all-zero
    are dropped and counted.
    """
    if not vocab.retained:
        raise ValidationError("vocabulary has no retained lemmas")
    dims = vocab.dimension_index()
    vectors: list[UserFeatureVector] = []
    dropped_zero = 0
    for user in sorted(per_user_counts):
        counts = per_user_counts[user]
        total = sum(count for lemma, count in counts.items() if lemma in dims)
        if total <= per_user_min:
            continue
        bits = np.zeros(len(dims), dtype=np.uint8)
        for lemma, count in counts.items():
            if count > per_tag_min and lemma in dims:
                bits[dims[lemma]] = 1
        if not bits.any():
            dropped_zero += 1
            continue
        vectors.append(UserFeatureVector(user_id=user, bits=bits))
    return vectors, dropped_zero


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cos(a, b); zero vectors are defined to be at distance 1 from everything."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 1.0
    return 1.0 - float(np.dot(a, b)) / (norm_a * norm_b)


def _cosine_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    point_norms = np.linalg.norm(points, axis=1)
    centroid_norms = np.linalg.norm(centroids, axis=1)
    denom = np.outer(np.where(point_norms == 0, 1.0, point_norms),
                     np.where(centroid_norms == 0, 1.0, centroid_norms))
    sims = (points @ centroids.T) / denom
    return 1.0 - sims


def kmeans_cosine(
    points: np.ndarray, k: int, seed: int, max_iter: int = 100
) -> np.ndarray:
    """Cosine-distance k-means with real-valued mean centroids.

    Initial centroids are k distinct vector values sampled without
    replacement (falling back to row sampling when fewer distinct values
    exist). Assignment ties go to the lowest centroid index; a cluster
    that empties is reseeded with the point farthest from its nearest
    centroid. Stops when assignments repeat or after ``max_iter`` rounds.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of vectors ({n})")
    rng = np.random.default_rng(seed)
    unique_values = np.unique(points, axis=0)
    if len(unique_values) >= k:
        chosen = rng.choice(len(unique_values), size=k, replace=False)
        centroids = unique_values[chosen].astype(float)
    else:
        chosen = rng.choice(n, size=k, replace=False)
        centroids = points[chosen].astype(float)

    labels = np.full(n, -1, dtype=int)
    for _ in range(max_iter):
        distances = _cosine_distances(points, centroids)
        new_labels = np.argmin(distances, axis=1)
        reseeded: set[int] = set()
        for cluster in range(k):
            if np.any(new_labels == cluster):
                continue
            to_nearest = distances[np.arange(n), new_labels]
            for idx in np.argsort(-to_nearest, kind="stable"):
                idx = int(idx)
                if idx not in reseeded:
                    centroids[cluster] = points[idx]
                    new_labels[idx] = cluster
                    reseeded.add(idx)
                    break
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for cluster in range(k):
            members = points[labels == cluster]
            if len(members):
                centroids[cluster] = members.mean(axis=0)
    return labels


def kmeans_objective(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of cosine distances of points to their assigned centroid."""
    distances = _cosine_distances(np.asarray(points, dtype=float), centroids)
    return float(distances[np.arange(len(points)), labels].sum())


def build_consensus(
    vectors: Sequence[UserFeatureVector],
    k_list: Sequence[int],
    base_seed: int,
    seeds: Sequence[int] | None = None,
) -> ConsensusMatrix:
    """One k-means round per k in ``k_list``; count co-clustered pairs.

    Round r uses seed ``base_seed + r`` unless explicit ``seeds`` are
    given, so rounds are reproducible and independently parallelizable.
    """
    n = len(vectors)
    if seeds is None:
        seeds = [base_seed + r for r in range(len(k_list))]
    elif len(seeds) != len(k_list):
        raise ValidationError("seeds must match k_list in length")
    for k in k_list:
        if k > n:
            raise ValidationError(f"k={k} exceeds the number of vectors ({n})")
    counts = np.zeros((n, n), dtype=np.int64)
    if n:
        points = np.stack([v.bits for v in vectors]).astype(float)
        for k, seed in zip(k_list, seeds):
            labels = kmeans_cosine(points, k, seed)
            counts += labels[:, None] == labels[None, :]
        np.fill_diagonal(counts, 0)
    return ConsensusMatrix(
        users=tuple(v.user_id for v in vectors), counts=counts, rounds=len(k_list)
    )


def dbscan_consensus(matrix: ConsensusMatrix, min_pts: int, eps: int) -> LangClusterResult:
    """Standard DBSCAN on the graph of pairs co-clustered at least ``eps`` times.

    Core points have degree >= ``min_pts``; border points join the first
    core cluster that reaches them, with seeds and neighbours processed in
    user-id order; unreached points are noise.
    """
    if min_pts < 1:
        raise ValidationError("min_pts must be >= 1")
    if eps < 0 or eps > matrix.rounds:
        raise ValidationError(f"eps must be in [0, rounds={matrix.rounds}]")
    n = len(matrix.users)
    adjacency = matrix.counts >= eps
    np.fill_diagonal(adjacency, False)
    order = sorted(range(n), key=lambda i: matrix.users[i])
    id_position = {i: pos for pos, i in enumerate(order)}
    degree = adjacency.sum(axis=1)
    core = degree >= min_pts
    labels = np.full(n, NOISE, dtype=int)
    visited = np.zeros(n, dtype=bool)
    next_cluster = 0
    for i in order:
        if visited[i] or not core[i]:
            continue
        visited[i] = True
        labels[i] = next_cluster
        queue: deque[int] = deque([i])
        while queue:
            u = queue.popleft()
            if not core[u]:
                continue
            for v in sorted(np.nonzero(adjacency[u])[0], key=id_position.__getitem__):
                if not visited[v]:
                    visited[v] = True
                    labels[v] = next_cluster
                    queue.append(int(v))
        next_cluster += 1
    params = LangParams(k_list=(), min_pts=min_pts, eps=eps, base_seed=0)
    return LangClusterResult(
        user_label={matrix.users[i]: int(labels[i]) for i in range(n)}, params=params
    )


def default_params(
    n_users: int, rounds: int, min_pts_frac: float = 0.02, eps_frac: float = 0.8
) -> tuple[int, int]:
    """(min_pts, eps) = (2 per cent of the users, 80 per cent of the rounds)."""
    if n_users < 1 or rounds < 1:
        raise ValidationError("n_users and rounds must be >= 1")
    min_pts = max(1, round(min_pts_frac * n_users))
    eps = max(1, math.ceil(eps_frac * rounds))
    return min_pts, eps


def profile_clusters(
    result: LangClusterResult,
    per_user_counts: Mapping[str, Mapping[str, int]],
    vocab: HashtagVocabulary,
    top_n: int = 25,
) -> ClusterProfile:
    """Rank each cluster's retained lemmas by lift.

    lift = (in-cluster share of the lemma among retained usage) divided by
    (its corpus-wide share); lemmas unused in the cluster are omitted.
    """
    retained = set(vocab.retained)
    overall_total = sum(vocab.total_counts[lemma] for lemma in vocab.retained)
    members: dict[int, list[str]] = {}
    for user, label in result.user_label.items():
        if label != NOISE:
            members.setdefault(label, []).append(user)
    clusters: dict[int, tuple[ProfileEntry, ...]] = {}
    for cluster in sorted(members):
        cluster_counts: Counter[str] = Counter()
        for user in members[cluster]:
            for lemma, count in per_user_counts.get(user, {}).items():
                if lemma in retained:
                    cluster_counts[lemma] += count
        cluster_total = sum(cluster_counts.values())
        if cluster_total == 0:
            log.warning("cluster %d has no retained-lemma usage; skipping profile", cluster)
            continue
        entries = [
            ProfileEntry(
                lemma=lemma,
                lift=(count / cluster_total) / (vocab.total_counts[lemma] / overall_total),
                in_cluster_count=count,
            )
            for lemma, count in cluster_counts.items()
        ]
        entries.sort(key=lambda e: (-e.lift, e.lemma))
        clusters[cluster] = tuple(entries[:top_n])
    return ClusterProfile(clusters=clusters)


@dataclass
class LanguageRun:
    """All intermediates of one language-clustering run (funnel + export input)."""

    per_user_counts: dict[str, Counter[str]]
    vocab: HashtagVocabulary | None
    vectors: list[UserFeatureVector]
    dropped_zero_vectors: int
    consensus: ConsensusMatrix
    min_pts: int
    eps: int
    result: LangClusterResult
    profiles: ClusterProfile
    per_user_min: int


def run_language(
    corpus: Corpus,
    lemmas: LemmaMap | None = None,
    stops: StopWordList | None = None,
    q_low: float = 0.97,
    q_high: float = 0.9998,
    per_tag_min: int = 3,
    per_user_min: int = 6,
    k_list: Sequence[int] = DEFAULT_K_LIST,
    base_seed: int = 0,
    min_pts: int | None = None,
    eps: int | None = None,
    min_pts_frac: float = 0.02,
    eps_frac: float = 0.8,
    top_n_profile: int = 25,
) -> LanguageRun:
    """Run the full language pipeline with the given hyperparameters.

    Degenerate corpora (no hashtags, or no user surviving the filters)
    produce an empty result instead of raising; ``k_list`` entries larger
    than the number of surviving vectors are skipped with a warning.
    """
    lemmas = lemmas if lemmas is not None else LemmaMap.identity()
    stops = stops if stops is not None else StopWordList.empty()
    per_user_counts = normalize_hashtags(corpus, lemmas, stops)
    totals = total_lemma_counts(per_user_counts)

    vocab: HashtagVocabulary | None = None
    vectors: list[UserFeatureVector] = []
    dropped_zero = 0
    if totals:
        vocab = build_vocabulary(totals, q_low=q_low, q_high=q_high)
        if vocab.retained:
            vectors, dropped_zero = build_feature_vectors(
                per_user_counts, vocab, per_tag_min=per_tag_min, per_user_min=per_user_min
            )

    usable_k = [k for k in k_list if 1 <= k <= len(vectors)]
    if len(usable_k) < len(k_list):
        log.warning(
            "dropping %d k-means rounds with k exceeding the %d surviving vectors",
            len(k_list) - len(usable_k),
            len(vectors),
        )
    consensus = build_consensus(vectors, usable_k, base_seed)
    if vectors and consensus.rounds:
        auto_min_pts, auto_eps = default_params(
            len(vectors), consensus.rounds, min_pts_frac=min_pts_frac, eps_frac=eps_frac
        )
        chosen_min_pts = min_pts if min_pts is not None else auto_min_pts
        chosen_eps = eps if eps is not None else auto_eps
        user_label = dbscan_consensus(consensus, chosen_min_pts, chosen_eps).user_label
    else:
        chosen_min_pts = min_pts if min_pts is not None else 1
        chosen_eps = eps if eps is not None else 1
        user_label = {v.user_id: NOISE for v in vectors}
    result = LangClusterResult(
        user_label=user_label,
        params=LangParams(
            k_list=tuple(usable_k), min_pts=chosen_min_pts, eps=chosen_eps, base_seed=base_seed
        ),
    )
    if vocab is not None and vocab.retained:
        profiles = profile_clusters(result, per_user_counts, vocab, top_n=top_n_profile)
    else:
        profiles = ClusterProfile(clusters={})
    return LanguageRun(
        per_user_counts=per_user_counts,
        vocab=vocab,
        vectors=vectors,
        dropped_zero_vectors=dropped_zero,
        consensus=consensus,
        min_pts=chosen_min_pts,
        eps=chosen_eps,
        result=result,
        profiles=profiles,
        per_user_min=per_user_min,
    )
