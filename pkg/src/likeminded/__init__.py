"""Community detection for social-media corpora, two ways: an
influencer-restricted retweet network with superuser aggregation, and
hashtag-language consensus clustering, plus the machinery to compare the
two cluster sets."""

from .core import (
    NOISE,
    UNDEFINED,
    ConsistencyError,
    EmptyCorpusError,
    FunnelError,
    InsufficientDataError,
    LikemindedError,
    ValidationError,
)
from .corpus import Corpus, CorpusStats, TweetRecord, ingest, merge_corpora, stats, write_corpus
from .synth import PlantedTruth, SynthConfig, adjusted_rand_index, generate
from .netcluster import (
    InfluencerRanking,
    NetClusterResult,
    PowerLawFit,
    RetweetGraph,
    aggregate_superusers,
    apply_threshold,
    assign_superusers_and_users,
    build_edges,
    default_threshold,
    fit_power_law,
    modified_dbscan,
    normalize_weights,
    rank_influencers,
    run_network,
)
from .langcluster import (
    ClusterProfile,
    ConsensusMatrix,
    HashtagVocabulary,
    LangClusterResult,
    LemmaMap,
    StopWordList,
    UserFeatureVector,
    build_consensus,
    build_feature_vectors,
    build_vocabulary,
    cosine_distance,
    dbscan_consensus,
    default_params,
    kmeans_cosine,
    normalize_hashtags,
    profile_clusters,
    run_language,
)
from .compare import FilterReport, SankeyFlows, build_sankey, filter_funnel, overlap_fraction

__version__ = "0.1.0"
