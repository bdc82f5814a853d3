"""Subcommand front-end: gen, ingest, stats, net-cluster, lang-cluster,
compare, export.

Every run resolves a :class:`PipelineConfig` (JSON config file, overridden
by flags), writes its artifacts into ``--out-dir`` and drops a
``manifest.json`` with the config snapshot, seed and input/output digests
so runs can be reproduced bit for bit. Exit codes: 0 success, 1 validation
error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import compare as compare_mod
from . import figures
from .core import LikemindedError, ValidationError
from .corpus import ingest as ingest_file
from .corpus import stats as corpus_stats
from .corpus import write_corpus
from .export import (
    DOT,
    GEXF,
    ExportSpec,
    export_consensus_edges,
    export_funnel,
    export_graph,
    export_lang_labels,
    export_net_labels,
    export_overlap,
    export_powerlaw,
    export_profiles,
    export_sankey_csv,
    export_sankey_json,
    export_stats,
    read_funnel,
    read_user_labels,
)
from .langcluster import (
    DEFAULT_K_LIST,
    LemmaMap,
    StopWordList,
    bundled_lemma_map,
    bundled_stop_words,
    run_language,
)
from .netcluster import (
    NORMALIZED,
    RAW,
    THRESHOLDED,
    NetParams,
    aggregate_superusers,
    apply_threshold,
    assign_superusers_and_users,
    build_edges,
    default_threshold,
    modified_dbscan,
    normalize_weights,
    rank_influencers,
    run_network,
)
from .synth import SynthConfig, generate, write_truth

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    """Every hyperparameter of both pipelines, with full-scale defaults."""

    # network path
    top_k_influencers: int = 100
    threshold_fraction: float = 0.0065
    explicit_threshold: float | None = None
    min_pts_net: int = 2
    normalize: bool = True
    log_rank_offset: int = 1
    # language path
    q_low: float = 0.97
    q_high: float = 0.9998
    per_tag_min: int = 3
    per_user_min: int = 6
    k_list: tuple[int, ...] = DEFAULT_K_LIST
    min_pts_frac: float = 0.02
    eps_frac: float = 0.8
    min_pts_lang: int | None = None
    eps_lang: int | None = None
    top_n_profile: int = 25
    # comparison
    include_noise_sources: bool = False
    # generator
    n_communities: int = 3
    influencers_per_community: int = 10
    users_per_community: int = 100
    noise_users: int = 20
    p_in: float = 0.9
    retweets_per_user: float = 10.0
    power_law_b: float = 39_215.0
    power_law_m: float = 0.65
    hashtags_per_community: int = 20
    shared_hashtags: int = 5
    hashtag_posts_per_user: float = 20.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("threshold_fraction", "min_pts_frac", "eps_frac"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValidationError(f"{name} must be in (0, 1)")
        if not 0.0 <= self.q_low <= self.q_high <= 1.0:
            raise ValidationError("quantiles must satisfy 0 <= q_low <= q_high <= 1")
        for name in ("top_k_influencers", "min_pts_net", "top_n_profile"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if any(k < 1 for k in self.k_list):
            raise ValidationError("k_list entries must be >= 1")
        if self.per_tag_min < 0 or self.per_user_min < 0:
            raise ValidationError("per_tag_min and per_user_min must be >= 0")

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n_communities=self.n_communities,
            influencers_per_community=self.influencers_per_community,
            users_per_community=self.users_per_community,
            noise_users=self.noise_users,
            p_in=self.p_in,
            retweets_per_user=self.retweets_per_user,
            power_law_b=self.power_law_b,
            power_law_m=self.power_law_m,
            hashtags_per_community=self.hashtags_per_community,
            shared_hashtags=self.shared_hashtags,
            hashtag_posts_per_user=self.hashtag_posts_per_user,
            seed=self.seed,
        )

    def snapshot(self) -> dict:
        snap = asdict(self)
        snap["k_list"] = list(self.k_list)
        return snap


_CONFIG_FIELDS = {f.name for f in fields(PipelineConfig)}


def load_config(path: str | None, overrides: dict) -> PipelineConfig:
    """Config file values, overridden by explicitly-set flags."""
    values: dict = {}
    if path:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValidationError(f"config file {path} must hold a JSON object")
        unknown = set(raw) - _CONFIG_FIELDS
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "k_list" in values:
        values["k_list"] = tuple(int(k) for k in values["k_list"])
    config = PipelineConfig(**values)
    config.validate()
    return config


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    out_dir: Path,
    subcommand: str,
    config: PipelineConfig,
    inputs: list[Path],
    outputs: list[Path],
    figure_files: list[Path] | None = None,
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "seed": config.seed,
        "config": config.snapshot(),
        "inputs": {p.name: _sha256(p) for p in inputs},
        "outputs": {p.name: _sha256(p) for p in outputs},
        # figure bytes are viewer fodder, not part of the reproducibility
        # contract, so they are listed without digests
        "figures": sorted(p.name for p in figure_files or []),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from(args) -> PipelineConfig:
    # boolean flags only override when actually set; everything else uses
    # None to mean "not on the command line"
    skip = {"k_list", "normalize", "include_noise_sources"}
    overrides = {
        name: getattr(args, name, None) for name in _CONFIG_FIELDS if name not in skip
    }
    if getattr(args, "k_list", None) is not None:
        overrides["k_list"] = tuple(int(k) for k in args.k_list.split(","))
    if getattr(args, "no_normalize", False):
        overrides["normalize"] = False
    if getattr(args, "include_noise_sources", False):
        overrides["include_noise_sources"] = True
    return load_config(getattr(args, "config", None), overrides)


def cmd_gen(args) -> int:
    config = _config_from(args)
    out = _out_dir(args)
    corpus, truth = generate(config.synth_config())
    corpus_path = out / "corpus.jsonl"
    truth_path = out / "truth.csv"
    write_corpus(corpus, corpus_path)
    write_truth(truth, truth_path)
    print(
        f"generated {corpus.total_tweets} tweets from {corpus.distinct_users} users "
        f"({corpus.total_retweets} retweets) -> {corpus_path}"
    )
    write_manifest(out, "gen", config, [], [corpus_path, truth_path])
    return 0


def cmd_ingest(args) -> int:
    config = _config_from(args)
    out = _out_dir(args)
    corpus = ingest_file(args.input)
    report = {
        "records": corpus.total_tweets,
        "distinct_users": corpus.distinct_users,
        "total_retweets": corpus.total_retweets,
        "skipped_malformed": corpus.skipped_malformed,
        "skipped_duplicates": corpus.skipped_duplicates,
    }
    report_path = out / "ingest_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    outputs = [report_path]
    if args.rewrite:
        clean_path = out / "corpus_normalized.jsonl"
        write_corpus(corpus, clean_path)
        outputs.append(clean_path)
    print(
        f"ingested {corpus.total_tweets} records "
        f"(skipped {corpus.skipped_malformed} malformed, {corpus.skipped_duplicates} duplicate)"
    )
    write_manifest(out, "ingest", config, [Path(args.input)], outputs)
    return 0


def cmd_stats(args) -> int:
    config = _config_from(args)
    out = _out_dir(args)
    corpus = ingest_file(args.input)
    result = corpus_stats(corpus, config.top_k_influencers)
    print(f"tweets:          {result.total_tweets}")
    print(f"distinct users:  {result.distinct_users}")
    print(f"retweets:        {result.total_retweets}")
    print(
        f"top-{result.top_k} share:   {result.retweet_share_of_top_k:.4f} "
        f"of all retweets target the {result.top_k} most-retweeted accounts"
    )
    stats_path = export_stats(result, out / "corpus_stats.csv")
    write_manifest(out, "stats", config, [Path(args.input)], [stats_path])
    return 0


def cmd_net_cluster(args) -> int:
    config = _config_from(args)
    out = _out_dir(args)
    corpus = ingest_file(args.input)
    run = run_network(
        corpus,
        top_k=config.top_k_influencers,
        min_pts=config.min_pts_net,
        threshold_fraction=config.threshold_fraction,
        explicit_threshold=config.explicit_threshold,
        normalize=config.normalize,
        log_rank_offset=config.log_rank_offset,
    )
    if not run.ranking.entries:
        log.warning("corpus has no retweets; emitting empty clustering")
        print("warning: corpus has no retweets; cluster report is empty", file=sys.stderr)
    outputs = [export_net_labels(run.thresholded, run.result, out / "net_labels.csv")]
    if run.fit is not None:
        outputs.append(export_powerlaw(run.fit, out / "powerlaw.csv"))
    funnel = compare_mod.filter_funnel(corpus, net=run)
    outputs.append(export_funnel(funnel, out / "net_funnel.csv"))
    outputs.append(
        export_graph(
            run.thresholded, run.result, ExportSpec(fmt=GEXF, path=out / "graph.gexf")
        )
    )
    outputs.append(
        export_graph(run.thresholded, run.result, ExportSpec(fmt=DOT, path=out / "graph.dot"))
    )
    figure_files = []
    if run.ranking.entries:
        figure_files.append(
            figures.plot_rank_distribution(run.ranking, run.fit, out / "rank_distribution.png")
        )
    clusters = sorted({c for c in run.result.influencer_label.values() if c >= 0})
    print(
        f"network clustering: {len(clusters)} clusters over "
        f"{len(run.thresholded.members)} superusers ({run.thresholded.user_count} users), "
        f"threshold {run.threshold:.4f}"
    )
    write_manifest(out, "net-cluster", config, [Path(args.input)], outputs, figure_files)
    return 0


def cmd_lang_cluster(args) -> int:
    config = _config_from(args)
    out = _out_dir(args)
    corpus = ingest_file(args.input)
    lemmas = LemmaMap.load(args.lemmas) if args.lemmas else bundled_lemma_map()
    stops = StopWordList.load(args.stop_words) if args.stop_words else bundled_stop_words()
    run = run_language(
        corpus,
        lemmas=lemmas,
        stops=stops,
        q_low=config.q_low,
        q_high=config.q_high,
        per_tag_min=config.per_tag_min,
        per_user_min=config.per_user_min,
        k_list=config.k_list,
        base_seed=config.seed,
        min_pts=config.min_pts_lang,
        eps=config.eps_lang,
        min_pts_frac=config.min_pts_frac,
        eps_frac=config.eps_frac,
        top_n_profile=config.top_n_profile,
    )
    if not run.vectors:
        log.warning("no users survived the language filters; emitting empty clustering")
        print("warning: no users survived the language filters", file=sys.stderr)
    outputs = [
        export_lang_labels(run.result, out / "lang_labels.csv"),
        export_consensus_edges(run.consensus, run.eps, out / "consensus_edges.csv"),
        export_profiles(run.profiles, out / "profiles.csv"),
        export_funnel(compare_mod.filter_funnel(corpus, lang=run), out / "lang_funnel.csv"),
    ]
    figure_files = []
    if run.vectors:
        figure_files.append(
            figures.plot_consensus_heatmap(run.consensus, out / "consensus_heatmap.png")
        )
    clusters = sorted({c for c in run.result.user_label.values() if c >= 0})
    print(
        f"language clustering: {len(clusters)} clusters over {len(run.vectors)} users "
        f"(min_pts={run.min_pts}, eps={run.eps}, rounds={run.consensus.rounds})"
    )
    write_manifest(out, "lang-cluster", config, [Path(args.input)], outputs, figure_files)
    return 0


def cmd_compare(args) -> int:
    config = _config_from(args)
    out = _out_dir(args)
    net_dir = Path(args.net_dir)
    lang_dir = Path(args.lang_dir)
    net_labels_path = net_dir / "net_labels.csv"
    lang_labels_path = lang_dir / "lang_labels.csv"
    net_labels = read_user_labels(net_labels_path)
    lang_labels = read_user_labels(lang_labels_path)
    flows = compare_mod.build_sankey(
        net_labels, lang_labels, include_noise_source=config.include_noise_sources
    )
    fractions = compare_mod.overlap_fraction(net_labels, lang_labels)
    outputs = [
        export_sankey_csv(flows, out / "sankey.csv"),
        export_sankey_json(flows, out / "sankey.json"),
        export_overlap(fractions, out / "overlap.csv"),
    ]
    inputs = [net_labels_path, lang_labels_path]
    figure_files = []
    stages = []
    for side_path in (net_dir / "net_funnel.csv", lang_dir / "lang_funnel.csv"):
        if side_path.exists():
            stages.extend(read_funnel(side_path).stages)
            inputs.append(side_path)
    if stages:
        report = compare_mod.FilterReport(stages=tuple(stages))
        outputs.append(export_funnel(report, out / "funnel.csv"))
        figure_files.append(figures.plot_filter_funnel(report, out / "funnel.png"))
        print(report.as_table())
    print(
        f"unmatched users: {fractions[0]:.2%} of net-clustered users have no language cluster, "
        f"{fractions[1]:.2%} vice versa"
    )
    write_manifest(out, "compare", config, inputs, outputs, figure_files)
    return 0


def cmd_export(args) -> int:
    config = _config_from(args)
    out = _out_dir(args)
    corpus = ingest_file(args.input)
    ranking = rank_influencers(corpus, config.top_k_influencers)
    user_edges = build_edges(corpus, ranking)
    graph = aggregate_superusers(user_edges, ranking)
    threshold = 0.0
    if args.stage in (NORMALIZED, THRESHOLDED) and config.normalize:
        graph = normalize_weights(graph, ranking, offset=config.log_rank_offset)
    if args.stage == THRESHOLDED:
        if config.explicit_threshold is not None:
            threshold = float(config.explicit_threshold)
        elif graph.edges:
            threshold = default_threshold(graph, config.threshold_fraction)
        graph = apply_threshold(graph, threshold)
    labels = None
    if args.with_labels:
        if graph.stage != THRESHOLDED:
            raise ValidationError("--with-labels requires --stage thresholded")
        influencer_labels = modified_dbscan(graph, config.min_pts_net)
        params = NetParams(
            min_pts=config.min_pts_net,
            threshold=threshold,
            normalized=config.normalize,
            log_rank_offset=config.log_rank_offset,
        )
        labels = assign_superusers_and_users(graph, influencer_labels, params)
    path = out / f"graph.{args.format}"
    export_graph(graph, labels, ExportSpec(fmt=args.format, path=path, stage=args.stage))
    print(f"exported {args.stage} graph to {path}")
    write_manifest(out, "export", config, [Path(args.input)], [path])
    return 0


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 on usage errors, per the CLI contract."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--out-dir", default=".", help="directory for output artifacts")
    parser.add_argument("--seed", type=int, default=None, help="run seed")


def _add_net_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--top-k-influencers", type=int, default=None, metavar="K")
    parser.add_argument("--threshold-fraction", type=float, default=None, metavar="F")
    parser.add_argument(
        "--explicit-threshold", type=float, default=None, metavar="T",
        help="fixed edge-weight threshold instead of the max-weight fraction",
    )
    parser.add_argument("--min-pts-net", type=int, default=None, metavar="N")
    parser.add_argument("--no-normalize", action="store_true", help="skip log-rank damping")
    parser.add_argument(
        "--log-rank-offset", type=int, default=None, metavar="D",
        help="damping multiplier is log10(rank + D); 0 reproduces the undamped rule",
    )


def _add_lang_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--q-low", type=float, default=None)
    parser.add_argument("--q-high", type=float, default=None)
    parser.add_argument("--per-tag-min", type=int, default=None)
    parser.add_argument("--per-user-min", type=int, default=None)
    parser.add_argument("--k-list", default=None, help="comma-separated k values, one round each")
    parser.add_argument("--min-pts-lang", type=int, default=None)
    parser.add_argument("--eps-lang", type=int, default=None)
    parser.add_argument("--min-pts-frac", type=float, default=None)
    parser.add_argument("--eps-frac", type=float, default=None)
    parser.add_argument("--top-n-profile", type=int, default=None)
    parser.add_argument("--lemmas", default=None, help="surface<TAB>lemma file")
    parser.add_argument("--stop-words", default=None, help="one stop word per line")


def build_parser() -> _Parser:
    parser = _Parser(prog="likeminded", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic corpus with planted communities")
    _add_common(p)
    for flag, typ in [
        ("--n-communities", int),
        ("--influencers-per-community", int),
        ("--users-per-community", int),
        ("--noise-users", int),
        ("--p-in", float),
        ("--retweets-per-user", float),
        ("--power-law-b", float),
        ("--power-law-m", float),
        ("--hashtags-per-community", int),
        ("--shared-hashtags", int),
        ("--hashtag-posts-per-user", float),
    ]:
        p.add_argument(flag, type=typ, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ingest", help="parse a record file and report ingestion counts")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True, help="line-delimited record file")
    p.add_argument("--rewrite", action="store_true", help="write a normalized copy")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="corpus totals and top-K retweet share")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--top-k-influencers", type=int, default=None, metavar="K")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("net-cluster", help="run the retweet-network clustering pipeline")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True)
    _add_net_flags(p)
    p.set_defaults(func=cmd_net_cluster)

    p = sub.add_parser("lang-cluster", help="run the hashtag-language clustering pipeline")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True)
    _add_lang_flags(p)
    p.set_defaults(func=cmd_lang_cluster)

    p = sub.add_parser("compare", help="cross-compare the two label sets")
    _add_common(p)
    p.add_argument("--net-dir", required=True, help="output directory of a net-cluster run")
    p.add_argument("--lang-dir", required=True, help="output directory of a lang-cluster run")
    p.add_argument("--include-noise-sources", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export", help="export the retweet graph at a chosen stage")
    _add_common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--stage", choices=[RAW, NORMALIZED, THRESHOLDED], default=THRESHOLDED)
    p.add_argument("--format", choices=[GEXF, DOT], default=GEXF)
    p.add_argument("--with-labels", action="store_true", help="attach cluster labels")
    _add_net_flags(p)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("LIKEMINDED_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"likeminded: i/o error: {exc}", file=sys.stderr)
        return 2
    except (LikemindedError, ValueError) as exc:
        print(f"likeminded: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
