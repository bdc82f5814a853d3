"""Deterministic serializers for graphs, labels, profiles and reports.

Graphs go to GEXF 1.2 (Gephi) or DOT (Graphviz); everything tabular goes
to CSV with a header row; Sankey data additionally gets a nested-object
JSON file that standard viewers accept. Identical inputs always produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import quoteattr

from .compare import FilterReport, FunnelStage, SankeyFlows
from .core import ValidationError, label_to_text, text_to_label
from .corpus import CorpusStats
from .langcluster import ClusterProfile, ConsensusMatrix, LangClusterResult
from .netcluster import NetClusterResult, PowerLawFit, RetweetGraph, SuperKey

GEXF = "gexf"
DOT = "dot"


@dataclass(frozen=True)
class ExportSpec:
    fmt: str
    path: Path
    stage: str | None = None


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def superuser_node_ids(graph: RetweetGraph) -> dict[SuperKey, str]:
    """Stable short node ids for superusers, in sorted-key order."""
    return {key: f"s{i}" for i, key in enumerate(sorted(graph.members))}


def _node_rows(graph: RetweetGraph, labels: NetClusterResult | None):
    """(node_id, kind, rank, member_count, cluster) per node, influencers first."""
    rows = []
    for rank, influencer in enumerate(graph.influencers, start=1):
        cluster = labels.influencer_label.get(influencer) if labels else None
        rows.append((influencer, "influencer", rank, None, cluster))
    ids = superuser_node_ids(graph)
    for key in sorted(graph.members):
        cluster = labels.superuser_label.get(key) if labels else None
        rows.append((ids[key], "superuser", None, len(graph.members[key]), cluster))
    return rows


def _edge_rows(graph: RetweetGraph):
    ids = superuser_node_ids(graph)
    rank = {influencer: i for i, influencer in enumerate(graph.influencers)}
    return [
        (ids[key], influencer, graph.edges[(key, influencer)])
        for key, influencer in sorted(graph.edges, key=lambda e: (e[0], rank[e[1]]))
    ]


def _write_gexf(graph: RetweetGraph, labels: NetClusterResult | None, path: Path) -> None:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">',
        '  <graph defaultedgetype="undirected">',
        '    <attributes class="node">',
        '      <attribute id="0" title="kind" type="string"/>',
        '      <attribute id="1" title="rank" type="integer"/>',
        '      <attribute id="2" title="member_count" type="integer"/>',
        '      <attribute id="3" title="cluster" type="string"/>',
        "    </attributes>",
        "    <nodes>",
    ]
    for node_id, kind, rank, member_count, cluster in _node_rows(graph, labels):
        lines.append(f"      <node id={quoteattr(node_id)} label={quoteattr(node_id)}>")
        lines.append("        <attvalues>")
        lines.append(f'          <attvalue for="0" value={quoteattr(kind)}/>')
        if rank is not None:
            lines.append(f'          <attvalue for="1" value="{rank}"/>')
        if member_count is not None:
            lines.append(f'          <attvalue for="2" value="{member_count}"/>')
        if cluster is not None:
            lines.append(f'          <attvalue for="3" value={quoteattr(label_to_text(cluster))}/>')
        lines.append("        </attvalues>")
        lines.append("      </node>")
    lines.append("    </nodes>")
    lines.append("    <edges>")
    for idx, (source, target, weight) in enumerate(_edge_rows(graph)):
        lines.append(
            f"      <edge id=\"{idx}\" source={quoteattr(source)} "
            f"target={quoteattr(target)} weight=\"{weight}\"/>"
        )
    lines.append("    </edges>")
    lines.append("  </graph>")
    lines.append("</gexf>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _write_dot(graph: RetweetGraph, labels: NetClusterResult | None, path: Path) -> None:
    lines = ["graph retweet_network {"]
    for node_id, kind, rank, member_count, cluster in _node_rows(graph, labels):
        attrs = [f"kind={_dot_quote(kind)}"]
        if rank is not None:
            attrs.append(f"rank={rank}")
        if member_count is not None:
            attrs.append(f"member_count={member_count}")
        if cluster is not None:
            attrs.append(f"cluster={_dot_quote(label_to_text(cluster))}")
        lines.append(f"  {_dot_quote(node_id)} [{', '.join(attrs)}];")
    for source, target, weight in _edge_rows(graph):
        lines.append(f"  {_dot_quote(source)} -- {_dot_quote(target)} [weight={weight}];")
    lines.append("}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_graph(
    graph: RetweetGraph, labels: NetClusterResult | None, spec: ExportSpec
) -> Path:
    """Write the superuser-influencer graph with node and weight attributes."""
    if spec.stage is not None and graph.stage != spec.stage:
        raise ValidationError(f"graph is at stage {graph.stage!r}, export wants {spec.stage!r}")
    path = Path(spec.path)
    if spec.fmt == GEXF:
        _write_gexf(graph, labels, path)
    elif spec.fmt == DOT:
        _write_dot(graph, labels, path)
    else:
        raise ValidationError(f"unsupported graph export format {spec.fmt!r}")
    return path


def export_consensus_edges(matrix: ConsensusMatrix, eps: int, path: str | Path) -> Path:
    """Edge list of user pairs co-clustered at least ``eps`` times."""
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    order = sorted(range(len(matrix.users)), key=lambda i: matrix.users[i])
    rows = []
    for pos_a, i in enumerate(order):
        for j in order[pos_a + 1 :]:
            count = int(matrix.counts[i, j])
            if count >= eps:
                rows.append((matrix.users[i], matrix.users[j], count))
    return write_csv(path, ["user_a", "user_b", "count"], rows)


def export_profiles(profile: ClusterProfile, path: str | Path) -> Path:
    rows = [
        (cluster, entry.lemma, repr(entry.lift), entry.in_cluster_count)
        for cluster in sorted(profile.clusters)
        for entry in profile.clusters[cluster]
    ]
    return write_csv(path, ["cluster", "lemma", "lift", "in_cluster_count"], rows)


def export_net_labels(
    graph: RetweetGraph, result: NetClusterResult, path: str | Path
) -> Path:
    """Cluster report: one row per influencer, superuser and user."""
    ids = superuser_node_ids(graph)
    rows = []
    for influencer in graph.influencers:
        rows.append((influencer, "influencer", label_to_text(result.influencer_label[influencer])))
    for key in sorted(graph.members):
        rows.append((ids[key], "superuser", label_to_text(result.superuser_label[key])))
    for user in sorted(result.user_label):
        rows.append((user, "user", label_to_text(result.user_label[user])))
    return write_csv(path, ["node_id", "kind", "label"], rows)


def export_lang_labels(result: LangClusterResult, path: str | Path) -> Path:
    rows = [(user, label_to_text(result.user_label[user])) for user in sorted(result.user_label)]
    return write_csv(path, ["user_id", "label"], rows)


def read_user_labels(path: str | Path) -> dict[str, int]:
    """Read user labels back from either label CSV layout."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "user_id" in fields:
            return {row["user_id"]: text_to_label(row["label"]) for row in reader}
        if "node_id" in fields and "kind" in fields:
            return {
                row["node_id"]: text_to_label(row["label"])
                for row in reader
                if row["kind"] == "user"
            }
    raise ValidationError(f"{path} is not a recognized label file")


def export_sankey_csv(flows: SankeyFlows, path: str | Path) -> Path:
    rows = [
        (label_to_text(f.source), label_to_text(f.target), f.user_count) for f in flows.flows
    ]
    return write_csv(path, ["source", "target", "count"], rows)


def export_sankey_json(flows: SankeyFlows, path: str | Path) -> Path:
    """Nested-object form: named nodes plus indexed source/target/value links."""
    names: list[str] = []
    index: dict[str, int] = {}

    def node(name: str) -> int:
        if name not in index:
            index[name] = len(names)
            names.append(name)
        return index[name]

    links = []
    for flow in flows.flows:
        source = node(f"net_{label_to_text(flow.source)}")
        target_name = (
            "undefined" if flow.target < 0 else f"lang_{label_to_text(flow.target)}"
        )
        target = node(target_name)
        links.append({"source": source, "target": target, "value": flow.user_count})
    payload = {"nodes": [{"name": name} for name in names], "links": links}
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def export_funnel(report: FilterReport, path: str | Path) -> Path:
    rows = [
        (st.side, st.name, st.kind, st.items_in, st.items_out, repr(st.filtered_fraction))
        for st in report.stages
    ]
    return write_csv(
        path, ["side", "stage", "kind", "items_in", "items_out", "filtered_fraction"], rows
    )


def read_funnel(path: str | Path) -> FilterReport:
    stages = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            stages.append(
                FunnelStage(
                    side=row["side"],
                    name=row["stage"],
                    kind=row["kind"],
                    items_in=int(row["items_in"]),
                    items_out=int(row["items_out"]),
                )
            )
    return FilterReport(stages=tuple(stages))


def export_stats(corpus_stats: CorpusStats, path: str | Path) -> Path:
    return write_csv(
        path,
        ["total_tweets", "distinct_users", "total_retweets", "top_k", "retweet_share_of_top_k"],
        [
            (
                corpus_stats.total_tweets,
                corpus_stats.distinct_users,
                corpus_stats.total_retweets,
                corpus_stats.top_k,
                repr(corpus_stats.retweet_share_of_top_k),
            )
        ],
    )


def export_powerlaw(fit: PowerLawFit, path: str | Path) -> Path:
    return write_csv(
        path,
        ["m", "b", "r_squared", "degenerate"],
        [(repr(fit.m), repr(fit.b), repr(fit.r_squared), int(fit.degenerate))],
    )


def export_overlap(fractions: tuple[float, float], path: str | Path) -> Path:
    net_unmatched, lang_unmatched = fractions
    return write_csv(
        path,
        ["direction", "fraction_unmatched"],
        [("net_to_lang", repr(net_unmatched)), ("lang_to_net", repr(lang_unmatched))],
    )
