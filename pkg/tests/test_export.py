import csv
import json
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from likeminded.compare import build_sankey, filter_funnel
from likeminded.core import NOISE, ValidationError
from likeminded.export import (
    DOT,
    GEXF,
    ExportSpec,
    export_consensus_edges,
    export_funnel,
    export_graph,
    export_lang_labels,
    export_net_labels,
    export_overlap,
    export_profiles,
    export_sankey_csv,
    export_sankey_json,
    read_funnel,
    read_user_labels,
)
from likeminded.langcluster import (
    ConsensusMatrix,
    LangClusterResult,
    LangParams,
    build_vocabulary,
    profile_clusters,
    total_lemma_counts,
)
from likeminded.netcluster import (
    THRESHOLDED,
    NetParams,
    RetweetGraph,
    assign_superusers_and_users,
    modified_dbscan,
    run_network,
)
from likeminded.synth import SynthConfig, generate


def two_influencer_graph() -> RetweetGraph:
    key = ("alpha", "beta")
    return RetweetGraph(
        influencers=("alpha", "beta"),
        members={key: ("u1", "u2")},
        edges={(key, "alpha"): 3.0, (key, "beta"): 1.5},
        stage=THRESHOLDED,
    )


def labeled(graph: RetweetGraph):
    labels = modified_dbscan(graph, min_pts=1)
    return assign_superusers_and_users(
        graph, labels, NetParams(min_pts=1, threshold=0.0, normalized=False)
    )


# --- DOT --------------------------------------------------------------------


def parse_dot(text: str):
    nodes = set(re.findall(r'^\s*"([^"]+)" \[', text, flags=re.M))
    edges = {
        (a, b, w)
        for a, b, w in re.findall(r'^\s*"([^"]+)" -- "([^"]+)" \[weight=([^\]]+)\];', text, flags=re.M)
    }
    return nodes, edges


def test_dot_counts_nodes_and_edges(tmp_path):
    graph = two_influencer_graph()
    path = export_graph(graph, None, ExportSpec(fmt=DOT, path=tmp_path / "g.dot"))
    nodes, edges = parse_dot(path.read_text(encoding="utf-8"))
    assert nodes == {"alpha", "beta", "s0"}
    assert {(a, b) for a, b, _ in edges} == {("s0", "alpha"), ("s0", "beta")}


def test_dot_empty_graph_is_valid(tmp_path):
    graph = RetweetGraph(influencers=(), members={}, edges={}, stage=THRESHOLDED)
    path = export_graph(graph, None, ExportSpec(fmt=DOT, path=tmp_path / "empty.dot"))
    nodes, edges = parse_dot(path.read_text(encoding="utf-8"))
    assert nodes == set() and edges == set()


# --- GEXF -------------------------------------------------------------------

GEXF_NS = "{http://www.gexf.net/1.2draft}"


def parse_gexf(path):
    root = ET.parse(path).getroot()
    nodes = {}
    for node in root.iter(f"{GEXF_NS}node"):
        attvalues = {
            av.get("for"): av.get("value") for av in node.iter(f"{GEXF_NS}attvalue")
        }
        nodes[node.get("id")] = attvalues
    edges = {
        (e.get("source"), e.get("target"), e.get("weight"))
        for e in root.iter(f"{GEXF_NS}edge")
    }
    return nodes, edges


def test_gexf_roundtrip_structure(tmp_path):
    graph = two_influencer_graph()
    result = labeled(graph)
    path = export_graph(graph, result, ExportSpec(fmt=GEXF, path=tmp_path / "g.gexf"))
    nodes, edges = parse_gexf(path)
    assert set(nodes) == {"alpha", "beta", "s0"}
    assert nodes["alpha"]["0"] == "influencer"
    assert nodes["alpha"]["1"] == "1"  # rank
    assert nodes["s0"]["0"] == "superuser"
    assert nodes["s0"]["2"] == "2"  # member count
    assert nodes["s0"]["3"] == "0"  # cluster label
    assert edges == {("s0", "alpha", "3.0"), ("s0", "beta", "1.5")}


def test_gexf_reparse_matches_graph_multisets(tmp_path):
    corpus, _ = generate(
        SynthConfig(users_per_community=60, retweets_per_user=3.0, hashtag_posts_per_user=0.0, seed=33)
    )
    run = run_network(corpus, top_k=10, threshold_fraction=0.05)
    path = export_graph(
        run.thresholded, run.result, ExportSpec(fmt=GEXF, path=tmp_path / "full.gexf")
    )
    nodes, edges = parse_gexf(path)
    assert len(nodes) == len(run.thresholded.influencers) + len(run.thresholded.members)
    assert len(edges) == len(run.thresholded.edges)
    weights = sorted(float(w) for _, _, w in edges)
    assert weights == pytest.approx(sorted(run.thresholded.edges.values()))


def test_gexf_noise_label_is_pseudo_label(tmp_path):
    graph = RetweetGraph(
        influencers=("lonely",), members={}, edges={}, stage=THRESHOLDED
    )
    result = labeled(graph)
    path = export_graph(graph, result, ExportSpec(fmt=GEXF, path=tmp_path / "n.gexf"))
    nodes, _ = parse_gexf(path)
    assert nodes["lonely"]["3"] == "noise"


def test_export_graph_validates_format_and_stage(tmp_path):
    graph = two_influencer_graph()
    with pytest.raises(ValidationError):
        export_graph(graph, None, ExportSpec(fmt="svg", path=tmp_path / "g.svg"))
    with pytest.raises(ValidationError):
        export_graph(graph, None, ExportSpec(fmt=DOT, path=tmp_path / "g.dot", stage="raw"))


def test_exports_are_deterministic(tmp_path):
    graph = two_influencer_graph()
    result = labeled(graph)
    a = export_graph(graph, result, ExportSpec(fmt=GEXF, path=tmp_path / "a.gexf"))
    b = export_graph(graph, result, ExportSpec(fmt=GEXF, path=tmp_path / "b.gexf"))
    assert a.read_bytes() == b.read_bytes()
    c = export_graph(graph, result, ExportSpec(fmt=DOT, path=tmp_path / "a.dot"))
    d = export_graph(graph, result, ExportSpec(fmt=DOT, path=tmp_path / "b.dot"))
    assert c.read_bytes() == d.read_bytes()


# --- consensus edges --------------------------------------------------------


def consensus_matrix(counts, rounds=5):
    counts = np.array(counts)
    return ConsensusMatrix(
        users=tuple(f"u{i}" for i in range(len(counts))), counts=counts, rounds=rounds
    )


def test_consensus_edges_threshold_filter(tmp_path):
    matrix = consensus_matrix([[0, 4, 1], [4, 0, 5], [1, 5, 0]])
    path = export_consensus_edges(matrix, eps=4, path=tmp_path / "edges.csv")
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    assert {(r["user_a"], r["user_b"], r["count"]) for r in rows} == {
        ("u0", "u1", "4"),
        ("u1", "u2", "5"),
    }


def test_consensus_edges_empty(tmp_path):
    matrix = consensus_matrix([[0, 1], [1, 0]])
    path = export_consensus_edges(matrix, eps=3, path=tmp_path / "edges.csv")
    assert path.read_text(encoding="utf-8") == "user_a,user_b,count\n"


def test_consensus_edges_match_recount(tmp_path):
    rng = np.random.default_rng(3)
    counts = rng.integers(0, 6, size=(12, 12))
    counts = np.triu(counts, 1)
    counts = counts + counts.T
    matrix = consensus_matrix(counts.tolist())
    eps = 3
    path = export_consensus_edges(matrix, eps, tmp_path / "edges.csv")
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    oracle = {
        (frozenset((matrix.users[i], matrix.users[j])), int(counts[i, j]))
        for i in range(12)
        for j in range(i + 1, 12)
        if counts[i, j] >= eps
    }
    assert {(frozenset((r["user_a"], r["user_b"])), int(r["count"])) for r in rows} == oracle


# --- profiles ---------------------------------------------------------------


def test_profiles_csv_passthrough(tmp_path):
    per_user = {"u1": {"only": 4, "both": 4}, "u2": {"both": 8}}
    vocab = build_vocabulary(total_lemma_counts(per_user), q_low=0.0, q_high=1.0)
    result = LangClusterResult(
        user_label={"u1": 0, "u2": 1},
        params=LangParams(k_list=(), min_pts=1, eps=1, base_seed=0),
    )
    profile = profile_clusters(result, per_user, vocab)
    path = export_profiles(profile, tmp_path / "profiles.csv")
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    got = {
        (int(r["cluster"]), r["lemma"], float(r["lift"]), int(r["in_cluster_count"]))
        for r in rows
    }
    expected = {
        (cluster, e.lemma, e.lift, e.in_cluster_count)
        for cluster, entries in profile.clusters.items()
        for e in entries
    }
    assert got == expected


def test_profiles_empty_is_header_only(tmp_path):
    from likeminded.langcluster import ClusterProfile

    path = export_profiles(ClusterProfile(clusters={}), tmp_path / "p.csv")
    assert path.read_text(encoding="utf-8") == "cluster,lemma,lift,in_cluster_count\n"


# --- label files ------------------------------------------------------------


def test_net_labels_roundtrip(tmp_path):
    graph = two_influencer_graph()
    result = labeled(graph)
    path = export_net_labels(graph, result, tmp_path / "net_labels.csv")
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    kinds = {r["kind"] for r in rows}
    assert kinds == {"influencer", "superuser", "user"}
    users = read_user_labels(path)
    assert users == result.user_label


def test_lang_labels_roundtrip(tmp_path):
    result = LangClusterResult(
        user_label={"u1": 0, "u2": NOISE},
        params=LangParams(k_list=(2,), min_pts=1, eps=1, base_seed=0),
    )
    path = export_lang_labels(result, tmp_path / "lang_labels.csv")
    assert read_user_labels(path) == {"u1": 0, "u2": NOISE}


def test_read_user_labels_rejects_unknown_layout(tmp_path):
    path = tmp_path / "odd.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        read_user_labels(path)


# --- sankey and funnel files ------------------------------------------------


def test_sankey_csv_and_json(tmp_path):
    flows = build_sankey({"u1": 0, "u2": 0, "u3": NOISE}, {"u1": 2}, include_noise_source=True)
    csv_path = export_sankey_csv(flows, tmp_path / "sankey.csv")
    rows = list(csv.DictReader(csv_path.open(encoding="utf-8")))
    assert {(r["source"], r["target"]) for r in rows} == {
        ("0", "2"),
        ("0", "undefined"),
        ("noise", "undefined"),
    }
    json_path = export_sankey_json(flows, tmp_path / "sankey.json")
    payload = json.loads(json_path.read_text(encoding="utf-8"))
    names = [n["name"] for n in payload["nodes"]]
    assert "net_0" in names and "undefined" in names and "lang_2" in names
    total = sum(l["value"] for l in payload["links"])
    assert total == 3


def test_funnel_roundtrip(tmp_path):
    from helpers import retweet_corpus

    corpus = retweet_corpus({"u1": {"A": 3}, "u2": {"A": 1}})
    net = run_network(corpus, top_k=1, explicit_threshold=0.0)
    report = filter_funnel(corpus, net=net)
    path = export_funnel(report, tmp_path / "funnel.csv")
    loaded = read_funnel(path)
    assert loaded.stages == report.stages


def test_overlap_csv(tmp_path):
    path = export_overlap((0.25, 0.5), tmp_path / "overlap.csv")
    rows = list(csv.DictReader(path.open(encoding="utf-8")))
    assert rows[0]["direction"] == "net_to_lang"
    assert float(rows[0]["fraction_unmatched"]) == 0.25
    assert float(rows[1]["fraction_unmatched"]) == 0.5
