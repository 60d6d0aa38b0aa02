import math
import random
import xml.etree.ElementTree as ET

import networkx as nx
import pandas as pd
import pytest

from novelcite.corpus import Corpus, Interval, JournalCatalog, PaperRecord, SampleSet, WindowSpec, select_sample
from novelcite.errors import ValidationError
from novelcite.graphexport import (NODE_INDEXES, JournalGraph, build_journal_graph, export_graph, gexf_bytes,
                                   journal_index_table, read_gexf)
from novelcite.indexes import SCORE_COLUMNS


def _three_journals():
    catalog = JournalCatalog.from_rows([("J1", "S", "One"), ("J2", "S", "Two"), ("J3", "S", "Three")])
    recs = [PaperRecord(f"w{j}{k}", 1990, f"J{j}") for j in (1, 2, 3) for k in range(4)]
    recs += [
        PaperRecord("a", 2000, "J1", ("w20", "w21")),
        PaperRecord("b", 2000, "J2", ("w10", "w11", "w12", "w20", "w30", "GHOST")),
        PaperRecord("c", 2000, "J3", ("w10", "w13")),
    ]
    corpus = Corpus.from_records(recs)
    return corpus, catalog, SampleSet(Interval.PRESENT, frozenset({"a", "b", "c"}))


def test_edge_weights_and_ranking():
    corpus, catalog, sample = _three_journals()
    g = build_journal_graph(sample, corpus, catalog, top_k=70)
    assert g.edges[("J1", "J2")] == 2
    assert ("J1", "J3") not in g.edges
    # received: J1 5, J2 3, J3 1
    assert {j: n["citations_received"] for j, n in g.nodes.items()} == {"J1": 5, "J2": 3, "J3": 1}
    top2 = build_journal_graph(sample, corpus, catalog, top_k=2)
    assert set(top2.nodes) == {"J1", "J2"}
    assert all(s in top2.nodes and t in top2.nodes for s, t in top2.edges)


def test_top_k_too_large_warns(caplog):
    corpus, catalog, sample = _three_journals()
    build_journal_graph(sample, corpus, catalog, top_k=10)
    assert "exceeds" in caplog.text


def test_out_weight_counts_resolvable_references():
    corpus, catalog, sample = _three_journals()
    g = build_journal_graph(sample, corpus, catalog)
    resolvable = sum(1 for p in sample.paper_ids for r in corpus[p].references if corpus.journal_of(r))
    assert g.out_weight() == resolvable


def test_cocitation_mode_requires_counts():
    corpus, catalog, sample = _three_journals()
    with pytest.raises(ValidationError):
        build_journal_graph(sample, corpus, catalog, edge_mode="cocitation")
    with pytest.raises(ValidationError):
        build_journal_graph(sample, corpus, catalog, edge_mode="bogus")


def test_journal_index_table():
    cols = {c: [math.nan, math.nan, math.nan] for c in SCORE_COLUMNS}
    df = pd.DataFrame(cols)
    df["paper_id"] = ["p1", "p2", "p3"]
    df["journal"] = ["JA", "JA", "JB"]
    df["cit_alt_mean"] = [0.9, 1.1, 0.4]
    df["acit_mean"] = [0.2, 0.4, 0.7]
    t = journal_index_table(df)
    assert t.loc["JA", "cit_alt_mean"] == pytest.approx(1.0)
    assert t.loc["JA", "n_papers"] == 2
    assert t.loc["JB", "acit_mean"] == 0.7
    assert list(t.index) == ["JA", "JB"]
    assert list(journal_index_table(df, top_k=1).index) == ["JA"]
    assert list(journal_index_table(df, ranking=["JB", "JZ", "JA"]).index) == ["JB", "JA"]


def _random_graph(seed: int) -> JournalGraph:
    rng = random.Random(seed)
    n = rng.randint(0, 12)
    ids = [f"J{i:03d}" for i in range(n)]
    g = JournalGraph()
    for j in ids:
        node = {"name": f"Journal & <{j}>", "citations_received": rng.randint(0, 500)}
        for k in NODE_INDEXES:
            node[k] = math.nan if rng.random() < 0.2 else rng.uniform(-1, 3)
        g.nodes[j] = node
    for s in ids:
        for t in ids:
            if rng.random() < 0.3:
                g.edges[s, t] = rng.randint(1, 40)
    return g


def _same(a: JournalGraph, b: JournalGraph):
    assert a.nodes.keys() == b.nodes.keys()
    for j in a.nodes:
        for k, v in a.nodes[j].items():
            w = b.nodes[j][k]
            assert (math.isnan(v) and math.isnan(w)) if isinstance(v, float) and math.isnan(v) else v == w
    assert a.edges == b.edges


@pytest.mark.parametrize("seed", range(10))
def test_gexf_round_trip(tmp_path, seed):
    g = _random_graph(seed)
    path = export_graph(g, tmp_path / "g.gexf", "gexf", {"seed": seed})
    _same(g, read_gexf(path))
    # independent parser
    other = nx.read_gexf(path)
    assert set(other.nodes) == set(g.nodes)
    assert {(s, t): int(d["weight"]) for s, t, d in other.edges(data=True)} == g.edges
    for j, data in other.nodes(data=True):
        assert data["citations_received"] == g.nodes[j]["citations_received"]
        assert data["viz"]["size"] == float(g.nodes[j]["citations_received"])


def test_empty_graph_is_valid(tmp_path):
    path = export_graph(JournalGraph(), tmp_path / "e.gexf")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("gexf")
    assert nx.read_gexf(path).number_of_nodes() == 0


def test_edgelist_rows_and_determinism(tmp_path):
    g = _random_graph(3)
    p = export_graph(g, tmp_path / "e.csv", "edgelist_csv")
    rows = p.read_text().splitlines()
    assert rows[0] == "source,target,weight"
    assert len(rows) - 1 == len(g.edges)
    assert gexf_bytes(g, {"a": 1}) == gexf_bytes(_random_graph(3), {"a": 1})
    with pytest.raises(ValidationError):
        export_graph(g, tmp_path / "x", "png")


def test_graph_from_toy(toy):
    corpus, catalog, window = toy
    sample = select_sample(corpus, catalog, window, "T0", "ASTRO")
    g = build_journal_graph(sample, corpus, catalog, top_k=2)
    # A cites X(JA), Y(JB), Z(JC); B cites X, Y, W(JU)
    assert {j: n["citations_received"] for j, n in g.nodes.items()} == {"JA": 2, "JB": 2}
    assert g.edges == {("JA", "JA"): 1, ("JA", "JB"): 1, ("JB", "JA"): 1, ("JB", "JB"): 1}
