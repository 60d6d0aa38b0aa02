"""Journal citation network and per-journal index table, exported for Gephi."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .cooccur import IntervalCounts, Level, unpack
from .corpus import Corpus, Interval, JournalCatalog, SampleSet
from .errors import DataError, ValidationError
from .indexes import SCORE_COLUMNS

logger = logging.getLogger(__name__)

NODE_INDEXES = ["cit_alt", "jr_alt", "sc_alt", "acit", "ajr", "asc"]
GEXF_NS = "http://www.gexf.net/1.2draft"
VIZ_NS = "http://www.gexf.net/1.2draft/viz"


@dataclass
class JournalGraph:
    """Journals as nodes; ``edges[(src, dst)]`` is a citation count.

    Node dicts carry ``name``, ``citations_received`` and the mean of each
    index in :data:`NODE_INDEXES` (NaN when unknown).
    """

    nodes: dict[str, dict] = field(default_factory=dict)
    edges: dict[tuple[str, str], int] = field(default_factory=dict)
    directed: bool = True

    def out_weight(self) -> int:
        return sum(self.edges.values())


def journal_index_table(scores: pd.DataFrame, top_k: int | None = None,
                        ranking: list[str] | None = None) -> pd.DataFrame:
    """Unweighted mean of every score column over each journal's papers.

    Rows follow ``ranking`` when given (journals missing from ``scores`` are
    skipped), otherwise paper count then journal id; ``top_k`` truncates.
    """
    cols = [c for c in SCORE_COLUMNS[3:16] if c in scores]
    if scores.empty:
        return pd.DataFrame(columns=["n_papers"] + cols, index=pd.Index([], name="journal"))
    g = scores.groupby("journal", sort=True)
    table = g[cols].mean()
    table.insert(0, "n_papers", g.size())
    if ranking is not None:
        order = [j for j in ranking if j in table.index]
    else:
        order = sorted(table.index, key=lambda j: (-table.at[j, "n_papers"], j))
    if top_k is not None:
        order = order[:top_k]
    table = table.loc[order]
    table.index.name = "journal"
    return table


def build_journal_graph(sample: SampleSet, corpus: Corpus, catalog: JournalCatalog, top_k: int = 70,
                        scores: pd.DataFrame | None = None, edge_mode: str = "citation",
                        counts: IntervalCounts | None = None) -> JournalGraph:
    """Citation network among the ``top_k`` journals most cited by ``sample``.

    ``edge_mode="cocitation"`` replaces citation edges by undirected journal
    co-citation frequencies from the present interval of ``counts``.
    """
    if edge_mode not in ("citation", "cocitation"):
        raise ValidationError(f"unknown edge mode {edge_mode!r}")
    received: Counter = Counter()
    cites: Counter = Counter()
    for pid in sorted(sample.paper_ids):
        rec = corpus[pid]
        for ref in rec.references:
            target = corpus.journal_of(ref)
            if target is None:
                continue
            received[target] += 1
            cites[rec.journal_id, target] += 1
    ranked = sorted(received, key=lambda j: (-received[j], j))
    if top_k > len(ranked):
        logger.warning("top_k=%d exceeds the %d cited journals; keeping all", top_k, len(ranked))
    kept = ranked[:top_k]
    keep = set(kept)

    means = {}
    if scores is not None and not scores.empty:
        table = journal_index_table(scores)
        for j in table.index:
            means[j] = {k: float(table.at[j, f"{k}_mean"]) for k in NODE_INDEXES}
    graph = JournalGraph(directed=edge_mode == "citation")
    for j in sorted(kept):
        node = {"name": catalog.name_of(j), "citations_received": int(received[j])}
        node.update(means.get(j, {k: math.nan for k in NODE_INDEXES}))
        graph.nodes[j] = node

    if edge_mode == "citation":
        graph.edges = {k: v for k, v in sorted(cites.items()) if k[0] in keep and k[1] in keep}
    else:
        if counts is None:
            raise ValidationError("co-citation edges need interval counts")
        table = counts.table(Interval.PRESENT, Level.JOURNAL)
        strings = counts.vocabs[Level.JOURNAL].strings
        a, b = unpack(table.keys)
        edges = {}
        for x, y, f in zip(a, b, table.freq):
            ja, jb = strings[x], strings[y]
            if ja != jb and ja in keep and jb in keep:
                edges[ja, jb] = int(f)
        graph.edges = dict(sorted(edges.items()))
    return graph


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def gexf_bytes(graph: JournalGraph, meta: dict | None = None) -> bytes:
    ET.register_namespace("", GEXF_NS)
    ET.register_namespace("viz", VIZ_NS)
    root = ET.Element(f"{{{GEXF_NS}}}gexf", {"version": "1.2"})
    m = ET.SubElement(root, f"{{{GEXF_NS}}}meta")
    ET.SubElement(m, f"{{{GEXF_NS}}}creator").text = "novelcite"
    if meta is not None:
        ET.SubElement(m, f"{{{GEXF_NS}}}description").text = json.dumps(meta, sort_keys=True)
    g = ET.SubElement(root, f"{{{GEXF_NS}}}graph", {
        "defaultedgetype": "directed" if graph.directed else "undirected", "mode": "static"})
    attrs = ET.SubElement(g, f"{{{GEXF_NS}}}attributes", {"class": "node", "mode": "static"})
    titles = ["name", "citations_received"] + NODE_INDEXES
    types = ["string", "integer"] + ["double"] * len(NODE_INDEXES)
    for i, (t, ty) in enumerate(zip(titles, types)):
        ET.SubElement(attrs, f"{{{GEXF_NS}}}attribute", {"id": str(i), "title": t, "type": ty})
    nodes = ET.SubElement(g, f"{{{GEXF_NS}}}nodes")
    for jid in sorted(graph.nodes):
        node = graph.nodes[jid]
        el = ET.SubElement(nodes, f"{{{GEXF_NS}}}node", {"id": jid, "label": str(node["name"])})
        av = ET.SubElement(el, f"{{{GEXF_NS}}}attvalues")
        for i, t in enumerate(titles):
            v = node.get(t)
            if v is None or (isinstance(v, float) and math.isnan(v)):
                continue
            ET.SubElement(av, f"{{{GEXF_NS}}}attvalue",
                          {"for": str(i), "value": v if t == "name" else _fmt(v)})
        ET.SubElement(el, f"{{{VIZ_NS}}}size", {"value": _fmt(float(node["citations_received"]))})
    edges = ET.SubElement(g, f"{{{GEXF_NS}}}edges")
    for i, ((src, dst), w) in enumerate(sorted(graph.edges.items())):
        ET.SubElement(edges, f"{{{GEXF_NS}}}edge",
                      {"id": str(i), "source": src, "target": dst, "weight": _fmt(float(w))})
    ET.indent(root)
    return ET.tostring(root, encoding="UTF-8", xml_declaration=True) + b"\n"


def edgelist_bytes(graph: JournalGraph) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "target", "weight"])
    for (src, dst), weight in sorted(graph.edges.items()):
        w.writerow([src, dst, weight])
    return buf.getvalue().encode("utf-8")


def export_graph(graph: JournalGraph, path, format: str = "gexf", meta: dict | None = None) -> Path:
    if format == "gexf":
        data = gexf_bytes(graph, meta)
    elif format == "edgelist_csv":
        data = edgelist_bytes(graph)
    else:
        raise ValidationError(f"unknown graph format {format!r}")
    path = Path(path)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from None
    return path


def read_gexf(path) -> JournalGraph:
    """Parse a file written by :func:`export_graph` back into a graph."""
    ns = {"g": GEXF_NS}
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise DataError(f"{path}: invalid GEXF ({exc})") from None
    g = root.find("g:graph", ns)
    titles = {a.get("id"): (a.get("title"), a.get("type"))
              for a in g.findall("g:attributes[@class='node']/g:attribute", ns)}
    graph = JournalGraph(directed=g.get("defaultedgetype", "directed") == "directed")
    for el in g.findall("g:nodes/g:node", ns):
        node = {"name": el.get("label")}
        node.update({k: math.nan for k in NODE_INDEXES})
        for av in el.findall("g:attvalues/g:attvalue", ns):
            title, ty = titles[av.get("for")]
            raw = av.get("value")
            node[title] = int(raw) if ty == "integer" else float(raw) if ty == "double" else raw
        graph.nodes[el.get("id")] = node
    for el in g.findall("g:edges/g:edge", ns):
        w = float(el.get("weight", "1"))
        graph.edges[el.get("source"), el.get("target")] = int(w) if w.is_integer() else w
    return graph
