"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
The performance criterion is marked ``slow``.
"""

import json
import math
import random
import subprocess
import sys
import time
from collections import Counter
from dataclasses import asdict
from functools import lru_cache

import networkx as nx
import numpy as np
import pandas as pd
import pytest

from novelcite.cli import run
from novelcite.cooccur import Level, count_intervals
from novelcite.corpus import Interval, select_samples
from novelcite.errors import DegenerateError
from novelcite.graphexport import NODE_INDEXES, JournalGraph, export_graph, read_gexf
from novelcite.indexes import SCORE_COLUMNS, score_papers, share_deltas
from novelcite.stats import (DEFAULT_HIERARCHIES, analyze, binary_entropy, fit_logistic_poly, hit_curve,
                             hit_labels, mutual_information, mutual_information_discrete, percentile_rank)
from novelcite.synth import (PlantedTrend, SynthConfig, brute_force_counts, brute_force_scores, generate_corpus,
                             mirror_future, paper_id)

from conftest import small_config, tc1_config

INT_COLUMNS = {"year", "n_pairs_paper", "n_pairs_journal", "n_pairs_subject", "future_citations"}
REAL_COLUMNS = [c for c in SCORE_COLUMNS[3:] if c not in INT_COLUMNS]


@pytest.fixture
def verdict(capsys):
    """Print a PASS/FAIL line for a criterion, then assert it."""

    def report(n: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail

    return report


def _close(a, b) -> bool:
    if isinstance(b, float) and math.isnan(b):
        return isinstance(a, float) and math.isnan(a)
    return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-15)


def _oracle_config(seed: int) -> tuple[SynthConfig, dict]:
    rng = random.Random(seed)
    cfg = small_config(seed, n_journals=rng.choice([12, 25, 40]), n_subjects=rng.choice([3, 5, 8]),
                       dangling_rate=rng.choice([0.0, 0.05]), unindexed_journals=rng.choice([0, 2]))
    opts = dict(min_field_journals=rng.choice([0, 1, 2]), collapse_multiplicity=rng.random() < 0.5,
                include_dangling=rng.random() < 0.7)
    return cfg, opts


def test_criterion_01_oracle_equivalence(verdict):
    start = time.perf_counter()
    checked = degenerate = 0
    problems = []
    for seed in range(50):
        cfg, opts = _oracle_config(seed)
        corpus, catalog = generate_corpus(cfg)
        assert len(corpus) <= 300
        w = cfg.window
        samples = select_samples(corpus, catalog, w, "SC00", opts["min_field_journals"])
        counts = count_intervals(samples, corpus, catalog, w, collapse_multiplicity=opts["collapse_multiplicity"],
                                 include_dangling=opts["include_dangling"])
        oracle = brute_force_counts(corpus, catalog, w, "SC00", **opts)
        for i in Interval:
            if counts.citing_ids(i) != oracle["sample"][i.label]:
                problems.append((seed, i.label, "sample"))
            for lvl in Level:
                if counts.as_dict(i, lvl) != oracle["F"][i.label][lvl.name]:
                    problems.append((seed, i.label, lvl.name, "F"))
                if counts.cites_dict(i, lvl) != oracle["d"][i.label][lvl.name]:
                    problems.append((seed, i.label, lvl.name, "d"))
        try:
            want = brute_force_scores(corpus, catalog, w, "SC00", oracle_counts=oracle, **opts)
        except DegenerateError:
            degenerate += 1
            with pytest.raises(DegenerateError):
                score_papers(counts, corpus, catalog)
            continue
        got = score_papers(counts, corpus, catalog)
        if list(got.paper_id) != list(want):
            problems.append((seed, "paper ids"))
            continue
        for row in got.to_dict("records"):
            exp = want[row["paper_id"]]
            problems += [(seed, row["paper_id"], c) for c in INT_COLUMNS if row[c] != exp[c]]
            problems += [(seed, row["paper_id"], c) for c in REAL_COLUMNS if not _close(row[c], exp[c])]
            checked += 1
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 60 and checked > 0
    verdict(1, ok, f"50 corpora, {checked} paper vectors, {degenerate} degenerate, "
                   f"{len(problems)} mismatches, {elapsed:.1f} s")


def _counts_for(cfg: SynthConfig, corpus=None, catalog=None, **kw):
    if corpus is None:
        corpus, catalog = generate_corpus(cfg)
    w = cfg.window
    return count_intervals(select_samples(corpus, catalog, w, "SC00", 0), corpus, catalog, w, **kw)


def test_criterion_02_share_deltas_sum_to_zero(verdict, toy):
    corpus, catalog, window = toy
    suites = [("toy", count_intervals(select_samples(corpus, catalog, window, "ASTRO"), corpus, catalog, window))]
    for seed in range(10):
        suites.append((f"small-{seed}", _counts_for(small_config(seed, dangling_rate=0.05),
                                                    collapse_multiplicity=seed % 2 == 1)))
    suites.append(("tc1", _counts_for(tc1_config())))
    worst = 0.0
    for _, counts in suites:
        for lvl in (Level.JOURNAL, Level.SUBJECT):
            _, delta = share_deltas(counts, lvl)
            worst = max(worst, abs(float(delta.sum())))
    verdict(2, worst < 1e-9, f"{len(suites)} corpora, max |sum of AJR/ASC| = {worst:.2e}")


@lru_cache(maxsize=None)
def _medium_scores(seed: int) -> pd.DataFrame:
    cfg = SynthConfig(seed=seed, start_year=1990, end_year=2010, papers_per_year=150, n_journals=40,
                      n_subjects=8, ref_min=5, ref_max=25, t0_year=2003, past_len=5, future_len=5)
    corpus, catalog = generate_corpus(cfg)
    return score_papers(_counts_for(cfg, corpus, catalog), corpus, catalog)


def test_criterion_03_base_rate_conservation(verdict):
    rng = np.random.default_rng(31)
    n = 10_000
    ids = [f"p{i}" for i in range(n)]
    lab = hit_labels(pd.Series(rng.permutation(n), index=ids), 0.05)
    curve = hit_curve(percentile_rank(pd.Series(rng.normal(size=n), index=ids)), lab)
    worst = abs((curve.probability * curve.n).sum() / curve.n.sum() - lab.realized_rate)
    rate_gap = abs(lab.realized_rate - 0.05)
    for seed in (1, 2):
        res = analyze(_medium_scores(seed), 0.05, hierarchies=[])
        for _, c in res.curves.groupby("variable"):
            worst = max(worst, abs((c.probability * c.n).sum() / c.n.sum() - res.labels.realized_rate))
    ok = worst < 1e-12 and not lab.degenerate_ties and rate_gap <= 1 / n
    verdict(3, ok, f"max |weighted curve mean - rate| = {worst:.1e}; realized rate {lab.realized_rate} at N={n}")


def test_criterion_04_null_deviance_closed_form(verdict):
    worst = 0.0
    cases = [(17_000, 0.05, 0), (5_000, 0.2, 1), (800, 0.5, 2), (2_500, 0.01, 3)]
    for n, rate, seed in cases:
        rng = np.random.default_rng(seed)
        y = (rng.random(n) < rate).astype(float)
        p = y.mean()
        closed = -2 * n * (p * math.log(p) + (1 - p) * math.log(1 - p))
        fit = fit_logistic_poly(rng.random(n), y, 0)
        worst = max(worst, abs(fit.residual_deviance - closed) / closed)
    exact = np.r_[np.zeros(16_150), np.ones(850)]
    value = fit_logistic_poly(np.linspace(0, 1, exact.size), exact, 0).residual_deviance
    closed = -2 * 17_000 * (0.05 * math.log(0.05) + 0.95 * math.log(0.95))
    worst = max(worst, abs(value - closed) / closed)
    verdict(4, worst < 1e-6, f"max relative error {worst:.1e}; N=17000, p=0.05 gives {value:.2f}")


def test_criterion_05_hierarchical_nesting(verdict):
    frames = [("tc1", None)] + [(f"medium-{s}", s) for s in (1, 2, 3, 4)]
    steps = violations = 0
    for name, seed in frames:
        if seed is None:
            cfg = tc1_config()
            corpus, catalog = generate_corpus(cfg)
            df = score_papers(_counts_for(cfg, corpus, catalog), corpus, catalog)
        else:
            df = _medium_scores(seed)
        res = analyze(df, 0.05, hierarchies=DEFAULT_HIERARCHIES)
        assert len(res.hierarchical) == len(DEFAULT_HIERARCHIES), name
        for fits in res.hierarchical:
            devs = [f.null_deviance for f in fits[:1]] + [f.residual_deviance for f in fits]
            for a, b in zip(devs, devs[1:]):
                steps += 1
                violations += b > a * (1 + 1e-12)
    verdict(5, violations == 0, f"{len(frames)} corpora, {steps} nested steps, {violations} increases")


def test_criterion_06_mutual_information(verdict):
    bins = np.repeat(np.arange(100), 50)
    hits = np.tile((np.arange(50) < 5).astype(int), 100)
    independent = mutual_information_discrete(bins, hits)
    pct = np.arange(1, 101)
    deterministic = mutual_information_discrete(pct, (pct > 95).astype(int))
    rng = np.random.default_rng(6)
    n = 10_000
    ids = [f"p{i}" for i in range(n)]
    lab = hit_labels(pd.Series(rng.permutation(n), index=ids), 0.05)
    shuffled = mutual_information(lab, percentile_rank(pd.Series(rng.random(n), index=ids))).mi_bits
    ok = independent == 0.0 and abs(deterministic - 0.28640) < 1e-4 and shuffled < 0.02
    verdict(6, ok, f"independent {independent}, deterministic {deterministic:.5f} "
                   f"(H(0.05)={binary_entropy(0.05):.5f}), shuffled {shuffled:.4f} bits")


def _trend_trial(seed: int) -> tuple[int, int]:
    start, t0, per_year, span = 1995, 2003, 100, 3
    first = (t0 - 1 - start) * per_year
    a, b = paper_id(first + 3), paper_id(first + 7)
    cfg = SynthConfig(seed=seed, start_year=start, end_year=t0 + span, papers_per_year=per_year, n_journals=30,
                      n_subjects=6, t0_year=t0, past_len=span, future_len=span, trend_base_rate=0.03,
                      trends=[PlantedTrend("PAPER", a, b, "T0", 1.0), PlantedTrend("PAPER", a, b, "T1", 10.0)])
    corpus, catalog = generate_corpus(cfg)
    w = cfg.window
    counts = count_intervals(select_samples(corpus, catalog, w, "SC00", 2), corpus, catalog, w)
    df = score_papers(counts, corpus, catalog).set_index("paper_id")
    top = df.acit_mean.rank(method="max") / len(df) > 0.9
    carriers = [p for p in df.index if {a, b} <= set(corpus[p].references)]
    return len(carriers), sum(bool(top[p]) for p in carriers)


def test_criterion_07_planted_trend(verdict):
    trials = [_trend_trial(seed) for seed in range(20)]
    detected = sum(1 for n, inside in trials if n and inside == n)
    carriers = sum(n for n, _ in trials)
    verdict(7, detected >= 19, f"{detected}/20 seeds with every carrier in the ACIT top decile "
                               f"({carriers} carriers)")


def test_criterion_08_degenerate_share_corpus(verdict):
    nonzero = flat = checked = 0
    for seed in range(5):
        cfg = small_config(40 + seed)
        corpus, catalog = generate_corpus(cfg)
        mirrored = mirror_future(corpus, cfg.window)
        counts = _counts_for(cfg, mirrored, catalog)
        for lvl in (Level.JOURNAL, Level.SUBJECT):
            nonzero += int(np.count_nonzero(share_deltas(counts, lvl)[1]))
        df = score_papers(counts, mirrored, catalog)
        nonzero += int((df.ajr_mean.dropna() != 0).sum() + (df.asc_mean.dropna() != 0).sum())
        # mirrored future papers cite only old work, so hit labels come from the original corpus
        original = score_papers(_counts_for(cfg, corpus, catalog), corpus, catalog)
        assert list(original.paper_id) == list(df.paper_id)
        df["future_citations"] = original.future_citations.to_numpy()
        res = analyze(df, 0.05, variables=["ajr_mean", "asc_mean"], hierarchies=[])
        indexed = df.set_index("paper_id")
        for var, c in res.curves.groupby("variable"):
            # base rate among the papers that carry the variable
            rate = res.labels.labels.loc[indexed[var].dropna().index].mean()
            checked += 1
            flat += len(c) == 1 and math.isclose(c.probability.iloc[0], rate, rel_tol=1e-12)
    ok = nonzero == 0 and flat == checked == 10
    verdict(8, ok, f"{nonzero} non-zero share differences; {flat}/{checked} anticipation curves flat")


def test_criterion_09_determinism(verdict, tmp_path):
    cfg = tc1_config()
    (tmp_path / "synth.json").write_text(json.dumps(asdict(cfg)))
    assert run(["synth", str(tmp_path / "synth.json"), "--out", str(tmp_path / "data")]) == 0
    base = ["--corpus", str(tmp_path / "data" / "corpus.jsonl"), "--catalog", str(tmp_path / "data" / "catalog.csv"),
            "--t0", "2005", "--past-len", "3", "--future-len", "3", "--field", "SC00"]
    assert run(["count", *base, "--outdir", str(tmp_path / "one")]) == 0
    assert run(["count", *base, "--outdir", str(tmp_path / "eight"), "--shards", "8", "--workers", "2"]) == 0
    sharded = (tmp_path / "one" / "counts.ccl").read_bytes() == (tmp_path / "eight" / "counts.ccl").read_bytes()
    for name in ("r1", "r2"):
        assert run(["pipeline", *base, "--outdir", str(tmp_path / name)]) == 0
    files = sorted(p.name for p in (tmp_path / "r1").iterdir())
    same = [n for n in files if (tmp_path / "r1" / n).read_bytes() == (tmp_path / "r2" / n).read_bytes()]
    regenerated = tmp_path / "again"
    assert run(["synth", str(tmp_path / "synth.json"), "--out", str(regenerated)]) == 0
    synth_same = all((regenerated / n).read_bytes() == (tmp_path / "data" / n).read_bytes()
                     for n in ("corpus.jsonl", "catalog.csv", "synth_manifest.json"))
    ok = sharded and len(same) == len(files) and synth_same
    verdict(9, ok, f"8-shard cache identical: {sharded}; {len(same)}/{len(files)} pipeline outputs identical "
                   f"across reruns; synthetic data identical: {synth_same}")


PERF_SCRIPT = """
import json, resource, time
from novelcite.cooccur import count_intervals
from novelcite.corpus import select_samples
from novelcite.synth import SynthConfig, generate_corpus
cfg = SynthConfig(seed=7, start_year=1985, end_year=2005, papers_per_year=6667, n_journals=300, n_subjects=40,
                  ref_min=16, ref_max=44, t0_year=1998, past_len=7, future_len=7)
corpus, catalog = generate_corpus(cfg)
start = time.perf_counter()
samples = select_samples(corpus, catalog, cfg.window, "SC00", 0)
counts = count_intervals(samples, corpus, catalog, cfg.window)
elapsed = time.perf_counter() - start
citing = sum(len(s) for s in samples.values())
events = sum(int(counts.table(i, "PAPER").total()) for i in samples)
refs = sum(len(corpus[p].references) for s in samples.values() for p in s.paper_ids) / citing
print(json.dumps({"seconds": elapsed, "citing": citing, "mean_refs": refs, "paper_pair_events": events}))
"""


@pytest.mark.slow
def test_criterion_10_performance(verdict):
    import resource

    proc = subprocess.run([sys.executable, "-c", PERF_SCRIPT], capture_output=True, text=True, check=True)
    stats = json.loads(proc.stdout.strip().splitlines()[-1])
    peak_gb = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss * 1024 / 1e9
    ok = stats["citing"] >= 100_000 and stats["seconds"] < 60 and peak_gb < 4
    verdict(10, ok, f"{stats['citing']} citing papers, {stats['mean_refs']:.1f} refs each, "
                    f"{stats['paper_pair_events']:.3g} pair events counted in {stats['seconds']:.1f} s; "
                    f"peak RSS {peak_gb:.2f} GB")


def _graph(seed: int) -> JournalGraph:
    rng = random.Random(1000 + seed)
    g = JournalGraph()
    ids = [f"J{i:02d}" for i in range(rng.randint(1, 25))]
    for j in ids:
        g.nodes[j] = {"name": f"Journal {j} & <co>", "citations_received": rng.randint(0, 10_000),
                      **{k: (math.nan if rng.random() < 0.1 else rng.uniform(-5, 50)) for k in NODE_INDEXES}}
    for s in ids:
        for t in ids:
            if rng.random() < 0.25:
                g.edges[s, t] = rng.randint(1, 300)
    return g


def _multisets(nodes, edges):
    node_attrs = Counter()
    for j, attrs in nodes:
        for k, v in attrs.items():
            node_attrs[j, k, "nan" if isinstance(v, float) and math.isnan(v) else v] += 1
    return node_attrs, Counter(edges)


def test_criterion_11_gexf_round_trip(verdict, tmp_path):
    matched = 0
    for seed in range(10):
        g = _graph(seed)
        path = export_graph(g, tmp_path / f"g{seed}.gexf", "gexf", {"seed": seed})
        back = read_gexf(path)
        ours = _multisets(g.nodes.items(), g.edges.items())
        theirs = _multisets(back.nodes.items(), back.edges.items())
        other = nx.read_gexf(path)
        nx_edges = Counter(((s, t), int(d["weight"])) for s, t, d in other.edges(data=True))
        matched += ours == theirs and nx_edges == ours[1] and set(other.nodes) == set(g.nodes)
    verdict(11, matched == 10, f"{matched}/10 random graphs recovered exactly")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
