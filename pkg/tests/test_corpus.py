import json
import random

import pytest

from novelcite.corpus import (Corpus, Interval, JournalCatalog, PaperRecord, WindowSpec, load_catalog,
                              load_corpus, resolve_levels, select_sample, select_samples, write_catalog,
                              write_corpus)
from novelcite.errors import DataError, ValidationError


def _jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def test_load_jsonl_round_trip(tmp_path):
    p = _jsonl(tmp_path / "c.jsonl", [
        {"id": "A", "year": 2003, "journal": "J1", "refs": ["B", "C"]},
        {"id": "B", "year": 2001, "journal": "J2", "refs": []},
        {"id": "C", "year": 2001, "journal": "J1", "refs": []},
    ])
    corpus = load_corpus(p)
    assert len(corpus) == 3
    assert corpus["A"] == PaperRecord("A", 2003, "J1", ("B", "C"))
    out = tmp_path / "again.jsonl"
    write_corpus(corpus, out)
    assert load_corpus(out).records == corpus.records


def test_duplicate_references_dropped(tmp_path):
    p = _jsonl(tmp_path / "c.jsonl", [{"id": "A", "year": 2003, "journal": "J1", "refs": ["B", "B", "C", "A"]}])
    corpus = load_corpus(p)
    assert corpus["A"].references == ("B", "C")
    assert corpus.dropped_duplicates == 1
    assert corpus.dropped_self_refs == 1


def test_duplicate_paper_id_names_it(tmp_path):
    p = _jsonl(tmp_path / "c.jsonl", [
        {"id": "A", "year": 2003, "journal": "J1", "refs": []},
        {"id": "A", "year": 2004, "journal": "J2", "refs": []},
    ])
    with pytest.raises(DataError, match="'A'"):
        load_corpus(p)


def test_malformed_line_reports_line_number(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id": "A", "year": 2003, "journal": "J1", "refs": []}\n{"id": "B", "year": "x"}\n')
    with pytest.raises(DataError, match=":2:"):
        load_corpus(p)


def test_csv_corpus(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,year,journal,refs\nA,2003,J1,B;C;B\nB,2001,J2,\n")
    corpus = load_corpus(p)
    assert corpus["A"].references == ("B", "C")
    assert corpus["B"].references == ()


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_corpus(tmp_path / "nope.jsonl")
    with pytest.raises(DataError, match="not found"):
        load_catalog(tmp_path / "nope.csv")


def test_catalog_round_trip(tmp_path, toy):
    _, catalog, _ = toy
    p = tmp_path / "cat.csv"
    write_catalog(catalog, p)
    again = load_catalog(p)
    assert again.subjects == catalog.subjects
    assert again.categories_of("JA") == {"ASTRO", "PHYS"}
    assert not again.is_indexed("JU")
    assert again.name_of("JB") == "Astro B"


def test_window_intervals():
    w = WindowSpec(2003)
    assert w.years(Interval.PAST) == (1996, 2002)
    assert w.years(Interval.PRESENT) == (2003, 2003)
    assert w.years(Interval.FUTURE) == (2004, 2010)
    w = WindowSpec(2003, 2005, past_len=2, future_len=1)
    assert [w.interval_of(y) for y in range(2000, 2008)] == [
        None, Interval.PAST, Interval.PAST, Interval.PRESENT, Interval.PRESENT, Interval.PRESENT,
        Interval.FUTURE, None]
    with pytest.raises(ValidationError):
        WindowSpec(2003, past_len=0)
    with pytest.raises(ValidationError):
        WindowSpec(2003, 2001)


def _rule_corpus():
    catalog = JournalCatalog.from_rows([("JA", "ASTRO", ""), ("JB", "ASTRO", ""), ("JC", "CHEM", "")])
    recs = [PaperRecord(f"a{i}", 1990, "JA") for i in range(5)] + [PaperRecord("b0", 1990, "JB")]
    recs += [
        PaperRecord("two", 2003, "JC", ("a0", "a1", "b0")),
        PaperRecord("one", 2003, "JC", ("a0", "a1", "a2", "a3", "a4")),
    ]
    return Corpus.from_records(recs), catalog


def test_sampling_rule_counts_distinct_journals():
    corpus, catalog = _rule_corpus()
    s = select_sample(corpus, catalog, WindowSpec(2003), "T0", "ASTRO")
    assert s.paper_ids == {"two"}
    assert s.interval is Interval.PRESENT


def test_min_zero_returns_whole_interval():
    corpus, catalog = _rule_corpus()
    assert select_sample(corpus, catalog, WindowSpec(2003), "T0", "ASTRO", 0).paper_ids == {"two", "one"}


def test_empty_corpus_and_unknown_category():
    _, catalog = _rule_corpus()
    empty = Corpus.from_records([])
    assert len(select_sample(empty, catalog, WindowSpec(2003), "T0", "ASTRO")) == 0
    with pytest.raises(ValidationError):
        select_sample(empty, catalog, WindowSpec(2003), "T0", "BIO")


def test_samples_disjoint_and_order_independent(toy):
    corpus, catalog, window = toy
    samples = select_samples(corpus, catalog, window, "ASTRO")
    assert samples[Interval.PAST].paper_ids == {"P1", "P2"}
    assert samples[Interval.PRESENT].paper_ids == {"A", "B"}
    assert samples[Interval.FUTURE].paper_ids == {"F1", "F2"}
    sets = [s.paper_ids for s in samples.values()]
    assert not (sets[0] & sets[1] or sets[1] & sets[2] or sets[0] & sets[2])
    recs = list(corpus)
    random.Random(4).shuffle(recs)
    shuffled = Corpus.from_records(recs)
    assert select_samples(shuffled, catalog, window, "ASTRO") == samples
    assert select_samples(shuffled, catalog, window, "ASTRO") == select_samples(shuffled, catalog, window, "ASTRO")


def test_resolve_levels(toy):
    corpus, catalog, _ = toy
    r = resolve_levels(corpus, catalog, "X")
    assert (r.journal_id, r.subjects, r.status) == ("JA", {"ASTRO", "PHYS"}, "ok")
    assert resolve_levels(corpus, catalog, "W").status == "unindexed"
    assert resolve_levels(corpus, catalog, "GHOST").status == "dangling"
    assert not resolve_levels(corpus, catalog, "GHOST").countable_above_paper


def test_cited_works_table_resolves_journal():
    catalog = JournalCatalog.from_rows([("JA", "ASTRO", "")])
    corpus = Corpus.from_records([PaperRecord("A", 2003, "JA", ("EXT1",))], cited_journals={"EXT1": "JA"})
    assert resolve_levels(corpus, catalog, "EXT1").status == "ok"
