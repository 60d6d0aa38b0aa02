"""Synthetic corpora with planted trends, and a brute-force reference scorer.

Generation uses numpy's ``PCG64`` bit generator, so a seed reproduces the
same corpus on any platform. Cited works are drawn by preferential
attachment: an earlier paper with ``c`` citations is chosen with weight
``(c + 1) ** pa_exponent``.

A planted trend makes each paper published in the trend's interval cite
the designated pair with probability ``trend_base_rate * multiplier``.
Pairs are paper ids at paper level; at journal or subject level a random
earlier paper from the designated journal (or carrying the designated
category) stands in for each element.

:func:`brute_force_counts` and :func:`brute_force_scores` recompute every
quantity with plain dictionaries and nested loops. They share no code with
the vectorised pipeline and serve as its test oracle.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .corpus import Corpus, JournalCatalog, PaperRecord, WindowSpec, write_catalog, write_corpus
from ._io import load_mapping
from .errors import DegenerateError, ValidationError


@dataclass
class PlantedTrend:
    level: str
    a: str
    b: str
    interval: str = "T1"
    multiplier: float = 10.0


@dataclass
class SynthConfig:
    seed: int = 0
    start_year: int = 1990
    end_year: int = 2010
    n_journals: int = 20
    n_subjects: int = 5
    subject_prob: float = 0.2
    field_category: str = "SC00"
    field_share: float = 0.5
    papers_per_year: int = 50
    ref_min: int = 5
    ref_max: int = 15
    pa_exponent: float = 1.0
    journal_zipf: float = 1.0
    dangling_rate: float = 0.0
    unindexed_journals: int = 0
    t0_year: int | None = None
    past_len: int = 7
    future_len: int = 7
    trends: list[PlantedTrend] = field(default_factory=list)
    trend_base_rate: float = 0.02
    trend_cites_pioneers: bool = True

    def __post_init__(self):
        self.trends = [t if isinstance(t, PlantedTrend) else PlantedTrend(**t) for t in self.trends]
        if self.t0_year is None:
            self.t0_year = (self.start_year + self.end_year) // 2

    def validate(self) -> None:
        if self.papers_per_year <= 0:
            raise ValidationError("papers_per_year must be positive (empty corpus)")
        if self.end_year < self.start_year:
            raise ValidationError("end_year precedes start_year")
        for name in ("n_journals", "n_subjects", "ref_min", "ref_max"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.ref_min > self.ref_max:
            raise ValidationError("ref_min exceeds ref_max")
        if self.ref_min > self.papers_per_year:
            raise ValidationError("reference lists longer than the papers available in the first cohort")
        if self.unindexed_journals >= self.n_journals:
            raise ValidationError("at least one journal must be indexed")
        for t in self.trends:
            if t.multiplier < 1:
                raise ValidationError("trend multiplier must be >= 1")

    @property
    def window(self) -> WindowSpec:
        return WindowSpec(self.t0_year, self.t0_year, self.past_len, self.future_len)

    def to_dict(self) -> dict:
        return asdict(self)


def load_synth_config(path) -> SynthConfig:
    data = load_mapping(path, "synth")
    try:
        return SynthConfig(**data)
    except TypeError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def paper_id(i: int) -> str:
    return f"P{i:06d}"


def _make_catalog(cfg: SynthConfig, rng: np.random.Generator):
    journals = [f"J{j:03d}" for j in range(cfg.n_journals)]
    subjects = [f"SC{s:02d}" for s in range(cfg.n_subjects)]
    n_field = max(2, round(cfg.field_share * cfg.n_journals))
    rows = []
    subj_of = {}
    for j, jid in enumerate(journals):
        cats = set()
        if j < n_field or cfg.n_subjects == 1:
            cats.add(subjects[0])
        else:
            cats.add(subjects[1 + j % (cfg.n_subjects - 1)])
        extra = rng.random(cfg.n_subjects) < cfg.subject_prob
        cats.update(s for s, e in zip(subjects, extra) if e)
        subj_of[jid] = cats
        if j < cfg.n_journals - cfg.unindexed_journals:
            rows.extend((jid, s, f"Journal {j:03d}") for s in sorted(cats))
    return journals, subj_of, JournalCatalog.from_rows(rows)


def generate_corpus(config: SynthConfig) -> tuple[Corpus, JournalCatalog]:
    cfg = config
    cfg.validate()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    journals, subj_of, catalog = _make_catalog(cfg, rng)
    jw = 1.0 / np.arange(1, cfg.n_journals + 1) ** cfg.journal_zipf
    jw /= jw.sum()
    window = cfg.window

    n_total = cfg.papers_per_year * (cfg.end_year - cfg.start_year + 1)
    journal_idx = rng.choice(cfg.n_journals, size=n_total, p=jw)
    ids = [paper_id(i) for i in range(n_total)]
    index = {p: i for i, p in enumerate(ids)}
    for t in cfg.trends:
        if t.level.upper() == "PAPER" and (t.a not in index or t.b not in index):
            raise ValidationError(f"planted pair {t.a}/{t.b} not among generated paper ids")
    cites = np.zeros(n_total, dtype=np.float64)
    refs_of: list[list[str]] = [[] for _ in range(n_total)]
    pioneers: dict[int, list[int]] = {}
    ext = 0

    for k, year in enumerate(range(cfg.start_year, cfg.end_year + 1)):
        lo = k * cfg.papers_per_year
        hi = lo + cfg.papers_per_year
        if lo == 0:
            continue
        w = (cites[:lo] + 1.0) ** cfg.pa_exponent
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        lengths = np.minimum(rng.integers(cfg.ref_min, cfg.ref_max + 1, size=hi - lo), lo)
        draws = np.searchsorted(cdf, rng.random((hi - lo, 2 * cfg.ref_max)), side="right")
        draws = np.minimum(draws, lo - 1)
        dangle = rng.random((hi - lo, 2 * cfg.ref_max)) < cfg.dangling_rate
        interval = window.interval_of(year)
        for row in range(hi - lo):
            i = lo + row
            chosen = list(dict.fromkeys(int(x) for x in draws[row]))[: lengths[row]]
            refs = []
            for slot, x in enumerate(chosen):
                if dangle[row, slot]:
                    refs.append(f"EXT{ext:06d}")
                    ext += 1
                else:
                    refs.append(ids[x])
            for t_no, t in enumerate(cfg.trends):
                if interval is None or interval.label != _interval_label(t.interval):
                    continue
                if rng.random() >= min(1.0, cfg.trend_base_rate * t.multiplier):
                    continue
                pair = _trend_members(t, ids, index, journal_idx, journals, subj_of, lo, rng)
                if pair is None:
                    continue
                extra = list(pair)
                pool = pioneers.get(t_no, [])
                if cfg.trend_cites_pioneers and t.level.upper() == "PAPER" and pool:
                    extra.append(ids[pool[int(rng.integers(len(pool)))]])
                refs = list(dict.fromkeys(extra + [r for r in refs if r not in extra]))
                if t.level.upper() == "PAPER":
                    pioneers.setdefault(t_no, []).append(i)
            refs_of[i] = refs
        for i in range(lo, hi):
            for r in refs_of[i]:
                j = index.get(r)
                if j is not None:
                    cites[j] += 1

    years = np.repeat(np.arange(cfg.start_year, cfg.end_year + 1), cfg.papers_per_year)
    records = [PaperRecord(ids[i], int(years[i]), journals[journal_idx[i]], tuple(refs_of[i]))
               for i in range(n_total)]
    return Corpus.from_records(records), catalog


def _interval_label(value: str) -> str:
    v = str(value).strip().lower()
    return {"t-1": "T-1", "past": "T-1", "t0": "T0", "present": "T0", "t1": "T1", "future": "T1"}.get(v, value)


def _trend_members(t, ids, index, journal_idx, journals, subj_of, n_prior, rng):
    level = t.level.upper()
    if level == "PAPER":
        a, b = index[t.a], index[t.b]
        if a >= n_prior or b >= n_prior:
            return None
        return ids[a], ids[b]
    picks = []
    for elem in (t.a, t.b):
        if level == "JOURNAL":
            ok = [journals[j] == elem for j in range(len(journals))]
        elif level == "SUBJECT":
            ok = [elem in subj_of[journals[j]] for j in range(len(journals))]
        else:
            raise ValidationError(f"unknown trend level {t.level!r}")
        cand = np.flatnonzero(np.asarray(ok)[journal_idx[:n_prior]])
        if len(cand) == 0:
            return None
        picks.append(ids[int(cand[rng.integers(len(cand))])])
    if picks[0] == picks[1]:
        return None
    return tuple(picks)


def mirror_future(corpus: Corpus, window: WindowSpec) -> Corpus:
    """Give the k-th future paper the reference list of the k-th past paper.

    Past and future then have identical pair distributions at every level,
    so every share difference is zero. Both intervals must hold the same
    number of papers.
    """
    past = sorted(corpus.in_interval(window, "T-1"), key=lambda r: r.paper_id)
    future = sorted(corpus.in_interval(window, "T1"), key=lambda r: r.paper_id)
    if len(past) != len(future):
        raise ValidationError("past and future intervals differ in size")
    swap = {f.paper_id: p.references for p, f in zip(past, future)}
    return Corpus.from_records(
        [PaperRecord(r.paper_id, r.year, r.journal_id, swap.get(r.paper_id, r.references)) for r in corpus],
        corpus.cited_journals)


def write_synth(config: SynthConfig, outdir) -> tuple[Path, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    corpus, catalog = generate_corpus(config)
    cpath, kpath = outdir / "corpus.jsonl", outdir / "catalog.csv"
    write_corpus(corpus, cpath)
    write_catalog(catalog, kpath)
    return cpath, kpath


# -- brute-force oracle ----------------------------------------------------------

ORACLE_LIMIT = 1000
_TAGS = ("T-1", "T0", "T1")


def _years(window: WindowSpec, tag: str):
    if tag == "T-1":
        return window.t0_start - window.past_len, window.t0_start - 1
    if tag == "T0":
        return window.t0_start, window.t0_end
    return window.t0_end + 1, window.t0_end + window.future_len


def _journal(corpus: Corpus, pid: str):
    if pid in corpus.records:
        return corpus.records[pid].journal_id
    return corpus.cited_journals.get(pid)


def brute_force_counts(corpus: Corpus, catalog: JournalCatalog, window: WindowSpec, field_category: str,
                       min_field_journals: int = 2, collapse_multiplicity: bool = False,
                       include_dangling: bool = True) -> dict:
    """Samples, pair frequencies and citation counts by direct enumeration.

    Returns ``{"sample": {tag: [ids]}, "F": {tag: {level: {(a, b): n}}},
    "d": {tag: {level: {id: n}}}}`` with tags ``T-1``, ``T0``, ``T1`` and
    levels ``PAPER``, ``JOURNAL``, ``SUBJECT``.
    """
    if len(corpus) > ORACLE_LIMIT:
        raise ValidationError(f"brute-force oracle refuses corpora over {ORACLE_LIMIT} papers")
    sample, F, d = {}, {}, {}
    for tag in _TAGS:
        lo, hi = _years(window, tag)
        members = []
        for pid in sorted(corpus.records):
            rec = corpus.records[pid]
            if not lo <= rec.year <= hi:
                continue
            field_journals = []
            for ref in rec.references:
                j = _journal(corpus, ref)
                if j is not None and field_category in catalog.subjects.get(j, ()):
                    if j not in field_journals:
                        field_journals.append(j)
            if len(field_journals) >= min_field_journals:
                members.append(pid)
        sample[tag] = members
        F[tag] = {"PAPER": {}, "JOURNAL": {}, "SUBJECT": {}}
        d[tag] = {"PAPER": {}, "JOURNAL": {}, "SUBJECT": {}}
        for pid in members:
            refs = _oracle_refs(corpus, pid, include_dangling)
            for r in refs:
                d[tag]["PAPER"][r] = d[tag]["PAPER"].get(r, 0) + 1
                j = _indexed_journal(corpus, catalog, r)
                if j is not None:
                    d[tag]["JOURNAL"][j] = d[tag]["JOURNAL"].get(j, 0) + 1
                    for s in catalog.subjects[j]:
                        d[tag]["SUBJECT"][s] = d[tag]["SUBJECT"].get(s, 0) + 1
            pairs = _oracle_pairs(corpus, catalog, refs, collapse_multiplicity)
            for level in ("PAPER", "JOURNAL", "SUBJECT"):
                for key in pairs[level]:
                    F[tag][level][key] = F[tag][level].get(key, 0) + 1
    return {"sample": sample, "F": F, "d": d}


def _oracle_refs(corpus, pid, include_dangling):
    return [r for r in corpus.records[pid].references
            if include_dangling or _journal(corpus, r) is not None]


def _indexed_journal(corpus, catalog, pid):
    j = _journal(corpus, pid)
    if j is None or not catalog.subjects.get(j):
        return None
    return j


def _oracle_pairs(corpus, catalog, refs, collapse):
    out = {"PAPER": [], "JOURNAL": [], "SUBJECT": []}
    for i in range(len(refs)):
        for k in range(i + 1, len(refs)):
            x, y = refs[i], refs[k]
            out["PAPER"].append((min(x, y), max(x, y)))
            jx = _indexed_journal(corpus, catalog, x)
            jy = _indexed_journal(corpus, catalog, y)
            if jx is None or jy is None:
                continue
            out["JOURNAL"].append((min(jx, jy), max(jx, jy)))
            for s in sorted(catalog.subjects[jx]):
                for t in sorted(catalog.subjects[jy]):
                    out["SUBJECT"].append((min(s, t), max(s, t)))
    if collapse:
        for level in ("JOURNAL", "SUBJECT"):
            seen = []
            for key in out[level]:
                if key not in seen:
                    seen.append(key)
            out[level] = seen
    return out


def _p90(values):
    v = sorted(values)
    n = len(v)
    for k in range(1, n + 1):
        if Fraction(k, n) >= Fraction(9, 10):
            return v[k - 1]


def brute_force_scores(corpus: Corpus, catalog: JournalCatalog, window: WindowSpec, field_category: str,
                       min_field_journals: int = 2, collapse_multiplicity: bool = False,
                       include_dangling: bool = True, oracle_counts: dict | None = None) -> dict[str, dict]:
    """Per-paper score vectors keyed by paper id, transcribed formula by formula."""
    bc = oracle_counts or brute_force_counts(corpus, catalog, window, field_category, min_field_journals,
                                             collapse_multiplicity, include_dangling)
    F, d = bc["F"], bc["d"]
    totals = {lv: (sum(F["T-1"][lv].values()), sum(F["T1"][lv].values())) for lv in ("JOURNAL", "SUBJECT")}
    out = {}
    for pid in bc["sample"]["T0"]:
        refs = _oracle_refs(corpus, pid, include_dangling)
        pairs = _oracle_pairs(corpus, catalog, refs, collapse_multiplicity)
        lists = {}
        for level, names in (("PAPER", ("cit", "acit", "cit_alt")), ("JOURNAL", ("jr", "ajr", "jr_alt")),
                             ("SUBJECT", ("sc", "asc", "sc_alt"))):
            novelty, antic, alt, new = [], [], [], []
            for a, b in pairs[level]:
                f_past = F["T-1"][level].get((a, b), 0)
                f_now = F["T0"][level].get((a, b), 0)
                f_fut = F["T1"][level].get((a, b), 0)
                d_a = d["T-1"][level].get(a, 0) + d["T0"][level].get(a, 0)
                d_b = d["T-1"][level].get(b, 0) + d["T0"][level].get(b, 0)
                W = 1 / (d_a * d_b)
                novelty.append((f_past + f_now) * W)
                alt.append(f_now / (f_past + 1))
                if level == "PAPER":
                    antic.append(f_fut * W)
                    new.append(1 if f_past == 0 else 0)
                else:
                    total_past, total_fut = totals[level]
                    if total_past == 0 or total_fut == 0:
                        raise DegenerateError(f"no {level} pairs in the past or future interval")
                    antic.append(f_fut / total_fut - f_past / total_past)
            lists[names[0]], lists[names[1]], lists[names[2]] = novelty, antic, alt
            if level == "PAPER":
                lists["ncit"] = new
        rec = corpus.records[pid]
        row = {"paper_id": pid, "year": rec.year, "journal": rec.journal_id}
        for name in ("cit", "jr", "sc"):
            vals = lists[name]
            row[f"{name}_mean"] = sum(vals) / len(vals) if vals else math.nan
            row[f"{name}_p90"] = _p90(vals) if vals else math.nan
        row["ncit_pct"] = 100 * sum(lists["ncit"]) / len(lists["ncit"]) if lists["ncit"] else math.nan
        for name in ("acit", "ajr", "asc", "cit_alt", "jr_alt", "sc_alt"):
            vals = lists[name]
            row[f"{name}_mean"] = sum(vals) / len(vals) if vals else math.nan
        row["n_pairs_paper"] = len(pairs["PAPER"])
        row["n_pairs_journal"] = len(pairs["JOURNAL"])
        row["n_pairs_subject"] = len(pairs["SUBJECT"])
        row["future_citations"] = d["T1"]["PAPER"].get(pid, 0)
        if row["n_pairs_paper"] + row["n_pairs_journal"] + row["n_pairs_subject"] > 0:
            out[pid] = row
    return out
