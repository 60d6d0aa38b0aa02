"""Bibliographic records, the journal catalog, time windows and sampling.

A corpus holds every record available for lookup: citing papers as well
as cited works with metadata. The analysis sample of each interval is a
subset selected by :func:`select_sample`.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataError, ValidationError

logger = logging.getLogger(__name__)


class Interval(enum.IntEnum):
    PAST = 0
    PRESENT = 1
    FUTURE = 2

    @property
    def label(self) -> str:
        return ("T-1", "T0", "T1")[self.value]

    @classmethod
    def parse(cls, value) -> "Interval":
        if isinstance(value, Interval):
            return value
        aliases = {
            "t-1": cls.PAST, "past": cls.PAST,
            "t0": cls.PRESENT, "present": cls.PRESENT,
            "t1": cls.FUTURE, "future": cls.FUTURE,
        }
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ValidationError(f"unknown interval {value!r}") from None


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    year: int
    journal_id: str
    references: tuple[str, ...] = ()


@dataclass(frozen=True)
class WindowSpec:
    """Present years ``[t0_start, t0_end]`` plus adjacent past and future spans."""

    t0_start: int
    t0_end: int | None = None
    past_len: int = 7
    future_len: int = 7

    def __post_init__(self):
        if self.t0_end is None:
            object.__setattr__(self, "t0_end", self.t0_start)
        if self.t0_end < self.t0_start:
            raise ValidationError("t0_end precedes t0_start")
        if self.past_len < 1 or self.future_len < 1:
            raise ValidationError("past_len and future_len must be >= 1")

    def years(self, interval: Interval) -> tuple[int, int]:
        """Inclusive year range of ``interval``."""
        interval = Interval.parse(interval)
        if interval is Interval.PAST:
            return self.t0_start - self.past_len, self.t0_start - 1
        if interval is Interval.PRESENT:
            return self.t0_start, self.t0_end
        return self.t0_end + 1, self.t0_end + self.future_len

    def interval_of(self, year: int) -> Interval | None:
        for interval in Interval:
            lo, hi = self.years(interval)
            if lo <= year <= hi:
                return interval
        return None

    def to_dict(self) -> dict:
        return {"t0_start": self.t0_start, "t0_end": self.t0_end,
                "past_len": self.past_len, "future_len": self.future_len}


@dataclass(frozen=True)
class SampleSet:
    interval: Interval
    paper_ids: frozenset[str]

    def __len__(self):
        return len(self.paper_ids)

    def __contains__(self, paper_id):
        return paper_id in self.paper_ids


@dataclass
class JournalCatalog:
    """Journal -> subject categories and display names.

    Journals listed with no subject category are explicitly unindexed;
    journals absent from the catalog are implicitly so.
    """

    subjects: dict[str, frozenset[str]] = field(default_factory=dict)
    names: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[str, str | None, str | None]]) -> "JournalCatalog":
        subjects: dict[str, set[str]] = defaultdict(set)
        names: dict[str, str] = {}
        for journal_id, category, name in rows:
            subjects[journal_id]
            if category:
                subjects[journal_id].add(category)
            if name:
                names.setdefault(journal_id, name)
        return cls({j: frozenset(s) for j, s in subjects.items()}, names)

    def categories_of(self, journal_id: str) -> frozenset[str]:
        return self.subjects.get(journal_id, frozenset())

    def is_indexed(self, journal_id: str | None) -> bool:
        return bool(journal_id) and bool(self.subjects.get(journal_id))

    def all_categories(self) -> set[str]:
        out: set[str] = set()
        for cats in self.subjects.values():
            out.update(cats)
        return out

    def name_of(self, journal_id: str) -> str:
        return self.names.get(journal_id, journal_id)


@dataclass
class Corpus:
    """Deduplicated records keyed by id.

    ``cited_journals`` optionally supplies the journal of cited works that
    have no record of their own.
    """

    records: dict[str, PaperRecord]
    cited_journals: dict[str, str] = field(default_factory=dict)
    dropped_duplicates: int = 0
    dropped_self_refs: int = 0

    @classmethod
    def from_records(cls, records: Iterable[PaperRecord],
                     cited_journals: Mapping[str, str] | None = None) -> "Corpus":
        out: dict[str, PaperRecord] = {}
        dups = selfs = 0
        for rec in records:
            if rec.paper_id in out:
                raise DataError(f"duplicate paper_id {rec.paper_id!r}")
            refs, d, s = _clean_refs(rec.paper_id, rec.references)
            dups += d
            selfs += s
            out[rec.paper_id] = PaperRecord(rec.paper_id, int(rec.year), rec.journal_id, refs)
        return cls(out, dict(cited_journals or {}), dups, selfs)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records.values())

    def __getitem__(self, paper_id: str) -> PaperRecord:
        return self.records[paper_id]

    def journal_of(self, paper_id: str) -> str | None:
        rec = self.records.get(paper_id)
        if rec is not None:
            return rec.journal_id
        return self.cited_journals.get(paper_id)

    def in_interval(self, window: WindowSpec, interval: Interval) -> list[PaperRecord]:
        lo, hi = window.years(interval)
        return [r for r in self.records.values() if lo <= r.year <= hi]


def _clean_refs(paper_id, refs):
    seen = dict()
    dups = selfs = 0
    for ref in refs:
        ref = str(ref).strip()
        if not ref:
            continue
        if ref == paper_id:
            selfs += 1
        elif ref in seen:
            dups += 1
        else:
            seen[ref] = None
    return tuple(seen), dups, selfs


def _parse_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                refs = obj["refs"]
                if isinstance(refs, str) or not isinstance(refs, list):
                    raise TypeError("refs must be a list")
                yield PaperRecord(str(obj["id"]), int(obj["year"]), str(obj["journal"]),
                                  tuple(str(r) for r in refs))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record ({exc})") from None


def _parse_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"id", "year", "journal", "refs"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            lineno = reader.line_num
            try:
                if not row["id"] or not row["journal"]:
                    raise ValueError("empty id or journal")
                refs = [r for r in (row["refs"] or "").split(";") if r.strip()]
                yield PaperRecord(row["id"].strip(), int(row["year"]), row["journal"].strip(), tuple(refs))
            except (ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record ({exc})") from None


def load_corpus(path, format: str | None = None) -> Corpus:
    """Read a corpus from JSON-Lines or CSV.

    JSON-Lines records look like ``{"id": "A", "year": 2003, "journal": "J1",
    "refs": ["B", "C"]}``; CSV uses the same column names with references
    separated by ``;``. Duplicate references and self-references are dropped
    and tallied on the returned corpus.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    fmt = (format or ("csv" if path.suffix.lower() == ".csv" else "jsonl")).lower()
    if fmt not in ("jsonl", "csv"):
        raise ValidationError(f"unknown corpus format {format!r}")
    parser = _parse_csv if fmt == "csv" else _parse_jsonl
    corpus = Corpus.from_records(parser(path))
    if corpus.dropped_duplicates or corpus.dropped_self_refs:
        logger.info("%s: dropped %d duplicate and %d self references", path,
                    corpus.dropped_duplicates, corpus.dropped_self_refs)
    return corpus


def load_catalog(path) -> JournalCatalog:
    """Read ``journal_id,subject_category_id,journal_name`` rows."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"catalog file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"journal_id", "subject_category_id"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for row in reader:
            if not row["journal_id"]:
                raise DataError(f"{path}:{reader.line_num}: empty journal_id")
            rows.append((row["journal_id"].strip(), (row["subject_category_id"] or "").strip(),
                         (row.get("journal_name") or "").strip()))
    return JournalCatalog.from_rows(rows)


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in corpus:
            fh.write(json.dumps({"id": rec.paper_id, "year": rec.year, "journal": rec.journal_id,
                                 "refs": list(rec.references)}) + "\n")


def write_catalog(catalog: JournalCatalog, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["journal_id", "subject_category_id", "journal_name"])
        for j in sorted(catalog.subjects):
            for sc in sorted(catalog.subjects[j]) or [""]:
                w.writerow([j, sc, catalog.names.get(j, "")])


def unresolved_journals(corpus: Corpus, catalog: JournalCatalog) -> set[str]:
    """Journals used by records that the catalog does not list at all."""
    return {r.journal_id for r in corpus if r.journal_id not in catalog.subjects}


def select_sample(corpus: Corpus, catalog: JournalCatalog, window: WindowSpec, interval,
                  field_category: str, min_field_journals: int = 2) -> SampleSet:
    """Records in ``interval`` citing at least ``min_field_journals`` distinct
    journals that carry ``field_category``."""
    interval = Interval.parse(interval)
    if field_category not in catalog.all_categories():
        raise ValidationError(f"subject category {field_category!r} unknown to catalog")
    field_journals = {j for j, cats in catalog.subjects.items() if field_category in cats}
    selected = set()
    for rec in corpus.in_interval(window, interval):
        if min_field_journals <= 0:
            selected.add(rec.paper_id)
            continue
        hit = set()
        for ref in rec.references:
            j = corpus.journal_of(ref)
            if j in field_journals:
                hit.add(j)
                if len(hit) >= min_field_journals:
                    selected.add(rec.paper_id)
                    break
    return SampleSet(interval, frozenset(selected))


def select_samples(corpus, catalog, window, field_category, min_field_journals=2) -> dict[Interval, SampleSet]:
    return {i: select_sample(corpus, catalog, window, i, field_category, min_field_journals)
            for i in Interval}


@dataclass(frozen=True)
class Resolution:
    journal_id: str | None
    subjects: frozenset[str]
    status: str  # "ok", "unindexed" or "dangling"

    @property
    def countable_above_paper(self) -> bool:
        return self.status == "ok"


def resolve_levels(corpus: Corpus, catalog: JournalCatalog, cited_id: str) -> Resolution:
    journal = corpus.journal_of(cited_id)
    if journal is None:
        return Resolution(None, frozenset(), "dangling")
    if not catalog.is_indexed(journal):
        return Resolution(journal, frozenset(), "unindexed")
    return Resolution(journal, catalog.categories_of(journal), "ok")
