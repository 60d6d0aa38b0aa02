"""Co-citation pair enumeration and interval frequency tables.

Element ids are interned per level into sorted vocabularies, so an
unordered pair packs into one ``uint64`` (smaller id in the high word).
Counting works on flat numpy arrays: pair events are generated in chunks
grouped by reference-list length, sorted, and run-length reduced.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, Mapping, Sequence

import numpy as np

from .corpus import Corpus, Interval, JournalCatalog, PaperRecord, SampleSet, WindowSpec, resolve_levels
from .errors import DataError, ValidationError

logger = logging.getLogger(__name__)

_LOW = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)
# pair events materialised per chunk
CHUNK_EVENTS = 4_000_000


class Level(enum.IntEnum):
    PAPER = 0
    JOURNAL = 1
    SUBJECT = 2

    @classmethod
    def parse(cls, value) -> "Level":
        if isinstance(value, Level):
            return value
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise ValidationError(f"unknown level {value!r}") from None


@dataclass(frozen=True, order=True)
class PairKey:
    """Unordered pair of element ids at one level, stored with ``a <= b``."""

    level: Level
    a: str
    b: str

    @classmethod
    def of(cls, level, a: str, b: str) -> "PairKey":
        level = Level.parse(level)
        if level is Level.PAPER and a == b:
            raise ValueError(f"paper-level pair needs two distinct ids, got {a!r} twice")
        return cls(level, *sorted((a, b)))


def enumerate_pairs(record: PaperRecord, corpus: Corpus, catalog: JournalCatalog, level,
                    include_dangling: bool = True) -> list[PairKey]:
    """All pair keys contributed by one citing record, with multiplicity.

    Journal and subject pairs are images of the paper-level pairs; cited
    works without an indexed journal drop out above paper level.
    """
    level = Level.parse(level)
    refs = [r for r in record.references
            if include_dangling or resolve_levels(corpus, catalog, r).status != "dangling"]
    if level is Level.PAPER:
        return [PairKey.of(level, x, y) for x, y in combinations(refs, 2)]
    res = {r: resolve_levels(corpus, catalog, r) for r in refs}
    out = []
    for x, y in combinations(refs, 2):
        rx, ry = res[x], res[y]
        if not (rx.countable_above_paper and ry.countable_above_paper):
            continue
        if level is Level.JOURNAL:
            out.append(PairKey.of(level, rx.journal_id, ry.journal_id))
        else:
            out.extend(PairKey.of(level, s, t)
                       for s in sorted(rx.subjects) for t in sorted(ry.subjects))
    return out


class Vocab:
    """Sorted interning table; ids are positions in sorted order."""

    def __init__(self, strings):
        self.strings: tuple[str, ...] = tuple(sorted(set(strings)))
        self.index = {s: i for i, s in enumerate(self.strings)}

    def __len__(self):
        return len(self.strings)

    def __eq__(self, other):
        return isinstance(other, Vocab) and (self is other or self.strings == other.strings)

    __hash__ = None

    def get(self, s: str) -> int:
        return self.index.get(s, -1)


def pack(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Canonical uint64 keys for unordered id pairs."""
    lo = np.asarray(lo, dtype=np.uint64)
    hi = np.asarray(hi, dtype=np.uint64)
    return (np.minimum(lo, hi) << _SHIFT) | np.maximum(lo, hi)


def unpack(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keys = np.asarray(keys, dtype=np.uint64)
    return (keys >> _SHIFT).astype(np.int64), (keys & _LOW).astype(np.int64)


@dataclass
class Encoding:
    """Integer view of a corpus + catalog shared by counting and scoring.

    Reference lists are CSR arrays indexed by paper vocabulary id.
    ``paper_journal`` maps each paper id to its indexed journal id or -1.
    """

    vocabs: dict[Level, Vocab]
    ref_indptr: np.ndarray
    ref_ids: np.ndarray
    paper_journal: np.ndarray
    sc_indptr: np.ndarray
    sc_ids: np.ndarray
    include_dangling: bool = True

    @property
    def sc_len(self) -> np.ndarray:
        return np.diff(self.sc_indptr)

    def rows(self, paper_ids) -> np.ndarray:
        index = self.vocabs[Level.PAPER].index
        out = np.fromiter((index[p] for p in paper_ids), dtype=np.int64)
        out.sort()
        return out


def encode(corpus: Corpus, catalog: JournalCatalog, include_dangling: bool = True) -> Encoding:
    journals = Vocab(j for j, cats in catalog.subjects.items() if cats)
    subjects = Vocab(catalog.all_categories())

    def keep(ref):
        return include_dangling or corpus.journal_of(ref) is not None

    refs_of = {pid: [r for r in rec.references if keep(r)] for pid, rec in corpus.records.items()}
    strings = set(corpus.records)
    for refs in refs_of.values():
        strings.update(refs)
    papers = Vocab(strings)

    lens = np.zeros(len(papers), dtype=np.int64)
    for pid, refs in refs_of.items():
        lens[papers.index[pid]] = len(refs)
    indptr = np.zeros(len(papers) + 1, dtype=np.int64)
    np.cumsum(lens, out=indptr[1:])
    ref_ids = np.empty(indptr[-1], dtype=np.int64)
    index = papers.index
    for pid, refs in refs_of.items():
        start = indptr[index[pid]]
        ref_ids[start:start + len(refs)] = [index[r] for r in refs]

    paper_journal = np.full(len(papers), -1, dtype=np.int64)
    for i, pid in enumerate(papers.strings):
        paper_journal[i] = journals.get(corpus.journal_of(pid))

    sc_lists = [sorted(subjects.index[s] for s in catalog.subjects[j]) for j in journals.strings]
    sc_indptr = np.zeros(len(journals) + 1, dtype=np.int64)
    np.cumsum([len(s) for s in sc_lists], out=sc_indptr[1:])
    sc_ids = np.array([s for lst in sc_lists for s in lst], dtype=np.int64)
    return Encoding({Level.PAPER: papers, Level.JOURNAL: journals, Level.SUBJECT: subjects},
                    indptr, ref_ids, paper_journal, sc_indptr, sc_ids, include_dangling)


@dataclass
class PairTable:
    """Sorted unique packed keys with their frequencies."""

    keys: np.ndarray
    freq: np.ndarray

    @classmethod
    def empty(cls) -> "PairTable":
        return cls(np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.int64))

    def __len__(self):
        return len(self.keys)

    def total(self) -> int:
        return int(self.freq.sum())

    def lookup(self, keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.uint64)
        if len(self.keys) == 0:
            return np.zeros(len(keys), dtype=np.int64)
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        return np.where(self.keys[pos] == keys, self.freq[pos], 0)

    def __eq__(self, other):
        return (isinstance(other, PairTable) and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.freq, other.freq))


def reduce_keys(keys: np.ndarray, weights: np.ndarray | None = None, presorted: bool = False) -> PairTable:
    """Sum ``weights`` (default 1) per distinct key."""
    keys = np.asarray(keys, dtype=np.uint64)
    if len(keys) == 0:
        return PairTable.empty()
    if weights is None:
        if not presorted:
            keys = np.sort(keys)
        starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
        freq = np.diff(np.append(starts, len(keys)))
        return PairTable(keys[starts], freq.astype(np.int64))
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    weights = np.asarray(weights, dtype=np.int64)[order]
    starts = np.flatnonzero(np.concatenate(([True], keys[1:] != keys[:-1])))
    return PairTable(keys[starts], np.add.reduceat(weights, starts))


def _ref_slice(enc: Encoding, rows: np.ndarray) -> np.ndarray:
    starts = enc.ref_indptr[rows]
    lens = enc.ref_indptr[rows + 1] - starts
    total = int(lens.sum())
    offsets = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
    return enc.ref_ids[np.repeat(starts, lens) + offsets]


def _chunks(enc: Encoding, rows: np.ndarray, limit: int = CHUNK_EVENTS) -> Iterator[np.ndarray]:
    if len(rows) == 0:
        return
    lens = enc.ref_indptr[rows + 1] - enc.ref_indptr[rows]
    load = np.cumsum(lens * (lens - 1) // 2)
    start = 0
    while start < len(rows):
        base = load[start - 1] if start else 0
        stop = int(np.searchsorted(load, base + limit, side="right"))
        stop = max(stop, start + 1)
        yield rows[start:stop]
        start = stop


def paper_pair_events(enc: Encoding, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(owner, a, b)`` for every unordered reference pair of ``rows``.

    ``a`` and ``b`` are paper vocabulary ids in reference-list order.
    """
    rows = np.asarray(rows, dtype=np.int64)
    starts = enc.ref_indptr[rows]
    lens = enc.ref_indptr[rows + 1] - starts
    owners, aa, bb = [], [], []
    for n in np.unique(lens):
        if n < 2:
            continue
        sel = lens == n
        mat = enc.ref_ids[starts[sel][:, None] + np.arange(n)]
        i, j = np.triu_indices(n, 1)
        owners.append(np.repeat(rows[sel], len(i)))
        aa.append(mat[:, i].ravel())
        bb.append(mat[:, j].ravel())
    if not owners:
        e = np.empty(0, dtype=np.int64)
        return e, e, e
    return np.concatenate(owners), np.concatenate(aa), np.concatenate(bb)


def _dedup_owned(owner: np.ndarray, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(keys) == 0:
        return owner, keys
    order = np.lexsort((keys, owner))
    owner, keys = owner[order], keys[order]
    keep = np.concatenate(([True], (owner[1:] != owner[:-1]) | (keys[1:] != keys[:-1])))
    return owner[keep], keys[keep]


def expand_subjects(enc: Encoding, journal_keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cross product of subject categories for each journal pair.

    Returns ``(source_index, subject_keys)``: position of the originating
    journal key and the canonical subject pair key.
    """
    ja, jb = unpack(journal_keys)
    sc_len = enc.sc_len
    na, nb = sc_len[ja], sc_len[jb]
    tot = na * nb
    src = np.repeat(np.arange(len(journal_keys)), tot)
    off = np.arange(int(tot.sum())) - np.repeat(np.cumsum(tot) - tot, tot)
    nb_src = nb[src]
    s = enc.sc_ids[enc.sc_indptr[ja[src]] + off // nb_src]
    t = enc.sc_ids[enc.sc_indptr[jb[src]] + off % nb_src]
    return src, pack(s, t)


def level_pair_events(enc: Encoding, rows: np.ndarray, level, collapse: bool = False
                      ) -> tuple[np.ndarray, np.ndarray]:
    """``(owner, key)`` pair events of ``rows`` at ``level``.

    With ``collapse`` each owner contributes a journal or subject key at
    most once.
    """
    level = Level.parse(level)
    owner, a, b = paper_pair_events(enc, rows)
    if level is Level.PAPER:
        return owner, pack(a, b)
    ja, jb = enc.paper_journal[a], enc.paper_journal[b]
    ok = (ja >= 0) & (jb >= 0)
    owner, keys = owner[ok], pack(ja[ok], jb[ok])
    if collapse:
        owner, keys = _dedup_owned(owner, keys)
    if level is Level.JOURNAL:
        return owner, keys
    src, sc_keys = expand_subjects(enc, keys)
    owner = owner[src]
    if collapse:
        owner, sc_keys = _dedup_owned(owner, sc_keys)
    return owner, sc_keys


@dataclass
class IntervalCounts:
    """Pair frequencies ``F`` and element citation counts ``d`` per
    (interval, level).

    ``cites`` arrays are dense over the level vocabulary. ``citing`` holds
    the sorted paper ids (vocabulary positions) that were counted.
    """

    window: WindowSpec
    vocabs: dict[Level, Vocab]
    pairs: dict[tuple[Interval, Level], PairTable]
    cites: dict[tuple[Interval, Level], np.ndarray]
    citing: dict[Interval, np.ndarray]
    options: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, window: WindowSpec, vocabs: Mapping[Level, Vocab], options=None) -> "IntervalCounts":
        return cls(window, dict(vocabs),
                   {(i, l): PairTable.empty() for i in Interval for l in Level},
                   {(i, l): np.zeros(len(vocabs[l]), dtype=np.int64) for i in Interval for l in Level},
                   {i: np.empty(0, dtype=np.int64) for i in Interval},
                   dict(options or {}))

    def table(self, interval, level) -> PairTable:
        return self.pairs[Interval.parse(interval), Level.parse(level)]

    def key_of(self, pair: PairKey) -> np.uint64 | None:
        vocab = self.vocabs[pair.level]
        a, b = vocab.get(pair.a), vocab.get(pair.b)
        if a < 0 or b < 0:
            return None
        return pack(np.array([a]), np.array([b]))[0]

    def freq(self, interval, pair: PairKey) -> int:
        key = self.key_of(pair)
        if key is None:
            return 0
        return int(self.table(interval, pair.level).lookup(np.array([key]))[0])

    def d(self, interval, level, element: str) -> int:
        level = Level.parse(level)
        i = self.vocabs[level].get(element)
        return 0 if i < 0 else int(self.cites[Interval.parse(interval), level][i])

    def weight_basis(self, level, element: str) -> int:
        """Citations of ``element`` over the past and present intervals."""
        return self.d(Interval.PAST, level, element) + self.d(Interval.PRESENT, level, element)

    def citing_ids(self, interval) -> list[str]:
        strings = self.vocabs[Level.PAPER].strings
        return [strings[i] for i in self.citing[Interval.parse(interval)]]

    def as_dict(self, interval, level) -> dict[tuple[str, str], int]:
        """Pair frequencies keyed by id strings; intended for small corpora."""
        level = Level.parse(level)
        t = self.table(interval, level)
        strings = self.vocabs[level].strings
        a, b = unpack(t.keys)
        return {(strings[x], strings[y]): int(f) for x, y, f in zip(a, b, t.freq)}

    def cites_dict(self, interval, level) -> dict[str, int]:
        level = Level.parse(level)
        arr = self.cites[Interval.parse(interval), level]
        strings = self.vocabs[level].strings
        return {strings[i]: int(arr[i]) for i in np.flatnonzero(arr)}

    def __eq__(self, other):
        if not isinstance(other, IntervalCounts):
            return NotImplemented
        return (self.window == other.window and self.options == other.options
                and all(self.vocabs[l] == other.vocabs[l] for l in Level)
                and all(self.pairs[k] == other.pairs[k] for k in self.pairs)
                and all(np.array_equal(self.cites[k], other.cites[k]) for k in self.cites)
                and all(np.array_equal(self.citing[i], other.citing[i]) for i in Interval))


def _count_rows(enc: Encoding, rows: np.ndarray, collapse: bool) -> tuple[dict, dict]:
    """Pair tables and citation arrays for one interval's citing rows."""
    pairs, cites = {}, {}
    lens = enc.ref_indptr[rows + 1] - enc.ref_indptr[rows]
    n_events = int((lens * (lens - 1) // 2).sum())

    paper_keys = np.empty(n_events, dtype=np.uint64)
    journal_parts, sc_parts = [], []
    pos = 0
    for chunk in _chunks(enc, rows):
        owner, a, b = paper_pair_events(enc, chunk)
        paper_keys[pos:pos + len(a)] = pack(a, b)
        pos += len(a)
        ja, jb = enc.paper_journal[a], enc.paper_journal[b]
        ok = (ja >= 0) & (jb >= 0)
        jkeys = pack(ja[ok], jb[ok])
        if collapse:
            owner, jkeys = _dedup_owned(owner[ok], jkeys)
            src, sc_keys = expand_subjects(enc, jkeys)
            _, sc_keys = _dedup_owned(owner[src], sc_keys)
            sc_parts.append(reduce_keys(sc_keys))
        journal_parts.append(reduce_keys(jkeys))
        del owner, a, b, ja, jb
    paper_keys.sort()
    pairs[Level.PAPER] = reduce_keys(paper_keys, presorted=True)
    del paper_keys
    pairs[Level.JOURNAL] = _merge_tables(journal_parts)
    if collapse:
        pairs[Level.SUBJECT] = _merge_tables(sc_parts)
    else:
        jt = pairs[Level.JOURNAL]
        src, sc_keys = expand_subjects(enc, jt.keys)
        pairs[Level.SUBJECT] = reduce_keys(sc_keys, jt.freq[src])

    refs = _ref_slice(enc, rows)
    cites[Level.PAPER] = np.bincount(refs, minlength=len(enc.vocabs[Level.PAPER])).astype(np.int64)
    rj = enc.paper_journal[refs]
    dj = np.bincount(rj[rj >= 0], minlength=len(enc.vocabs[Level.JOURNAL])).astype(np.int64)
    cites[Level.JOURNAL] = dj
    dsc = np.zeros(len(enc.vocabs[Level.SUBJECT]), dtype=np.int64)
    np.add.at(dsc, enc.sc_ids, np.repeat(dj, enc.sc_len))
    cites[Level.SUBJECT] = dsc
    return pairs, cites


def _merge_tables(tables: Sequence[PairTable]) -> PairTable:
    tables = [t for t in tables if len(t)]
    if not tables:
        return PairTable.empty()
    if len(tables) == 1:
        return tables[0]
    return reduce_keys(np.concatenate([t.keys for t in tables]),
                       np.concatenate([t.freq for t in tables]))


def _count_partition(enc: Encoding, window: WindowSpec, rows: Mapping[Interval, np.ndarray],
                     options: dict) -> IntervalCounts:
    out = IntervalCounts.empty(window, enc.vocabs, options)
    for interval, r in rows.items():
        r = np.sort(np.asarray(r, dtype=np.int64))
        pairs, cites = _count_rows(enc, r, options["collapse_multiplicity"])
        for level in Level:
            out.pairs[interval, level] = pairs[level]
            out.cites[interval, level] = cites[level]
        out.citing[interval] = r
    return out


def _check_samples(samples: Mapping, corpus: Corpus, window: WindowSpec) -> dict[Interval, SampleSet]:
    checked = {}
    for key, sample in samples.items():
        interval = Interval.parse(key)
        if sample.interval != interval:
            raise DataError(f"sample tagged {sample.interval.label} supplied for {interval.label}")
        lo, hi = window.years(interval)
        for pid in sample.paper_ids:
            rec = corpus.records.get(pid)
            if rec is None:
                raise DataError(f"sampled paper {pid!r} not in corpus")
            if not lo <= rec.year <= hi:
                raise DataError(f"window/sample mismatch: {pid!r} ({rec.year}) outside "
                                f"{interval.label} {lo}-{hi}")
        checked[interval] = sample
    return checked


def count_intervals(samples: Mapping, corpus: Corpus, catalog: JournalCatalog, window: WindowSpec, *,
                    shards: int = 1, workers: int | None = None, collapse_multiplicity: bool = False,
                    include_dangling: bool = True, encoding: Encoding | None = None) -> IntervalCounts:
    """Count pair frequencies and element citations for each sampled interval.

    Citing papers are split round-robin (in id order) into ``shards``
    partitions that are counted independently and summed; the result does
    not depend on ``shards`` or ``workers``.
    """
    if shards < 1:
        raise ValidationError("shards must be >= 1")
    samples = _check_samples(samples, corpus, window)
    enc = encoding if encoding is not None else encode(corpus, catalog, include_dangling)
    options = {"collapse_multiplicity": bool(collapse_multiplicity),
               "include_dangling": bool(enc.include_dangling)}
    rows = {i: enc.rows(s.paper_ids) for i, s in samples.items()}
    parts = [{i: r[k::shards] for i, r in rows.items()} for k in range(shards)]
    if shards == 1:
        return _count_partition(enc, window, parts[0], options)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda p: _count_partition(enc, window, p, options), parts))
    else:
        results = [_count_partition(enc, window, p, options) for p in parts]
    return merge_counts(results)


def merge_counts(parts: Sequence[IntervalCounts]) -> IntervalCounts:
    """Pointwise sum of counts over disjoint sets of citing papers."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to merge")
    first = parts[0]
    for p in parts[1:]:
        if p.window != first.window or p.options != first.options:
            raise DataError("cannot merge counts built with different windows or options")
        if any(p.vocabs[l] != first.vocabs[l] for l in Level):
            raise DataError("cannot merge counts with different vocabularies")
    out = IntervalCounts.empty(first.window, first.vocabs, first.options)
    for interval in Interval:
        ids = [p.citing[interval] for p in parts]
        merged = np.concatenate(ids)
        if len(np.unique(merged)) != len(merged):
            raise DataError(f"overlapping partitions in {interval.label}")
        out.citing[interval] = np.sort(merged)
        for level in Level:
            out.pairs[interval, level] = _merge_tables([p.pairs[interval, level] for p in parts])
            out.cites[interval, level] = np.sum([p.cites[interval, level] for p in parts], axis=0,
                                                dtype=np.int64)
    return out
