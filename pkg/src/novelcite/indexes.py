"""Pair-level novelty and anticipation scores and their per-paper aggregates.

Pair scores are defined on pairs observed among the sampled present-year
papers. Weights use element citation counts pooled over the past and
present intervals.

==========  =====================================================  =======
column      pair score                                             level
==========  =====================================================  =======
cit/jr/sc   (F_past + F_present) / (d_i * d_j)                     P/J/S
ncit        100 * share of pairs with F_past == 0                  P
acit        F_future / (d_i * d_j)                                 P
ajr/asc     F_future / sum F_future - F_past / sum F_past          J/S
*_alt       F_present / (F_past + 1)                               P/J/S
==========  =====================================================  =======
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .cooccur import (Encoding, IntervalCounts, Level, PairKey, encode, level_pair_events, unpack)
from .corpus import Corpus, Interval, JournalCatalog
from .errors import DataError, DegenerateError

SCORE_COLUMNS = [
    "paper_id", "year", "journal",
    "cit_mean", "cit_p90", "jr_mean", "jr_p90", "sc_mean", "sc_p90", "ncit_pct",
    "acit_mean", "ajr_mean", "asc_mean", "cit_alt_mean", "jr_alt_mean", "sc_alt_mean",
    "n_pairs_paper", "n_pairs_journal", "n_pairs_subject", "future_citations",
]

# score prefix -> level, per-paper statistics
SCORE_LEVELS = {
    "cit": (Level.PAPER, ("mean", "p90")),
    "jr": (Level.JOURNAL, ("mean", "p90")),
    "sc": (Level.SUBJECT, ("mean", "p90")),
    "acit": (Level.PAPER, ("mean",)),
    "ajr": (Level.JOURNAL, ("mean",)),
    "asc": (Level.SUBJECT, ("mean",)),
    "cit_alt": (Level.PAPER, ("mean",)),
    "jr_alt": (Level.JOURNAL, ("mean",)),
    "sc_alt": (Level.SUBJECT, ("mean",)),
}
_PAIR_COUNT_COLUMN = {Level.PAPER: "n_pairs_paper", Level.JOURNAL: "n_pairs_journal",
                      Level.SUBJECT: "n_pairs_subject"}


# -- arithmetic ---------------------------------------------------------------

def weight_w(d_i, d_j):
    """Normalisation weight ``1 / (d_i d_j)``; both counts must be >= 1."""
    d_i = np.asarray(d_i)
    d_j = np.asarray(d_j)
    if np.any(d_i < 1) or np.any(d_j < 1):
        raise ValueError("element citation counts must be >= 1")
    w = 1.0 / (d_i.astype(np.float64) * d_j.astype(np.float64))
    return float(w) if w.ndim == 0 else w


def novelty_value(f_past, f_present, d_i, d_j):
    return (np.asarray(f_past) + np.asarray(f_present)) * weight_w(d_i, d_j)


def acit_value(f_future, d_i, d_j):
    return np.asarray(f_future) * weight_w(d_i, d_j)


def alt_ratio_value(f_present, f_past):
    return np.asarray(f_present) / (np.asarray(f_past) + 1.0)


def share_delta_value(f_future, total_future, f_past, total_past):
    if total_future <= 0 or total_past <= 0:
        raise DegenerateError("share difference needs non-zero past and future totals")
    return np.asarray(f_future) / total_future - np.asarray(f_past) / total_past


# -- single-pair scores on counts ---------------------------------------------

def _observed(pair: PairKey, counts: IntervalCounts) -> int:
    f0 = counts.freq(Interval.PRESENT, pair)
    if f0 < 1:
        raise ValueError(f"{pair} not observed in the present interval")
    return f0


def _basis(pair, counts):
    return counts.weight_basis(pair.level, pair.a), counts.weight_basis(pair.level, pair.b)


def novelty_score(pair: PairKey, counts: IntervalCounts) -> float:
    """CIT, JR or SC score of one present-interval pair (by ``pair.level``)."""
    f0 = _observed(pair, counts)
    return float(novelty_value(counts.freq(Interval.PAST, pair), f0, *_basis(pair, counts)))


def absolute_novelty(pair: PairKey, counts: IntervalCounts) -> int:
    return int(counts.freq(Interval.PAST, pair) == 0)


def anticipation_acit(pair: PairKey, counts: IntervalCounts) -> float:
    _observed(pair, counts)
    return float(acit_value(counts.freq(Interval.FUTURE, pair), *_basis(pair, counts)))


def anticipation_share_delta(pair: PairKey, counts: IntervalCounts) -> float:
    """AJR or ASC: future share minus past share of ``pair`` at its level."""
    if pair.level is Level.PAPER:
        raise ValueError("share differences are defined for journal and subject pairs only")
    tf = counts.table(Interval.FUTURE, pair.level).total()
    tp = counts.table(Interval.PAST, pair.level).total()
    return float(share_delta_value(counts.freq(Interval.FUTURE, pair), tf,
                                   counts.freq(Interval.PAST, pair), tp))


def alt_ratio(pair: PairKey, counts: IntervalCounts) -> float:
    f0 = _observed(pair, counts)
    return float(alt_ratio_value(f0, counts.freq(Interval.PAST, pair)))


def share_deltas(counts: IntervalCounts, level) -> tuple[np.ndarray, np.ndarray]:
    """Share difference for every pair seen in the past or future interval.

    Returns ``(keys, delta)``; the deltas sum to zero up to rounding.
    """
    level = Level.parse(level)
    past = counts.table(Interval.PAST, level)
    future = counts.table(Interval.FUTURE, level)
    keys = np.union1d(past.keys, future.keys)
    return keys, share_delta_value(future.lookup(keys), future.total(), past.lookup(keys), past.total())


# -- vectorised scores ----------------------------------------------------------

def pair_scores(counts: IntervalCounts, level, keys: np.ndarray) -> dict[str, np.ndarray]:
    """All scores defined at ``level`` for an array of packed pair keys."""
    level = Level.parse(level)
    keys = np.asarray(keys, dtype=np.uint64)
    f_past = counts.table(Interval.PAST, level).lookup(keys)
    f_now = counts.table(Interval.PRESENT, level).lookup(keys)
    f_fut = counts.table(Interval.FUTURE, level).lookup(keys)
    if len(keys) and f_now.min() < 1:
        raise ValueError("scored pairs must be observed in the present interval")
    basis = counts.cites[Interval.PAST, level] + counts.cites[Interval.PRESENT, level]
    a, b = unpack(keys)
    w = weight_w(basis[a], basis[b]) if len(keys) else np.empty(0)
    out = {}
    if level is Level.PAPER:
        out["cit"] = (f_past + f_now) * w
        out["ncit"] = (f_past == 0).astype(np.float64)
        out["acit"] = f_fut * w
        out["cit_alt"] = alt_ratio_value(f_now, f_past)
        return out
    prefix = "jr" if level is Level.JOURNAL else "sc"
    out[prefix] = (f_past + f_now) * w
    if len(keys):
        tf = counts.table(Interval.FUTURE, level).total()
        tp = counts.table(Interval.PAST, level).total()
        out["a" + prefix] = share_delta_value(f_fut, tf, f_past, tp)
    else:
        out["a" + prefix] = np.empty(0)
    out[prefix + "_alt"] = alt_ratio_value(f_now, f_past)
    return out


def p90_rank(n: int) -> int:
    """1-based nearest rank of the 90th percentile among ``n`` values."""
    return (9 * n + 9) // 10


def nearest_rank_p90(values: Sequence[float]) -> float:
    v = sorted(values)
    if not v:
        raise ValueError("empty sample")
    return v[p90_rank(len(v)) - 1]


def _group_stats(pos: np.ndarray, values: np.ndarray, n: int, p90: bool):
    cnt = np.bincount(pos, minlength=n)
    sums = np.bincount(pos, weights=values, minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(cnt > 0, sums / np.maximum(cnt, 1), np.nan)
    if not p90:
        return cnt, mean, None
    order = np.lexsort((values, pos))
    starts = np.concatenate(([0], np.cumsum(cnt)[:-1]))
    q = np.full(n, np.nan)
    has = cnt > 0
    q[has] = values[order][starts[has] + p90_rank_array(cnt[has]) - 1]
    return cnt, mean, q


def p90_rank_array(n: np.ndarray) -> np.ndarray:
    return (9 * n + 9) // 10


@dataclass
class PaperScoreVector:
    paper_id: str
    year: int | None = None
    journal: str | None = None
    cit_mean: float = math.nan
    cit_p90: float = math.nan
    jr_mean: float = math.nan
    jr_p90: float = math.nan
    sc_mean: float = math.nan
    sc_p90: float = math.nan
    ncit_pct: float = math.nan
    acit_mean: float = math.nan
    ajr_mean: float = math.nan
    asc_mean: float = math.nan
    cit_alt_mean: float = math.nan
    jr_alt_mean: float = math.nan
    sc_alt_mean: float = math.nan
    n_pairs_paper: int = 0
    n_pairs_journal: int = 0
    n_pairs_subject: int = 0
    future_citations: int = 0

    def as_row(self) -> dict:
        return asdict(self)


assert [f.name for f in fields(PaperScoreVector)] == SCORE_COLUMNS


def aggregate_paper(paper_id: str, pair_scores: Mapping[str, Sequence[float]], **extra) -> PaperScoreVector:
    """Aggregate one paper's pair-score multisets into a score vector.

    ``pair_scores`` maps score names (``cit``, ``jr``, ``sc``, ``ncit``,
    ``acit``, ``ajr``, ``asc``, ``cit_alt``, ``jr_alt``, ``sc_alt``) to the
    scores of every pair the paper contributes, with multiplicity. ``ncit``
    holds 0/1 absolute-novelty flags. Names absent or empty stay missing.
    """
    vec = PaperScoreVector(paper_id, **extra)
    for name, (level, stats) in SCORE_LEVELS.items():
        vals = list(pair_scores.get(name, ()))
        if not vals:
            continue
        setattr(vec, _PAIR_COUNT_COLUMN[level], len(vals))
        setattr(vec, f"{name}_mean", float(np.mean(vals)))
        if "p90" in stats:
            setattr(vec, f"{name}_p90", float(nearest_rank_p90(vals)))
    flags = list(pair_scores.get("ncit", ()))
    if flags:
        vec.ncit_pct = 100.0 * sum(flags) / len(flags)
        vec.n_pairs_paper = len(flags)
    return vec


def score_papers(counts: IntervalCounts, corpus: Corpus, catalog: JournalCatalog,
                 encoding: Encoding | None = None) -> pd.DataFrame:
    """Score vectors for every present-interval citing paper in ``counts``.

    One row per paper with at least one countable pair; per-level columns
    are NaN where the paper has no pair at that level.
    """
    enc = encoding or encode(corpus, catalog, counts.options.get("include_dangling", True))
    if any(enc.vocabs[l] != counts.vocabs[l] for l in Level):
        raise DataError("counts were built from a different corpus or catalog")
    collapse = counts.options.get("collapse_multiplicity", False)
    rows = counts.citing[Interval.PRESENT]
    n = len(rows)
    data: dict[str, np.ndarray] = {}
    for level in Level:
        owner, keys = level_pair_events(enc, rows, level, collapse)
        pos = np.searchsorted(rows, owner)
        scores = pair_scores(counts, level, keys)
        for name, values in scores.items():
            if name == "ncit":
                cnt = np.bincount(pos, minlength=n)
                hits = np.bincount(pos, weights=values, minlength=n)
                with np.errstate(invalid="ignore", divide="ignore"):
                    data["ncit_pct"] = np.where(cnt > 0, 100.0 * hits / np.maximum(cnt, 1), np.nan)
                data[_PAIR_COUNT_COLUMN[level]] = cnt
                continue
            want_p90 = "p90" in SCORE_LEVELS[name][1]
            cnt, mean, q = _group_stats(pos, values, n, want_p90)
            data[f"{name}_mean"] = mean
            if want_p90:
                data[f"{name}_p90"] = q
            data[_PAIR_COUNT_COLUMN[level]] = cnt

    strings = counts.vocabs[Level.PAPER].strings
    ids = [strings[i] for i in rows]
    df = pd.DataFrame({
        "paper_id": pd.Series(ids, dtype=object),
        "year": pd.Series([corpus[p].year for p in ids], dtype="Int64"),
        "journal": pd.Series([corpus[p].journal_id for p in ids], dtype=object),
    })
    for col in SCORE_COLUMNS[3:-1]:
        df[col] = data[col]
    df["future_citations"] = counts.cites[Interval.FUTURE, Level.PAPER][rows].astype(np.int64)
    keep = (df[["n_pairs_paper", "n_pairs_journal", "n_pairs_subject"]].sum(axis=1) > 0).to_numpy()
    return df.loc[keep, SCORE_COLUMNS].reset_index(drop=True)


def vectors_from_frame(df: pd.DataFrame) -> list[PaperScoreVector]:
    out = []
    for row in df.to_dict("records"):
        row = {k: (None if isinstance(v, float) and math.isnan(v) and k in ("year", "journal") else v)
               for k, v in row.items()}
        out.append(PaperScoreVector(**row))
    return out
