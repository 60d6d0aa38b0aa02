"""Combinatorial novelty and anticipation indexes from time-windowed co-citation counts."""

__version__ = "0.1.0"

from .cooccur import IntervalCounts, Level, PairKey, count_intervals, enumerate_pairs, merge_counts
from .corpus import (Corpus, Interval, JournalCatalog, PaperRecord, SampleSet, WindowSpec, load_catalog,
                     load_corpus, resolve_levels, select_sample, select_samples)
from .errors import DataError, DegenerateError, NovelciteError, ValidationError
from .indexes import PaperScoreVector, score_papers, weight_w
from .stats import analyze
from .synth import PlantedTrend, SynthConfig, generate_corpus

__all__ = [
    "Corpus", "DataError", "DegenerateError", "Interval", "IntervalCounts", "JournalCatalog", "Level",
    "NovelciteError", "PairKey", "PaperRecord", "PaperScoreVector", "PlantedTrend", "SampleSet", "SynthConfig",
    "ValidationError", "WindowSpec", "analyze", "count_intervals", "enumerate_pairs", "generate_corpus",
    "load_catalog", "load_corpus", "merge_counts", "resolve_levels", "score_papers", "select_sample",
    "select_samples", "weight_w",
]
