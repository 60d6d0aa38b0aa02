import pytest

from novelcite.corpus import Corpus, JournalCatalog, PaperRecord, WindowSpec
from novelcite.synth import SynthConfig


def small_config(seed: int, **kw) -> SynthConfig:
    """A corpus small enough for the brute-force oracle (300 papers)."""
    base = dict(seed=seed, start_year=2000, end_year=2011, papers_per_year=25, n_journals=30,
                n_subjects=8, subject_prob=0.15, ref_min=3, ref_max=10, t0_year=2005,
                past_len=3, future_len=3)
    base.update(kw)
    return SynthConfig(**base)


@pytest.fixture
def toy():
    """Hand-built corpus: cited works X, Y, Z, W and citing papers in every interval.

    Journals: JA -> {ASTRO, PHYS}, JB -> {ASTRO}, JC -> {CHEM}, JU unindexed.
    """
    catalog = JournalCatalog.from_rows([
        ("JA", "ASTRO", "Astro A"), ("JA", "PHYS", "Astro A"),
        ("JB", "ASTRO", "Astro B"),
        ("JC", "CHEM", "Chem C"),
        ("JU", "", "Unindexed U"),
    ])
    records = [
        PaperRecord("X", 1990, "JA"),
        PaperRecord("Y", 1990, "JB"),
        PaperRecord("Z", 1990, "JC"),
        PaperRecord("W", 1990, "JU"),
        PaperRecord("X2", 1991, "JA"),
        # past
        PaperRecord("P1", 2000, "JA", ("X", "Y")),
        PaperRecord("P2", 2001, "JB", ("X", "Y", "Z")),
        # present
        PaperRecord("A", 2003, "JA", ("X", "Y", "Z")),
        PaperRecord("B", 2003, "JB", ("X", "Y", "W", "GHOST")),
        PaperRecord("C", 2003, "JC", ("X", "X2")),  # one astro journal only
        # future
        PaperRecord("F1", 2005, "JA", ("X", "Y")),
        PaperRecord("F2", 2006, "JC", ("Y", "Z", "A")),
    ]
    window = WindowSpec(2003, past_len=3, future_len=3)
    return Corpus.from_records(records), catalog, window


def tc1_config() -> SynthConfig:
    """TC-1: the seeded 200-paper reference corpus."""
    return SynthConfig(seed=2024, start_year=2000, end_year=2009, papers_per_year=20, n_journals=12,
                       n_subjects=4, subject_prob=0.25, ref_min=3, ref_max=9, t0_year=2005, past_len=3,
                       future_len=3, dangling_rate=0.05, unindexed_journals=1)
