"""Command-line entry point: ``novelcite {count,score,analyze,graph,synth,pipeline}``.

Stages talk to each other only through files in the output directory::

    count    -> counts.ccl
    score    -> scores.csv
    analyze  -> curves.csv, fits.json
    graph    -> graph.gexf (or graph_edges.csv), journal_table.csv

Every output carries a metadata header with the tool version, the run
configuration, its digest and digests of the input files. Exit status is
0 on success, 2 for invalid configuration, 3 for unreadable or inconsistent
data and 4 when the statistics are degenerate.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from ._io import digest_file, digest_obj, load_mapping, read_csv, write_csv
from .cache import load_counts, save_counts
from .cooccur import count_intervals
from .corpus import Interval, WindowSpec, load_catalog, load_corpus, select_sample, select_samples
from .errors import DataError, NovelciteError, ValidationError
from .graphexport import build_journal_graph, export_graph, journal_index_table
from .indexes import SCORE_COLUMNS, score_papers
from .stats import ANALYSIS_VARIABLES, analyze
from .synth import load_synth_config, write_synth

logger = logging.getLogger("novelcite")

# fields that change how a run executes but never what it produces
EXECUTION_FIELDS = ("outdir", "shards", "workers")


@dataclass
class RunConfig:
    corpus: str | None = None
    catalog: str | None = None
    corpus_format: str | None = None
    t0_start: int | None = None
    t0_end: int | None = None
    past_len: int = 7
    future_len: int = 7
    field_category: str | None = None
    min_field_journals: int = 2
    collapse_multiplicity: bool = False
    include_dangling: bool = True
    top_frac: float = 0.05
    degrees: dict[str, int] = field(default_factory=dict)
    top_k: int = 70
    graph_format: str = "gexf"
    edge_mode: str = "citation"
    outdir: str = "novelcite-out"
    shards: int = 1
    workers: int | None = None

    @classmethod
    def from_sources(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        data = load_mapping(path, "run") if path else {}
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def validate(self, *, need_inputs: bool = True) -> None:
        for name, kinds in _TYPES.items():
            value = getattr(self, name)
            if value is None:
                continue
            ok = isinstance(value, bool) if kinds == (bool,) else (
                isinstance(value, kinds) and not isinstance(value, bool))
            if not ok:
                raise ValidationError(f"{name} has the wrong type ({type(value).__name__})")
        if not isinstance(self.degrees, dict):
            raise ValidationError("degrees must map variable names to integers")
        if need_inputs:
            for name in ("corpus", "catalog", "t0_start", "field_category"):
                if getattr(self, name) in (None, ""):
                    raise ValidationError(f"missing required setting {name!r}")
        if self.t0_start is not None:
            self.window()
        if not 0 < self.top_frac < 1:
            raise ValidationError("top_frac must lie strictly between 0 and 1")
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")
        if self.shards < 1:
            raise ValidationError("shards must be >= 1")
        if self.workers is not None and self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if self.graph_format not in ("gexf", "edgelist_csv"):
            raise ValidationError(f"unknown graph format {self.graph_format!r}")
        if self.edge_mode not in ("citation", "cocitation"):
            raise ValidationError(f"unknown edge mode {self.edge_mode!r}")
        if self.corpus_format not in (None, "jsonl", "csv"):
            raise ValidationError(f"unknown corpus format {self.corpus_format!r}")
        for var, deg in self.degrees.items():
            if var not in ANALYSIS_VARIABLES:
                raise ValidationError(f"degree given for unknown variable {var!r}")
            if not isinstance(deg, int) or not 0 <= deg <= 4:
                raise ValidationError(f"degree for {var} must be an integer in 0..4")

    def window(self) -> WindowSpec:
        try:
            return WindowSpec(int(self.t0_start), None if self.t0_end is None else int(self.t0_end),
                              int(self.past_len), int(self.future_len))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"invalid window: {exc}") from None

    def echo(self) -> dict:
        """The settings that determine results, as recorded in output headers."""
        d = asdict(self)
        for name in EXECUTION_FIELDS:
            d.pop(name)
        return d

    @property
    def out(self) -> Path:
        return Path(self.outdir)


_TYPES = {
    "t0_start": (int,), "t0_end": (int,), "past_len": (int,), "future_len": (int,),
    "min_field_journals": (int,), "top_k": (int,), "shards": (int,), "workers": (int,),
    "top_frac": (int, float), "collapse_multiplicity": (bool,), "include_dangling": (bool,),
    "corpus": (str,), "catalog": (str,), "field_category": (str,), "outdir": (str,),
}


def _meta(cfg: RunConfig, stage: str, inputs: dict[str, Path]) -> dict:
    echo = cfg.echo()
    return {
        "tool": "novelcite",
        "version": __version__,
        "stage": stage,
        "config": echo,
        "config_digest": digest_obj(echo),
        "inputs": {name: digest_file(p) for name, p in sorted(inputs.items())},
    }


def _need(path: Path, what: str) -> Path:
    if not path.exists():
        raise DataError(f"{what} not found: {path} (run the earlier stage first)")
    return path


def _load_inputs(cfg: RunConfig):
    corpus = load_corpus(cfg.corpus, cfg.corpus_format)
    catalog = load_catalog(cfg.catalog)
    return corpus, catalog


def _json_safe(obj):
    if isinstance(obj, float):
        return None if math.isnan(obj) or math.isinf(obj) else obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


# -- stages ------------------------------------------------------------------------

def cmd_count(cfg: RunConfig) -> Path:
    cfg.validate()
    corpus, catalog = _load_inputs(cfg)
    window = cfg.window()
    samples = select_samples(corpus, catalog, window, cfg.field_category, cfg.min_field_journals)
    for interval, sample in samples.items():
        logger.info("%s sample: %d papers", interval.label, len(sample))
    counts = count_intervals(samples, corpus, catalog, window, shards=cfg.shards, workers=cfg.workers,
                             collapse_multiplicity=cfg.collapse_multiplicity,
                             include_dangling=cfg.include_dangling)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "counts.ccl"
    save_counts(counts, path, _meta(cfg, "count", {"corpus": Path(cfg.corpus), "catalog": Path(cfg.catalog)}))
    return path


def cmd_score(cfg: RunConfig, cache: Path | None = None) -> Path:
    cfg.validate()
    cache = _need(cache or cfg.out / "counts.ccl", "counts cache")
    counts, meta = load_counts(cache)
    window = cfg.window()
    if counts.window != window:
        raise DataError(f"{cache}: counts were built for window {counts.window.to_dict()}, "
                        f"config asks for {window.to_dict()}")
    inputs = {"corpus": Path(cfg.corpus), "catalog": Path(cfg.catalog)}
    recorded = meta.get("meta", {}).get("inputs", {})
    for name, p in inputs.items():
        if name in recorded and recorded[name] != digest_file(p):
            raise DataError(f"{cache}: {name} {p} changed since the counts were built")
    corpus, catalog = _load_inputs(cfg)
    scores = score_papers(counts, corpus, catalog)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "scores.csv"
    write_csv(scores, path, _meta(cfg, "score", {**inputs, "counts": cache}))
    return path


def _read_scores(path: Path):
    df, _ = read_csv(_need(path, "score table"), dtype={"paper_id": str, "journal": str})
    missing = [c for c in SCORE_COLUMNS if c not in df]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    return df


def cmd_analyze(cfg: RunConfig, scores_path: Path | None = None) -> tuple[Path, Path]:
    cfg.validate(need_inputs=False)
    scores_path = scores_path or cfg.out / "scores.csv"
    scores = _read_scores(scores_path)
    if scores.empty:
        raise DataError(f"{scores_path}: no scored papers")
    result = analyze(scores, cfg.top_frac, cfg.degrees)
    meta = _meta(cfg, "analyze", {"scores": scores_path})
    cfg.out.mkdir(parents=True, exist_ok=True)
    curves = cfg.out / "curves.csv"
    write_csv(result.curves, curves, meta)
    fits = cfg.out / "fits.json"
    doc = {"meta": meta, **_json_safe(result.report())}
    fits.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return curves, fits


def cmd_graph(cfg: RunConfig, scores_path: Path | None = None, cache: Path | None = None) -> tuple[Path, Path]:
    cfg.validate()
    corpus, catalog = _load_inputs(cfg)
    window = cfg.window()
    sample = select_sample(corpus, catalog, window, Interval.PRESENT, cfg.field_category, cfg.min_field_journals)
    inputs = {"corpus": Path(cfg.corpus), "catalog": Path(cfg.catalog)}
    scores_path = scores_path or cfg.out / "scores.csv"
    scores = None
    if scores_path.exists():
        scores = _read_scores(scores_path)
        inputs["scores"] = scores_path
    else:
        logger.warning("%s not found; node index attributes left empty", scores_path)
    counts = None
    if cfg.edge_mode == "cocitation":
        cache = _need(cache or cfg.out / "counts.ccl", "counts cache")
        counts, _ = load_counts(cache)
        inputs["counts"] = cache
    graph = build_journal_graph(sample, corpus, catalog, cfg.top_k, scores, cfg.edge_mode, counts)
    meta = _meta(cfg, "graph", inputs)
    cfg.out.mkdir(parents=True, exist_ok=True)
    name = "graph.gexf" if cfg.graph_format == "gexf" else "graph_edges.csv"
    gpath = export_graph(graph, cfg.out / name, cfg.graph_format, meta)
    ranking = sorted(graph.nodes, key=lambda j: (-graph.nodes[j]["citations_received"], j))
    if scores is None:
        scores = pd.DataFrame(columns=SCORE_COLUMNS)
    tpath = cfg.out / "journal_table.csv"
    write_csv(journal_index_table(scores, ranking=ranking).reset_index(), tpath, meta)
    return gpath, tpath


def cmd_synth(config_path, outdir, seed: int | None = None) -> tuple[Path, Path]:
    synth = load_synth_config(config_path)
    if seed is not None:
        synth.seed = seed
    synth.validate()
    cpath, kpath = write_synth(synth, outdir)
    settings = asdict(synth)
    manifest = {
        "tool": "novelcite",
        "version": __version__,
        "stage": "synth",
        "config": settings,
        "config_digest": digest_obj(settings),
        "outputs": {p.name: digest_file(p) for p in (cpath, kpath)},
        "window": synth.window.to_dict(),
    }
    (Path(outdir) / "synth_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                                      encoding="utf-8")
    return cpath, kpath


def cmd_pipeline(cfg: RunConfig) -> list[Path]:
    out = [cmd_count(cfg), cmd_score(cfg)]
    out.extend(cmd_analyze(cfg))
    out.extend(cmd_graph(cfg))
    return out


# -- argument parsing ----------------------------------------------------------------

def _degree(text: str) -> tuple[str, int]:
    var, sep, deg = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected VARIABLE=DEGREE")
    try:
        return var.strip(), int(deg)
    except ValueError:
        raise argparse.ArgumentTypeError(f"degree must be an integer, got {deg!r}") from None


def _add_run_flags(p: argparse.ArgumentParser, *, inputs: bool = True, window: bool = True) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="TOML or JSON run configuration (a [run] table is honoured)")
    p.add_argument("--outdir", default=S, help="output directory (default novelcite-out)")
    if inputs:
        p.add_argument("--corpus", default=S, help="corpus file (.jsonl or .csv)")
        p.add_argument("--catalog", default=S, help="journal catalog CSV")
        p.add_argument("--corpus-format", dest="corpus_format", choices=["jsonl", "csv"], default=S)
        p.add_argument("--field", dest="field_category", default=S, help="field subject category id")
        p.add_argument("--min-field-journals", dest="min_field_journals", type=int, default=S)
        p.add_argument("--collapse-multiplicity", dest="collapse_multiplicity", action="store_true", default=S,
                       help="count each journal/subject pair once per citing paper")
        p.add_argument("--exclude-dangling", dest="include_dangling", action="store_false", default=S,
                       help="drop references without metadata at paper level too")
    if window:
        p.add_argument("--t0", dest="t0_start", type=int, default=S, help="first present year")
        p.add_argument("--t0-end", dest="t0_end", type=int, default=S, help="last present year")
        p.add_argument("--past-len", dest="past_len", type=int, default=S)
        p.add_argument("--future-len", dest="future_len", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="novelcite", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"novelcite {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=S)

    p = sub.add_parser("count", parents=[common], help="count co-citation pairs into counts.ccl")
    _add_run_flags(p)
    p.add_argument("--shards", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)

    p = sub.add_parser("score", parents=[common], help="per-paper index table scores.csv")
    _add_run_flags(p)
    p.add_argument("--counts", type=Path, help="counts cache (default OUTDIR/counts.ccl)")

    p = sub.add_parser("analyze", parents=[common], help="hit curves, logit fits and MI")
    _add_run_flags(p, inputs=False, window=False)
    p.add_argument("--scores", type=Path, help="score table (default OUTDIR/scores.csv)")
    p.add_argument("--top-frac", dest="top_frac", type=float, default=S)
    p.add_argument("--degree", dest="degree_list", type=_degree, action="append", metavar="VAR=DEG")

    p = sub.add_parser("graph", parents=[common], help="journal citation network and per-journal table")
    _add_run_flags(p)
    p.add_argument("--scores", type=Path, help="score table (default OUTDIR/scores.csv)")
    p.add_argument("--counts", type=Path, help="counts cache for co-citation edges")
    p.add_argument("--top-k", dest="top_k", type=int, default=S)
    p.add_argument("--format", dest="graph_format", choices=["gexf", "edgelist_csv"], default=S)
    p.add_argument("--edges", dest="edge_mode", choices=["citation", "cocitation"], default=S)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic corpus and catalog")
    p.add_argument("synth_config", type=Path, help="TOML or JSON generator settings")
    p.add_argument("--out", type=Path, required=True, help="directory for corpus.jsonl and catalog.csv")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("pipeline", parents=[common], help="count, score, analyze and graph in one go")
    _add_run_flags(p)
    p.add_argument("--shards", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--top-frac", dest="top_frac", type=float, default=S)
    p.add_argument("--degree", dest="degree_list", type=_degree, action="append", metavar="VAR=DEG")
    p.add_argument("--top-k", dest="top_k", type=int, default=S)
    p.add_argument("--format", dest="graph_format", choices=["gexf", "edgelist_csv"], default=S)
    p.add_argument("--edges", dest="edge_mode", choices=["citation", "cocitation"], default=S)
    return parser


_NON_CONFIG = {"command", "verbose", "config", "counts", "scores", "degree_list"}


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    cfg = RunConfig.from_sources(args.config, overrides)
    if getattr(args, "degree_list", None):
        cfg.degrees = {**cfg.degrees, **dict(args.degree_list)}
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            outputs = list(cmd_synth(args.synth_config, args.out, args.seed))
        else:
            cfg = _run_config(args)
            if args.command == "count":
                outputs = [cmd_count(cfg)]
            elif args.command == "score":
                outputs = [cmd_score(cfg, args.counts)]
            elif args.command == "analyze":
                outputs = list(cmd_analyze(cfg, args.scores))
            elif args.command == "graph":
                outputs = list(cmd_graph(cfg, args.scores, args.counts))
            else:
                outputs = cmd_pipeline(cfg)
    except NovelciteError as exc:
        print(f"novelcite: error: {exc}", file=sys.stderr)
        return exc.exit_code
    for path in outputs:
        print(path)
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))
