"""Run the command-line pipeline end to end and summarise the journal network.

    python demos/journal_network.py [workdir]
"""

import json
import sys
import tempfile
from pathlib import Path

from novelcite._io import read_csv
from novelcite.cli import run
from novelcite.graphexport import read_gexf
from novelcite.synth import SynthConfig


def main() -> None:
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="novelcite-"))
    cfg = SynthConfig(seed=11, start_year=1990, end_year=2010, papers_per_year=150, n_journals=60,
                      n_subjects=10, t0_year=2003, past_len=5, future_len=5)
    root.mkdir(parents=True, exist_ok=True)
    (root / "synth.json").write_text(json.dumps(cfg.to_dict()))
    run(["synth", str(root / "synth.json"), "--out", str(root / "data")])
    status = run(["pipeline", "--corpus", str(root / "data" / "corpus.jsonl"),
                  "--catalog", str(root / "data" / "catalog.csv"), "--t0", "2003",
                  "--past-len", "5", "--future-len", "5", "--field", "SC00",
                  "--top-k", "20", "--outdir", str(root / "out")])
    if status:
        sys.exit(status)

    graph = read_gexf(root / "out" / "graph.gexf")
    print(f"\n{len(graph.nodes)} journals, {len(graph.edges)} citation edges")
    heavy = sorted(graph.edges.items(), key=lambda kv: -kv[1])[:5]
    for (s, t), w in heavy:
        print(f"  {s} -> {t}: {w}")

    table, _ = read_csv(root / "out" / "journal_table.csv")
    cols = ["journal", "n_papers", "cit_alt_mean", "jr_alt_mean", "acit_mean", "ajr_mean"]
    print("\n" + table[cols].head(10).round(4).to_string(index=False))
    print(f"\noutputs in {root / 'out'} (open graph.gexf in Gephi)")


if __name__ == "__main__":
    main()
