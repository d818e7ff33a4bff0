"""
The command-line pipeline
=========================

``lob-outliers run`` writes a self-describing run directory; ``lob-outliers
compare`` merges runs into one ranking plus plot-ready CSVs. Both are plain
functions too, shown here through ``main``.
"""

import csv
import json
import tempfile
from pathlib import Path

from lob_outliers.cli import main

with tempfile.TemporaryDirectory() as d:
    d = Path(d)
    for seed in (1, 2):
        main(["run", "--synthetic", f"n=2000,seed={seed}", "--detectors", "EC,HBOS,KNN,ISOF",
              "--out", str(d / f"run{seed}")])
        print()

    manifest = json.loads((d / "run1" / "manifest.json").read_text())
    print("manifest keys:", ", ".join(sorted(manifest)))
    print("files:", sorted(p.name for p in (d / "run1" / "per_detector" / "EC").iterdir()))

    main(["compare", str(d / "run1"), str(d / "run2"), "--out", str(d / "cmp")])
    with open(d / "cmp" / "comparison.csv") as fh:
        best = next(csv.DictReader(fh))
    print("\nbest:", best["run"].split("/")[-1], best["model"], best["gain_pct"])
