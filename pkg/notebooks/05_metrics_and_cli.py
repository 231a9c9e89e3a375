"""
Scoring masks and driving the command line
==========================================

Compute J and F by hand, then write a tiny sequence to disk and run the
``segment`` and ``eval`` subcommands on it.
"""

# %%
import json
import tempfile
from pathlib import Path

import numpy as np

from munet.metrics import boundary_f, boundary_f_exact, jaccard_j

a = np.zeros((16, 16), int)
b = np.zeros((16, 16), int)
a[4:12, 2:10] = 1
b[4:12, 6:14] = 1
print("J of squares offset by 4 columns:", jaccard_j(a, b))
print("F (dilation) %.3f, F (exact matching) %.3f" % (boundary_f(a, b, 1, 2.0), boundary_f_exact(a, b, 1, 2.0)))

# %%
# Write frames and the first mask, then segment and evaluate.
from munet.cli import main
from munet.config import RunConfig, serialize_config
from munet.io import save_image, save_labels
from munet.synthetic import drifting_square

root = Path(tempfile.mkdtemp())
frames, labels = drifting_square(n_frames=6, size=64, side=24, start=(8, 20))
(root / "frames").mkdir()
(root / "gt").mkdir()
for i, (f, lab) in enumerate(zip(frames, labels)):
    save_image(root / "frames" / f"{i:05d}.ppm", f)
    save_labels(root / "gt" / f"{i:05d}.pgm", lab)
(root / "run.cfg").write_text(serialize_config(RunConfig(mode="analytic", feature_dim=16, window_u=9, window_v=9)))

code = main(["segment", "--frames", str(root / "frames"), "--first-mask", str(root / "gt" / "00000.pgm"),
             "--out", str(root / "pred"), "--config", str(root / "run.cfg"), "--emit-flow"])
print("segment exit code:", code, "files:", len(list((root / "pred").iterdir())))

# %%
# The pred directory also holds flow images; eval only reads names found in gt.
code = main(["eval", "--pred", str(root / "pred"), "--gt", str(root / "gt"), "--report", str(root / "report.jsonl")])
summary = json.loads((root / "report.jsonl").read_text().splitlines()[-1])
print("eval exit code:", code, summary)
