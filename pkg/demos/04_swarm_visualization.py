"""Dump last-swarm-filter tensors for the probe sentences.

Run 03_synthetic_training.py first; it leaves a checkpoint and vocabulary
in ./demo_runs.
"""

# %%
from pathlib import Path

import numpy as np

from scnn import cli
from scnn.viz import read_pgm

root = Path("demo_runs")
here = Path(__file__).parent
cli.main(["swarm-viz", "--checkpoint", str(root / "runs" / "scnn.scn"),
          "--sentences-file", str(here / "probe_sentences.txt"),
          "--out-dir", str(root / "viz"), "--data-dir", str(root / "data")])

# %%
# Each heatmap is one row of gray levels; shading them as text makes the
# shared pattern visible.
shades = " .:-=+*#%@"
sentences = (here / "probe_sentences.txt").read_text().splitlines()
for k, sentence in enumerate(sentences):
    px = read_pgm(root / "viz" / f"heatmap_{k:02d}.pgm")[0]
    print(f"{''.join(shades[v * 9 // 255] * 2 for v in px)}  {sentence}")

# %%
cos = np.loadtxt(root / "viz" / "cosine.csv", delimiter=",", skiprows=1)[:, 1:]
print("\nsmallest |cosine| between any two sentences:", np.abs(cos).min())
