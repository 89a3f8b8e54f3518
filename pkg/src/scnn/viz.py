"""Swarm-feature dumps: raw tensors, pairwise cosines and P2 graymap heatmaps."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Vocabulary, clean_text, encode, tokenize
from .models import Model, swarm_features


def encode_sentences(sentences, vocab: Vocabulary, seq_len: int) -> np.ndarray:
    return np.stack([encode(tokenize(clean_text(s)), vocab, seq_len) for s in sentences])


def cosine_matrix(vectors) -> np.ndarray:
    """Pairwise cosine similarity; rows with zero norm give 0 against everything."""
    v = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(v, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    u = v / safe[:, None]
    return u @ u.T


def to_gray(values, maxval: int = 255) -> np.ndarray:
    """Min-max scale to ``0..maxval``; a constant vector maps to all zeros."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros(v.shape, dtype=np.int64)
    return np.rint((v - lo) / (hi - lo) * maxval).astype(np.int64)


def pgm_text(pixels, maxval: int = 255) -> str:
    """Plain (P2) graymap for a 2-D array of integer levels."""
    px = np.atleast_2d(pixels)
    h, w = px.shape
    lines = ["P2", f"{w} {h}", str(maxval)]
    lines += [" ".join(str(int(p)) for p in row) for row in px]
    return "\n".join(lines) + "\n"


def read_pgm(path) -> np.ndarray:
    tokens = [t for line in Path(path).read_text().splitlines()
              if not line.startswith("#") for t in line.split()]
    if tokens[0] != "P2":
        raise ValueError(f"{path}: not a P2 graymap")
    w, h, _ = (int(t) for t in tokens[1:4])
    return np.array([int(t) for t in tokens[4:4 + w * h]]).reshape(h, w)


def dump_swarm_features(model: Model, vocab: Vocabulary, sentences: list[str], out_dir) -> dict:
    """Write tensors CSV, cosine CSV and one heatmap per sentence; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = encode_sentences(sentences, vocab, model.config.seq_len)
    feats = swarm_features(model, ids)
    cos = cosine_matrix(feats)

    tensors_path = out_dir / "swarm_tensors.csv"
    header = "index,sentence," + ",".join(f"f{j}" for j in range(feats.shape[1]))
    rows = [header]
    for k, (s, f) in enumerate(zip(sentences, feats)):
        quoted = '"' + s.replace('"', '""') + '"'
        rows.append(f"{k},{quoted}," + ",".join(repr(float(x)) for x in f))
    tensors_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    cos_path = out_dir / "cosine.csv"
    rows = ["," + ",".join(str(k) for k in range(len(sentences)))]
    rows += [f"{k}," + ",".join(repr(float(x)) for x in row) for k, row in enumerate(cos)]
    cos_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    heatmaps = []
    for k, f in enumerate(feats):
        p = out_dir / f"heatmap_{k:02d}.pgm"
        p.write_text(pgm_text(to_gray(f)[None, :]), encoding="ascii")
        heatmaps.append(p)
    return {"tensors": tensors_path, "cosine": cos_path, "heatmaps": heatmaps,
            "features": feats, "cosines": cos}
