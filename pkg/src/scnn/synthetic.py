"""Synthetic tweets written in the Sentiment140 CSV layout.

Used by tests and demos when the real corpus is not on disk.  Each tweet
mixes neutral filler with a few polarity-bearing words (and some noise
words of the opposite polarity), then decorates the text with the clutter
real tweets carry: URLs, mentions, hashtags, punctuation, Latin-1 letters.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .tensor import Prng

POSITIVE = (
    "love happy great good awesome wonderful best nice amazing fun thanks excited "
    "glad beautiful cool lovely enjoy perfect yay smile sweet win proud fantastic"
).split()
NEGATIVE = (
    "hate sad bad terrible awful worst sick tired miss sorry angry hurt cry lost "
    "broken ugh annoying boring pain fail mad lonely upset horrible"
).split()
NEUTRAL = (
    "i you it the a to and is in my of on for that this at so with be was just "
    "today day work home now going got get go time back night morning school "
    "really what know think one new still see watch last week people want need "
    "out up can not all about lol off too here there well some more tomorrow "
    "friends class movie twitter phone weekend music lunch sun rain bed car"
).split()

_DATE = "Mon Apr 06 22:19:45 PDT 2009"


def synth_text(prng: Prng, label: int, noise: float = 0.15) -> str:
    n_neutral = int(prng.integers(2, 18))
    n_polar = int(prng.integers(1, 4))
    own, other = (POSITIVE, NEGATIVE) if label == 1 else (NEGATIVE, POSITIVE)
    words = [NEUTRAL[int(prng.integers(0, len(NEUTRAL)))] for _ in range(n_neutral)]
    for _ in range(n_polar):
        pool = other if prng.uniform(0, 1, None) < noise else own
        words.insert(int(prng.integers(0, len(words) + 1)), pool[int(prng.integers(0, len(pool)))])
    decor = prng.uniform(0, 1, 6)
    if decor[0] < 0.3:
        words.insert(0, f"@user{int(prng.integers(0, 999))}")
    if decor[1] < 0.2:
        words.append("http://bit.ly/" + "abcxyz"[: int(prng.integers(1, 6))])
    if decor[2] < 0.2:
        words.append("#" + words[int(prng.integers(0, len(words)))].lstrip("@#"))
    text = " ".join(words)
    if decor[3] < 0.3:
        text = text.capitalize() + "!!!"
    if decor[4] < 0.1:
        text += ", café \"quoted\""
    if decor[5] < 0.05:
        text += " ¿no?"
    return text


def write_corpus(path, n: int, seed: int, neutral_fraction: float = 0.0) -> Path:
    """Write ``n`` rows, balanced between polarity 0 and 4, plus optional neutral rows."""
    prng = Prng(seed)
    path = Path(path)
    with open(path, "w", encoding="latin-1", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_ALL)
        for k in range(n):
            if neutral_fraction and prng.uniform(0, 1, None) < neutral_fraction:
                polarity, text = 2, " ".join(NEUTRAL[int(i)] for i in prng.integers(0, len(NEUTRAL), 6))
            else:
                label = k % 2
                polarity, text = 4 * label, synth_text(prng, label)
            writer.writerow([polarity, 1467810369 + k, _DATE, "NO_QUERY", f"user{k % 97}", text])
    return path
