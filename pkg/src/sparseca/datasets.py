"""Bundled example tables.

Two datasets ship with the package: a small color-by-music survey table
used throughout the docs, and a deterministic synthetic document-term
table sized like a small historical speech corpus, for exercising the
pipeline at realistic scale without network access.
"""

import numpy as np

from .ca import ContingencyTable

MUSIC_ROWS = ["Red", "Orange", "Yellow", "Green", "Blue",
              "Purple", "White", "Black", "Pink", "Brown"]
MUSIC_COLS = ["Low F", "Middle F", "High F", "Opera", "Jazz",
              "Pop", "Rap", "Rock", "Video"]

# 22 respondents heard each excerpt and named one color; columns sum to 22.
_MUSIC_COUNTS = [
    [2, 2, 2, 3, 2, 2, 2, 2, 3],
    [2, 2, 2, 2, 2, 2, 2, 2, 2],
    [1, 2, 4, 2, 2, 2, 1, 2, 2],
    [2, 3, 2, 2, 2, 3, 0, 2, 2],
    [2, 2, 2, 3, 2, 2, 2, 2, 2],
    [2, 2, 2, 3, 2, 1, 2, 2, 3],
    [1, 2, 4, 2, 2, 2, 1, 2, 3],
    [6, 2, 1, 2, 3, 2, 8, 3, 2],
    [2, 2, 2, 1, 2, 2, 2, 2, 2],
    [2, 3, 1, 2, 3, 4, 2, 3, 1],
]


def colors_of_music() -> ContingencyTable:
    """Color choices (rows) cross-tabulated with musical excerpts (columns).

    Twenty-two listeners heard each of nine excerpts (three pure tones and
    six short genre pieces) and picked the color that fit it best, so every
    column sums to 22 and the grand total is 198.
    """
    counts = np.array(_MUSIC_COUNTS, dtype=float)
    assert counts.shape == (10, 9)
    assert (counts.sum(axis=0) == 22).all()
    return ContingencyTable.from_counts(counts, list(MUSIC_ROWS), list(MUSIC_COLS))


_SYLLABLES = ["ba", "be", "bo", "da", "de", "di", "ga", "go", "ka", "ke",
              "la", "le", "li", "lo", "ma", "me", "mi", "mo", "na", "ne",
              "no", "pa", "pe", "po", "ra", "re", "ri", "ro", "sa", "se",
              "si", "so", "ta", "te", "ti", "to", "va", "ve", "vi", "vo"]


def _stem_labels(n: int, rng) -> list:
    """Pronounceable, unique pseudo-stems in a deterministic order."""
    seen = set()
    labels = []
    while len(labels) < n:
        k = 2 + int(rng.integers(2))
        word = "".join(_SYLLABLES[int(rng.integers(len(_SYLLABLES)))]
                       for _ in range(k))
        if word not in seen:
            seen.add(word)
            labels.append(word)
    return labels


def presidents_scale_corpus(n_docs: int = 43, vocab_size: int = 900,
                            seed: int = 17, min_total: int = 5) -> ContingencyTable:
    """Synthetic document-term counts shaped like a corpus of 43 speeches.

    Documents sit on a smooth temporal gradient (factor 1) crossed with a
    slower stylistic cycle (factor 2); both act on dedicated word blocks
    over a Zipf background, so the spectrum has two dominant dimensions.
    Terms whose corpus-wide count is <= min_total are dropped, which
    leaves roughly 700-800 of the initial vocab_size terms. Deterministic
    for a given seed.
    """
    assert n_docs >= 4 and vocab_size >= 100
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, n_docs)
    x = 2.0 * t - 1.0
    y = np.cos(3.0 * np.pi * t)

    base = 1.0 / (np.arange(vocab_size) + 6.0) ** 1.5
    # factor-1 words drawn from the frequent half so a ~50-term support
    # carries most of the dimension; factor 2 is weaker and broader
    frequent = rng.permutation(np.arange(15, 320))
    block1 = frequent[:90]
    block2 = frequent[90:170]
    a = np.zeros(vocab_size)
    b = np.zeros(vocab_size)
    a[block1[:45]] = rng.uniform(0.9, 1.6, 45)
    a[block1[45:]] = -rng.uniform(0.9, 1.6, 45)
    b[block2[:40]] = rng.uniform(0.6, 1.1, 40)
    b[block2[40:]] = -rng.uniform(0.6, 1.1, 40)

    lengths = (1500 + 420.0 * np.sin(2.2 * np.pi * t) ** 2
               + rng.integers(0, 240, n_docs)).astype(int)
    counts = np.zeros((n_docs, vocab_size))
    for i in range(n_docs):
        mu = base * np.exp(1.55 * a * x[i] + 0.95 * b * y[i])
        mu = mu / mu.sum() * lengths[i]
        counts[i] = rng.poisson(mu)

    keep = counts.sum(axis=0) > min_total
    counts = counts[:, keep]
    assert counts.shape[1] >= 300
    assert (counts.sum(axis=1) > 0).all()

    doc_labels = [f"speech_{i + 1:02d}" for i in range(n_docs)]
    term_labels = _stem_labels(vocab_size, np.random.default_rng(seed + 1))
    term_labels = [lab for lab, k in zip(term_labels, keep) if k]
    return ContingencyTable.from_counts(counts, doc_labels, term_labels)
