"""Shared fixtures and independent oracles used across test modules.

Oracles here deliberately avoid the library's own code paths: alignment by
pure-Python scanning, information content via exact integer factorials,
k-mer indices by lexicographic enumeration.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from motif_forge import DnaSequence, Pwm

BASES = "ACGT"


def random_dna(rng: np.random.Generator, length: int, n_prob: float = 0.0) -> str:
    symbols = []
    for _ in range(length):
        if n_prob and rng.random() < n_prob:
            symbols.append("N")
        else:
            symbols.append(BASES[rng.integers(0, 4)])
    return "".join(symbols)


def random_pwm(rng: np.random.Generator, m: int, concentration: float = 1.0) -> Pwm:
    return Pwm(np.vstack([rng.dirichlet(np.full(4, concentration)) for _ in range(m)]))


def two_base_column(p: float, i: int, j: int) -> np.ndarray:
    col = np.zeros(4)
    col[i] = p
    col[j] = 1.0 - p
    return col


def rescue_test_motif() -> Pwm:
    """The 7-mer used for single-column recovery tests: every column puts all
    mass on exactly two bases, so the reward cannot profit from discarding a
    minority base class."""
    return Pwm(np.vstack([
        two_base_column(0.75, 0, 3),
        two_base_column(0.70, 1, 0),
        two_base_column(0.80, 2, 1),
        two_base_column(0.75, 3, 2),
        two_base_column(0.70, 0, 1),
        two_base_column(0.80, 3, 1),
        two_base_column(0.75, 2, 3),
    ]))


def peaked_discovery_motif() -> Pwm:
    """Strongly-peaked 6-mer for end-to-end discovery tests."""
    base = np.full((6, 4), 0.02)
    for row, consensus in enumerate((0, 1, 2, 3, 1, 0)):  # ACGTCA
        base[row, consensus] = 0.94
    return Pwm(base)


def kmer_table(k: int) -> list[str]:
    """All k-mers over ACGT in lexicographic (base-4 big-endian) order."""
    return ["".join(p) for p in itertools.product(BASES, repeat=k)]


def brute_force_kmer_index(word: str) -> int | None:
    if any(ch not in BASES for ch in word):
        return None
    return kmer_table(len(word)).index(word)


def brute_force_background(sequences: list[str], order: int, pseudocount: float) -> np.ndarray:
    """Dictionary-count oracle over both strands."""
    k = 2 * order + 1
    table = kmer_table(k)
    counts = dict.fromkeys(table, 0.0)
    comp = str.maketrans("ACGTN", "TGCAN")
    for seq in sequences:
        for strand_seq in (seq, seq.translate(comp)[::-1]):
            for start in range(0, len(strand_seq) - k + 1):
                word = strand_seq[start : start + k]
                if word in counts:
                    counts[word] += 1
    vec = np.array([counts[w] for w in table]) + pseudocount
    return vec / vec.sum()


def brute_force_hkdic(counts, frequencies) -> float:
    """Information content via exact integer factorials (no log-gamma)."""
    counts = [int(c) for c in counts]
    total = sum(counts)
    coeff = sum(math.log(math.factorial(c)) for c in counts) - math.log(math.factorial(total))
    cross = sum((c / total) * math.log(q) for c, q in zip(counts, frequencies) if c > 0)
    return coeff / total - cross


def brute_force_best_alignment(seq: str, pwm: Pwm, order: int, pseudo: float):
    """Exhaustive (strand, offset) maximization; ties keep the first in
    (forward offsets ascending, then reverse offsets ascending) order.
    Returns (strand, offset, score) or None if no valid window exists.
    """
    comp = str.maketrans("ACGTN", "TGCAN")
    m = pwm.width
    best = None
    for strand, s in (("forward", seq), ("reverse", seq.translate(comp)[::-1])):
        for offset in range(order, len(s) - m - order + 1):
            window = s[offset : offset + m]
            if "N" in window:
                continue
            score = 0.0
            for i, base in enumerate(window):
                score += math.log(max(pwm.matrix[i, BASES.index(base)], pseudo))
            if best is None or score > best[2]:
                best = (strand, offset, score)
    return best
