"""The reward environment: optimal two-strand PWM alignment against every
sequence, per-position nucleotide-type tallies, and the high-order Kullback
divergence information content (HKDIC) reward.

Alignment offsets are restricted to [order, L - m - order] so that order-o
context is available at every motif position; windows containing N are
skipped. The per-sequence winner is the highest log-likelihood window, ties
broken forward-before-reverse, then smallest offset.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .motif import Pwm
from .seqcore import BackgroundModel, DnaSequence, SequenceSet

DEFAULT_ALIGN_PSEUDO = 1e-6


class AlignmentError(ValueError):
    """No feasible alignment window exists."""


@dataclass(frozen=True)
class Placement:
    """Optimal alignment of one sequence: where the motif window sits."""

    seq_index: int
    offset: int
    strand: str  # "forward" | "reverse" (offset in that strand's coordinates)
    score: float


@dataclass(frozen=True, eq=False)
class CountMatrix:
    """Per-position context-kmer tallies from the optimal alignments.

    counts[i, k] is how many aligned sequences show context-kmer k at motif
    position i. Rows sum to at most `aligned` (positions whose order-o context
    contains N contribute nothing there).
    """

    order: int
    counts: np.ndarray
    aligned: int

    def __post_init__(self):
        k = 4 ** (2 * self.order + 1)
        if self.counts.shape[1] != k:
            raise ValueError(f"expected {k} bins for order {self.order}")
        if (self.counts.sum(axis=1) > self.aligned).any():
            raise ValueError("a row sums beyond the number of aligned sequences")


def _window_data(seq_set: SequenceSet, order: int, m: int, strand: str):
    """Cached per-set scoring tensors for one strand: (one-hot (N, L, 4),
    invalid window mask (N, O)). Windows containing N are flagged invalid."""

    def build():
        codes = seq_set.codes() if strand == "forward" else seq_set.codes_rc()
        length = codes.shape[1]
        lo, hi = order, length - m - order
        if hi < lo:
            raise AlignmentError(
                f"sequences of length {length} cannot host an m={m} window "
                f"with order {order} context"
            )
        windows = np.lib.stride_tricks.sliding_window_view(codes, m, axis=1)[:, lo : hi + 1]
        invalid = (windows < 0).any(axis=2)
        onehot = np.zeros((*codes.shape, 4))
        valid = codes >= 0
        rows, cols = np.nonzero(valid)
        onehot[rows, cols, codes[valid]] = 1.0
        return onehot, invalid, lo

    return seq_set.cache(("windows", order, m, strand), build)


def _window_scores(
    onehot: np.ndarray, invalid: np.ndarray, lo: int, log_pwm: np.ndarray, threads: int = 1
) -> np.ndarray:
    """Log-likelihood of every feasible window: (N, O) scores, -inf where invalid.

    One GEMM gives per-base contributions for every motif row; window scores
    are shifted-diagonal sums of that tensor.
    """
    m = log_pwm.shape[0]
    n_windows = invalid.shape[1]

    def gather(rows: slice) -> np.ndarray:
        contrib = onehot[rows] @ log_pwm.T  # (n, L, m)
        scores = contrib[:, lo : lo + n_windows, 0].copy()
        for i in range(1, m):
            scores += contrib[:, lo + i : lo + i + n_windows, i]
        scores[invalid[rows]] = -np.inf
        return scores

    n = onehot.shape[0]
    if threads > 1 and n >= 2 * threads:
        bounds = np.linspace(0, n, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(gather, [slice(a, b) for a, b in zip(bounds, bounds[1:])])
            return np.vstack(list(parts))
    return gather(slice(None))


def _best_placements(
    seq_set: SequenceSet, pwm: Pwm, order: int, pseudo: float, threads: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized per-sequence argmax over (strand, offset).

    Returns (strand_is_reverse, offset, score) arrays of length N; offsets are
    absolute positions in the chosen strand's coordinates. Sequences with no
    valid window get score -inf.
    """
    if pseudo <= 0:
        raise ValueError("pseudo must be > 0")
    log_pwm = np.log(np.maximum(pwm.matrix, pseudo))
    scores_f = _window_scores(*_window_data(seq_set, order, pwm.width, "forward"), log_pwm, threads)
    scores_r = _window_scores(*_window_data(seq_set, order, pwm.width, "reverse"), log_pwm, threads)
    stacked = np.concatenate([scores_f, scores_r], axis=1)
    flat_best = stacked.argmax(axis=1)  # first max wins: forward first, low offset first
    n_offsets = scores_f.shape[1]
    is_reverse = flat_best >= n_offsets
    offsets = np.where(is_reverse, flat_best - n_offsets, flat_best) + order
    best_scores = np.take_along_axis(stacked, flat_best[:, None], axis=1)[:, 0]
    return is_reverse, offsets, best_scores


def best_alignment(
    seq: DnaSequence,
    pwm: Pwm,
    order: int = 0,
    pseudo: float = DEFAULT_ALIGN_PSEUDO,
    seq_index: int = 0,
) -> Placement:
    """Highest-scoring placement of the motif on either strand of one sequence."""
    single = SequenceSet([seq])
    is_reverse, offsets, scores = _best_placements(single, pwm, order, pseudo)
    if not np.isfinite(scores[0]):
        raise AlignmentError(f"no N-free window in sequence {seq.id!r}")
    strand = "reverse" if is_reverse[0] else "forward"
    return Placement(seq_index, int(offsets[0]), strand, float(scores[0]))


def build_alignment_counts(
    seq_set: SequenceSet,
    pwm: Pwm,
    order: int = 0,
    pseudo: float = DEFAULT_ALIGN_PSEUDO,
    threads: int = 1,
) -> CountMatrix:
    """Tally context-kmer indices at every motif position of every optimal
    placement. Reverse-strand placements read their indices off the
    reverse-complemented sequence so the motif always reads 5'->3'.
    """
    m = pwm.width
    is_reverse, offsets, scores = _best_placements(seq_set, pwm, order, pseudo, threads)
    aligned_mask = np.isfinite(scores)
    aligned = int(aligned_mask.sum())
    if aligned == 0:
        raise AlignmentError("no sequence produced a valid alignment window")

    kidx_f = seq_set.kmer_indices(order, "forward")
    kidx_r = seq_set.kmer_indices(order, "reverse")
    # gather the m-long index run starting at each winner's offset
    win_f = np.lib.stride_tricks.sliding_window_view(kidx_f, m, axis=1)
    win_r = np.lib.stride_tricks.sliding_window_view(kidx_r, m, axis=1)
    sel_f = np.take_along_axis(win_f, offsets[:, None, None], axis=1)[:, 0]
    sel_r = np.take_along_axis(win_r, offsets[:, None, None], axis=1)[:, 0]
    chosen = np.where(is_reverse[:, None], sel_r, sel_f)  # (N, m)
    chosen = chosen[aligned_mask]

    k = 4 ** (2 * order + 1)
    counts = np.zeros((m, k), dtype=np.int64)
    valid = chosen >= 0
    pos = np.broadcast_to(np.arange(m), chosen.shape)
    flat = pos[valid] * k + chosen[valid]
    counts += np.bincount(flat, minlength=m * k).reshape(m, k)
    return CountMatrix(order, counts, aligned)


def log_multinomial_likelihood(counts: np.ndarray, bg: BackgroundModel) -> float:
    """ln of the multinomial probability of `counts` under background
    frequencies: ln N! - sum ln c_i! + sum c_i ln q_i, via log-gamma.
    """
    c = np.asarray(counts, dtype=np.float64)
    if c.shape != bg.frequencies.shape:
        raise ValueError(f"counts shape {c.shape} does not match background {bg.frequencies.shape}")
    if (c < 0).any():
        raise ValueError("counts must be non-negative")
    total = c.sum()
    if total < 1:
        raise ValueError("counts sum to zero")
    with np.errstate(divide="ignore"):
        log_q = np.log(bg.frequencies)
    cross = float((c * log_q)[c > 0].sum())
    return float(gammaln(total + 1) - gammaln(c + 1).sum() + cross)


def hkdic_position(counts: np.ndarray, bg: BackgroundModel) -> float:
    """High-order Kullback divergence information content of one position:
    (1/N)(sum ln c_i! - ln N!) - sum (c_i/N) ln q_i over 4^(2o+1) bins.

    Equals -log_multinomial_likelihood / N.
    """
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    if total < 1:
        raise ValueError("position has zero aligned counts")
    return -log_multinomial_likelihood(c, bg) / float(total)


def kdic(counts: np.ndarray, bg: BackgroundModel) -> float:
    """Zero-order information content over the 4 plain bases."""
    if bg.order != 0:
        raise ValueError("kdic requires an order-0 background")
    return hkdic_position(counts, bg)


def reward(
    seq_set: SequenceSet,
    pwm: Pwm,
    bg: BackgroundModel,
    pseudo: float = DEFAULT_ALIGN_PSEUDO,
    threads: int = 1,
) -> float:
    """Total reward: the sum of per-position HKDIC over the motif width.

    Positions with zero defined counts contribute 0.
    """
    cm = build_alignment_counts(seq_set, pwm, bg.order, pseudo, threads)
    return reward_from_counts(cm, bg)


def reward_from_counts(cm: CountMatrix, bg: BackgroundModel) -> float:
    """Sum per-position HKDIC for a prebuilt count matrix."""
    if cm.order != bg.order:
        raise ValueError(f"count order {cm.order} does not match background order {bg.order}")
    counts = cm.counts.astype(np.float64)
    totals = counts.sum(axis=1)
    with np.errstate(divide="ignore"):
        log_q = np.log(bg.frequencies)
    total_reward = 0.0
    coeff = gammaln(counts + 1).sum(axis=1)
    cross = counts @ np.where(np.isfinite(log_q), log_q, 0.0)
    for i in range(counts.shape[0]):
        n_i = totals[i]
        if n_i < 1:
            continue
        if not np.isfinite(log_q[counts[i] > 0]).all():
            raise ValueError("counts fall in a zero-probability background bin")
        total_reward += (coeff[i] - gammaln(n_i + 1)) / n_i - cross[i] / n_i
    return float(total_reward)
