"""DNA sequence handling: FASTA parsing, strand arithmetic, context encoding,
and background nucleotide-frequency estimation.

Sequences live in the 5-letter alphabet A/C/G/T/N. All numeric encodings map
A=0, C=1, G=2, T=3 and use -1 as the sentinel for N or out-of-range context.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

ALPHABET = "ACGTN"
_CODE = {"A": 0, "C": 1, "G": 2, "T": 3, "N": -1}
_RC_TABLE = str.maketrans("ACGTN", "TGCAN")


class FastaError(ValueError):
    """Malformed FASTA or peak-list input. Carries a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class DnaSequence:
    """A single DNA sequence with an identifier.

    Bases are stored uppercased; only A/C/G/T/N are accepted.
    """

    bases: str
    id: str = ""

    def __post_init__(self):
        if len(self.bases) < 1:
            raise ValueError(f"sequence {self.id!r} is empty")
        bad = set(self.bases) - set(ALPHABET)
        if bad:
            raise ValueError(
                f"sequence {self.id!r} contains illegal symbols {sorted(bad)}"
            )

    def __len__(self) -> int:
        return len(self.bases)

    def codes(self) -> np.ndarray:
        """Integer encoding, shape (len,), int8, N -> -1."""
        return np.array([_CODE[b] for b in self.bases], dtype=np.int8)


def reverse_complement(seq: DnaSequence) -> DnaSequence:
    """Opposite strand read 5'->3': reversed order with A<->T, C<->G, N<->N."""
    return DnaSequence(seq.bases.translate(_RC_TABLE)[::-1], seq.id)


@dataclass
class SequenceSet:
    """An ordered collection of DNA sequences, the fixed RL environment state.

    Alignment, state encoding and background estimation require all sequences
    to share one length (windowed input); `length` enforces that lazily so the
    container can also hold raw chromosomes for window extraction.
    """

    sequences: list[DnaSequence]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.sequences) < 1:
            raise ValueError("sequence set is empty")

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    @property
    def length(self) -> int:
        """Common sequence length; raises if lengths are mixed."""
        lengths = {len(s) for s in self.sequences}
        if len(lengths) != 1:
            raise ValueError(f"sequences have mixed lengths {sorted(lengths)}")
        return lengths.pop()

    def codes(self) -> np.ndarray:
        """(N, L) int8 matrix of base codes, forward strand."""
        if "codes" not in self._cache:
            self._cache["codes"] = np.vstack([s.codes() for s in self.sequences])
        return self._cache["codes"]

    def codes_rc(self) -> np.ndarray:
        """(N, L) int8 matrix of base codes for the reverse-complement strand."""
        if "codes_rc" not in self._cache:
            c = self.codes()
            rc = np.where(c >= 0, 3 - c, -1).astype(np.int8)[:, ::-1]
            self._cache["codes_rc"] = np.ascontiguousarray(rc)
        return self._cache["codes_rc"]

    def kmer_indices(self, order: int, strand: str = "forward") -> np.ndarray:
        """(N, L) int64 matrix of centered (2*order+1)-mer indices, -1 undefined."""
        key = ("kidx", order, strand)
        if key not in self._cache:
            codes = self.codes() if strand == "forward" else self.codes_rc()
            self._cache[key] = _kmer_index_matrix(codes, order)
        return self._cache[key]

    def cache(self, key, builder):
        """Memoize derived encodings keyed on (operation, parameters)."""
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]


def _kmer_index_matrix(codes: np.ndarray, order: int) -> np.ndarray:
    """Vectorized centered k-mer indices for a (N, L) code matrix."""
    if order < 0:
        raise ValueError("order must be >= 0")
    n, length = codes.shape
    out = np.full((n, length), -1, dtype=np.int64)
    k = 2 * order + 1
    if length < k:
        return out
    windows = np.lib.stride_tricks.sliding_window_view(codes, k, axis=1)
    powers = 4 ** np.arange(k - 1, -1, -1, dtype=np.int64)
    idx = (windows.astype(np.int64) * powers).sum(axis=2)
    idx[(windows < 0).any(axis=2)] = -1
    out[:, order : length - order] = idx
    return out


def kmer_index(seq: DnaSequence, pos: int, order: int) -> int | None:
    """Index of the (2*order+1)-mer centered at `pos`, base-4 big-endian.

    Returns None when the window overruns a sequence end or contains N.
    """
    if not 0 <= pos < len(seq):
        raise IndexError(f"position {pos} out of range for length {len(seq)}")
    if order < 0:
        raise ValueError("order must be >= 0")
    if pos - order < 0 or pos + order >= len(seq):
        return None
    idx = 0
    for base in seq.bases[pos - order : pos + order + 1]:
        code = _CODE[base]
        if code < 0:
            return None
        idx = idx * 4 + code
    return idx


@dataclass(frozen=True, eq=False)
class BackgroundModel:
    """Background k-mer frequencies, the null model for the divergence reward.

    `frequencies` has length 4**(2*order+1) and sums to 1.
    """

    order: int
    frequencies: np.ndarray

    def __post_init__(self):
        k = 4 ** (2 * self.order + 1)
        freq = np.asarray(self.frequencies, dtype=np.float64)
        if freq.shape != (k,):
            raise ValueError(f"expected {k} frequencies for order {self.order}, got {freq.shape}")
        if (freq < 0).any():
            raise ValueError("negative background frequency")
        if abs(freq.sum() - 1.0) > 1e-9:
            raise ValueError(f"background frequencies sum to {freq.sum()}, not 1")
        object.__setattr__(self, "frequencies", freq)

    @property
    def num_bins(self) -> int:
        return self.frequencies.shape[0]

    @classmethod
    def uniform(cls, order: int) -> "BackgroundModel":
        k = 4 ** (2 * order + 1)
        return cls(order, np.full(k, 1.0 / k))


def background_frequencies(
    seq_set: SequenceSet, order: int, pseudocount: float = 1e-6
) -> BackgroundModel:
    """Estimate background k-mer frequencies over both strands.

    Counts every defined (2*order+1)-mer in every sequence and in its reverse
    complement, adds `pseudocount` to each bin, and normalizes. Counting both
    strands makes the model strand-symmetric, matching the two-strand
    alignment search.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if pseudocount < 0:
        raise ValueError("pseudocount must be >= 0")
    k = 4 ** (2 * order + 1)
    counts = np.zeros(k, dtype=np.float64)
    for strand in ("forward", "reverse"):
        kidx = seq_set.kmer_indices(order, strand)
        defined = kidx[kidx >= 0]
        if defined.size:
            counts += np.bincount(defined, minlength=k)
    if counts.sum() == 0:
        raise ValueError(
            f"no full (2*{order}+1)-mer window exists in the input sequences"
        )
    counts += pseudocount
    return BackgroundModel(order, counts / counts.sum())


def parse_fasta(text: str) -> SequenceSet:
    """Parse FASTA text into a SequenceSet.

    Headers start with '>'; the first whitespace-separated token is the id.
    Sequence lines may only contain A/C/G/T/N (case-insensitive). Errors
    report 1-based line numbers.
    """
    if not text.strip():
        raise FastaError("empty FASTA input")
    sequences: list[DnaSequence] = []
    current_id: str | None = None
    chunks: list[str] = []
    header_line = 0

    def flush():
        if current_id is None:
            return
        body = "".join(chunks)
        if not body:
            raise FastaError(f"record {current_id!r} has no sequence", header_line)
        sequences.append(DnaSequence(body, current_id))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            current_id = line[1:].split()[0] if line[1:].split() else ""
            chunks = []
            header_line = lineno
        else:
            if current_id is None:
                raise FastaError("sequence data before any '>' header", lineno)
            upper = line.upper()
            for col, symbol in enumerate(upper):
                if symbol not in ALPHABET:
                    raise FastaError(
                        f"illegal symbol {symbol!r} at column {col + 1}", lineno
                    )
            chunks.append(upper)
    flush()
    if not sequences:
        raise FastaError("no FASTA records found")
    return SequenceSet(sequences)


def write_fasta(seq_set: SequenceSet, width: int = 70) -> str:
    """Render a SequenceSet as FASTA text with wrapped sequence lines."""
    parts = []
    for seq in seq_set:
        parts.append(f">{seq.id}")
        for start in range(0, len(seq), width):
            parts.append(seq.bases[start : start + width])
    return "\n".join(parts) + "\n"


def read_peaks(text: str) -> list[tuple[str, int]]:
    """Parse a peak list: whitespace-separated columns (chrom, summit).

    Summits are 0-based integers; lines starting with '#' are ignored.
    """
    peaks = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 2:
            raise FastaError("expected columns: chrom summit", lineno)
        try:
            summit = int(fields[1])
        except ValueError:
            raise FastaError(f"summit {fields[1]!r} is not an integer", lineno)
        peaks.append((fields[0], summit))
    return peaks


def extract_windows(
    peaks: Iterable[tuple[str, int]],
    genome: Mapping[str, DnaSequence] | SequenceSet | Iterable[DnaSequence],
    half_width: int,
) -> SequenceSet:
    """Cut fixed windows [summit - half_width, summit + half_width) around peaks.

    Windows that would run past a chromosome edge are dropped; a warning
    reports how many were lost. `genome` may be a mapping keyed by chromosome
    name or any iterable of DnaSequence keyed by their ids.
    """
    if half_width < 1:
        raise ValueError("half_width must be >= 1")
    if isinstance(genome, Mapping):
        chroms = dict(genome)
    else:
        chroms = {seq.id: seq for seq in genome}
    windows = []
    dropped = 0
    for n, (chrom, summit) in enumerate(peaks):
        if chrom not in chroms:
            raise KeyError(f"unknown chromosome {chrom!r}")
        source = chroms[chrom]
        start, end = summit - half_width, summit + half_width
        if start < 0 or end > len(source):
            dropped += 1
            continue
        windows.append(
            DnaSequence(source.bases[start:end], f"{chrom}:{start}-{end}")
        )
    if dropped:
        warnings.warn(f"dropped {dropped} edge-clipped windows", stacklevel=2)
    if not windows:
        raise ValueError("no windows survived extraction")
    return SequenceSet(windows)


def state_tensor(seq_set: SequenceSet, max_sequences: int | None = None) -> np.ndarray:
    """One-hot state encoding with layout (strand=2, sequence, position, base).

    Slot 0 holds the forward strand, slot 1 the reverse complement. N bases
    encode as all-zero rows. `max_sequences` caps how many sequences are
    included (a desk-scale control for network input size).
    """
    codes = seq_set.codes()
    codes_rc = seq_set.codes_rc()
    if max_sequences is not None:
        codes = codes[:max_sequences]
        codes_rc = codes_rc[:max_sequences]
    n, length = codes.shape
    tensor = np.zeros((2, n, length, 4), dtype=np.float64)
    for slot, mat in enumerate((codes, codes_rc)):
        valid = mat >= 0
        rows, cols = np.nonzero(valid)
        tensor[slot, rows, cols, mat[valid]] = 1.0
    return tensor
