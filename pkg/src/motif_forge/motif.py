"""Position weight matrices: representation, consensus rendering, imbalance-
driven rejection sampling, similarity scoring, and JASPAR / MEME-minimal IO.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BASES = "ACGT"

# IUPAC degenerate codes keyed by the set of bases they stand for.
IUPAC_CODES = {
    frozenset("A"): "A",
    frozenset("C"): "C",
    frozenset("G"): "G",
    frozenset("T"): "T",
    frozenset("AG"): "R",
    frozenset("CT"): "Y",
    frozenset("CG"): "S",
    frozenset("AT"): "W",
    frozenset("GT"): "K",
    frozenset("AC"): "M",
    frozenset("CGT"): "B",
    frozenset("AGT"): "D",
    frozenset("ACT"): "H",
    frozenset("ACG"): "V",
    frozenset("ACGT"): "N",
}

# Maximum of the per-position inequality index over probability vectors,
# attained at one-hot columns: (3/4)**4.
MAX_POSITION_INEQUALITY = 0.75**4


class PwmFormatError(ValueError):
    """Malformed PWM text. Carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class Pwm:
    """An m x 4 row-stochastic matrix over (A, C, G, T).

    Row i gives the base probabilities at motif position i.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[1] != 4 or mat.shape[0] < 1:
            raise ValueError(f"PWM must be (m, 4) with m >= 1, got {mat.shape}")
        if (mat < -1e-12).any() or (mat > 1 + 1e-12).any():
            raise ValueError("PWM entries must lie in [0, 1]")
        sums = mat.sum(axis=1)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise ValueError(f"PWM rows must sum to 1 (max deviation {np.abs(sums - 1).max():.2e})")
        object.__setattr__(self, "matrix", np.clip(mat, 0.0, 1.0))

    @property
    def width(self) -> int:
        return self.matrix.shape[0]

    def __len__(self) -> int:
        return self.width

    def reverse_complement(self) -> "Pwm":
        """The motif read off the opposite strand: positions and bases reversed."""
        return Pwm(self.matrix[::-1, ::-1].copy())


def consensus_iupac(pwm: Pwm, threshold: float = 0.5) -> str:
    """Degenerate consensus string: per position, the IUPAC code of every base
    whose probability is >= threshold * (column maximum).
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    out = []
    for row in pwm.matrix:
        cutoff = threshold * row.max()
        members = frozenset(BASES[i] for i in range(4) if row[i] >= cutoff)
        out.append(IUPAC_CODES[members])
    return "".join(out)


def position_inequality(column: np.ndarray) -> float:
    """Imbalance of one probability column: the 4th power of its Gini-style
    mean absolute difference, ((k * sum_ij |m_i - m_j|) / (2 n^2))^4 with
    k = n = 4. Zero for uniform columns, (3/4)^4 for one-hot columns.
    """
    col = np.asarray(column, dtype=np.float64)
    if col.shape != (4,):
        raise ValueError("column must be a 4-vector")
    double_sum = np.abs(col[:, None] - col[None, :]).sum()
    return float((4.0 * double_sum / (2.0 * 16.0)) ** 4)


def motif_inequality(pwm: Pwm) -> float:
    """Whole-motif imbalance: product of position_inequality over all columns."""
    value = 1.0
    for row in pwm.matrix:
        value *= position_inequality(row)
    return value


def sample_random_motif(m: int, concentration: float, rng: np.random.Generator) -> Pwm:
    """Draw each column independently from a symmetric Dirichlet."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if concentration <= 0:
        raise ValueError("concentration must be > 0")
    cols = np.vstack([rng.dirichlet(np.full(4, concentration)) for _ in range(m)])
    return Pwm(cols)


def rejection_sample_motif(
    m: int,
    concentration: float,
    rng: np.random.Generator,
    max_tries: int = 50,
) -> Pwm:
    """Random motif biased toward imbalanced columns.

    Draws candidates and accepts each with probability equal to its motif
    inequality normalized by the maximum attainable value (3/4)^(4m). If no
    draw is accepted within `max_tries`, returns the most imbalanced draw seen.
    """
    if max_tries < 1:
        raise ValueError("max_tries must be >= 1")
    ceiling = MAX_POSITION_INEQUALITY**m
    best, best_e = None, -1.0
    for _ in range(max_tries):
        candidate = sample_random_motif(m, concentration, rng)
        e = motif_inequality(candidate)
        if e > best_e:
            best, best_e = candidate, e
        if rng.random() < e / ceiling:
            return candidate
    return best


@dataclass(frozen=True)
class SimilarityReport:
    """Best offset/strand correlation between two PWMs."""

    best_offset: int
    best_strand: str  # "forward" | "reverse"
    score: float
    overlap: int


def _column_pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of two 4-vectors; 0 when either has zero variance."""
    xc = x - x.mean()
    yc = y - y.mean()
    vx = (xc * xc).sum()
    vy = (yc * yc).sum()
    if vx <= 0 or vy <= 0:
        return 0.0
    return float((xc * yc).sum() / np.sqrt(vx * vy))


def pwm_similarity(a: Pwm, b: Pwm, min_overlap: int = 4) -> SimilarityReport:
    """Best mean per-column Pearson correlation over all offsets and strands.

    Slides `b` (and its reverse complement) across `a`; for each offset with
    at least `min_overlap` overlapping columns, scores the mean correlation of
    the paired probability columns and keeps the best placement. The offset is
    the position of b's first column relative to a's first column, in the
    coordinates of the transformed b for the reverse strand.
    """
    if min_overlap < 1:
        raise ValueError("min_overlap must be >= 1")
    if min_overlap > min(a.width, b.width):
        raise ValueError(
            f"min_overlap {min_overlap} unreachable for widths {a.width}, {b.width}"
        )
    best: SimilarityReport | None = None
    for strand, bmat in (("forward", b.matrix), ("reverse", b.reverse_complement().matrix)):
        for offset in range(-(b.width - min_overlap), a.width - min_overlap + 1):
            lo_a = max(0, offset)
            hi_a = min(a.width, offset + b.width)
            overlap = hi_a - lo_a
            if overlap < min_overlap:
                continue
            cols_a = a.matrix[lo_a:hi_a]
            cols_b = bmat[lo_a - offset : hi_a - offset]
            score = float(
                np.mean([_column_pearson(x, y) for x, y in zip(cols_a, cols_b)])
            )
            if best is None or score > best.score:
                best = SimilarityReport(offset, strand, score, overlap)
    assert best is not None
    return best


def write_pwm(pwm: Pwm, format: str, name: str = "motif") -> str:
    """Serialize a PWM. Formats: "jaspar" (4 base rows) or "meme_minimal"."""
    if format == "jaspar":
        lines = [f">{name}"]
        for i, base in enumerate(BASES):
            values = " ".join(f"{v:.6f}" for v in pwm.matrix[:, i])
            lines.append(f"{base} [ {values} ]")
        return "\n".join(lines) + "\n"
    if format == "meme_minimal":
        lines = [
            "MEME version 4",
            "",
            "ALPHABET= ACGT",
            "",
            "strands: + -",
            "",
            f"MOTIF {name}",
            f"letter-probability matrix: alength= 4 w= {pwm.width} nsites= 20 E= 0",
        ]
        for row in pwm.matrix:
            lines.append(" " + " ".join(f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown PWM format {format!r}")


def _parse_jaspar(text: str) -> Pwm:
    rows: dict[str, np.ndarray] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(">"):
            continue
        base = line[0].upper()
        if base not in BASES:
            raise PwmFormatError(f"expected a base row, got {line[:20]!r}", lineno)
        body = line[1:].replace("[", " ").replace("]", " ")
        try:
            values = np.array([float(tok) for tok in body.split()])
        except ValueError:
            raise PwmFormatError("non-numeric matrix entry", lineno)
        if base in rows:
            raise PwmFormatError(f"duplicate row for base {base}", lineno)
        rows[base] = values
    if set(rows) != set(BASES):
        raise PwmFormatError(f"missing base rows: {sorted(set(BASES) - set(rows))}")
    widths = {len(v) for v in rows.values()}
    if len(widths) != 1:
        raise PwmFormatError(f"base rows have unequal lengths {sorted(widths)}")
    mat = np.vstack([rows[b] for b in BASES]).T  # (m, 4)
    totals = mat.sum(axis=1, keepdims=True)
    if (totals <= 0).any():
        raise PwmFormatError("a position has zero total count")
    return Pwm(mat / totals)


def _parse_meme_minimal(text: str) -> Pwm:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("MEME version"):
        raise PwmFormatError("missing 'MEME version' header", 1)
    width = None
    start = None
    for lineno, line in enumerate(lines, start=1):
        if line.strip().startswith("letter-probability matrix:"):
            fields = line.split()
            if "w=" in fields:
                width = int(fields[fields.index("w=") + 1])
            start = lineno
            break
    if start is None:
        raise PwmFormatError("no 'letter-probability matrix:' block found")
    rows = []
    for lineno in range(start, len(lines)):
        line = lines[lineno].strip()
        if not line:
            if rows:
                break
            continue
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError:
            if rows:
                break
            raise PwmFormatError("non-numeric probability row", lineno + 1)
        if len(values) != 4:
            raise PwmFormatError(f"expected 4 probabilities, got {len(values)}", lineno + 1)
        rows.append(values)
    if not rows:
        raise PwmFormatError("empty probability matrix", start)
    if width is not None and width != len(rows):
        raise PwmFormatError(f"matrix has {len(rows)} rows but header says w= {width}")
    mat = np.array(rows)
    totals = mat.sum(axis=1, keepdims=True)
    if (totals <= 0).any():
        raise PwmFormatError("a position has zero total probability")
    return Pwm(mat / totals)  # absorb fixed-decimal rounding


def read_pwm(text: str, format: str) -> Pwm:
    """Parse a PWM from "jaspar" or "meme_minimal" text."""
    if format == "jaspar":
        return _parse_jaspar(text)
    if format == "meme_minimal":
        return _parse_meme_minimal(text)
    raise ValueError(f"unknown PWM format {format!r}")
