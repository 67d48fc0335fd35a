"""Synthetic dataset construction: positive sequences carry a motif-sampled
core with random flanks; negatives are entirely random. Reproducible under a
seed. The stock recipes are 300 positives for the all-positive corpus and
200 negatives plus 100 positives for the unbalanced one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .motif import BASES, Pwm
from .seqcore import DnaSequence, SequenceSet

KINDS = ("full_pos", "unbalanced")


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for one synthetic corpus."""

    kind: str
    n_pos: int
    n_neg: int
    length: int
    motif: Pwm
    seed: int = 0
    placement: str = "central"  # "central" | "random"
    strand: str = "forward"  # "forward" | "random"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "full_pos" and self.n_neg != 0:
            raise ValueError("full_pos datasets have no negative sequences")
        if self.n_pos < 1:
            raise ValueError("n_pos must be >= 1")
        if self.n_neg < 0:
            raise ValueError("n_neg must be >= 0")
        if self.length < self.motif.width:
            raise ValueError(
                f"length {self.length} is shorter than the motif width {self.motif.width}"
            )
        if self.placement not in ("central", "random"):
            raise ValueError(f"placement must be central or random, got {self.placement!r}")
        if self.strand not in ("forward", "random"):
            raise ValueError(f"strand must be forward or random, got {self.strand!r}")

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "length": self.length,
            "motif": self.motif.matrix.tolist(),
            "seed": self.seed,
            "placement": self.placement,
            "strand": self.strand,
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetSpec":
        payload = json.loads(text)
        payload["motif"] = Pwm(np.array(payload["motif"]))
        return cls(**payload)


def _random_bases(length: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 4, size=length)


def _codes_to_str(codes: np.ndarray) -> str:
    return "".join(BASES[c] for c in codes)


def generate_negative(length: int, rng: np.random.Generator, seq_id: str = "neg") -> DnaSequence:
    """A sequence of i.i.d. uniform bases."""
    if length < 1:
        raise ValueError("length must be >= 1")
    return DnaSequence(_codes_to_str(_random_bases(length, rng)), seq_id)


def generate_positive(
    motif: Pwm,
    length: int,
    rng: np.random.Generator,
    seq_id: str = "pos",
    placement: str = "central",
    strand: str = "forward",
) -> DnaSequence:
    """A sequence with a motif-sampled core and uniform random flanks.

    The core is drawn column-wise from the PWM and placed centrally (offset
    (length - m) // 2) unless `placement` is "random". With strand="random"
    the core is reverse-complemented half the time.
    """
    m = motif.width
    if length < m:
        raise ValueError(f"length {length} shorter than motif width {m}")
    codes = _random_bases(length, rng)
    core = np.array([rng.choice(4, p=row / row.sum()) for row in motif.matrix])
    if strand == "random" and rng.random() < 0.5:
        core = (3 - core)[::-1]
    if placement == "central":
        offset = (length - m) // 2
    else:
        offset = int(rng.integers(0, length - m + 1))
    codes[offset : offset + m] = core
    return DnaSequence(_codes_to_str(codes), seq_id)


def generate_dataset(spec: DatasetSpec) -> SequenceSet:
    """Build a corpus from a spec; unbalanced corpora are shuffled."""
    rng = np.random.default_rng(spec.seed)
    sequences = [
        generate_positive(
            spec.motif, spec.length, rng, f"pos_{i:04d}", spec.placement, spec.strand
        )
        for i in range(spec.n_pos)
    ]
    sequences += [
        generate_negative(spec.length, rng, f"neg_{i:04d}") for i in range(spec.n_neg)
    ]
    if spec.kind == "unbalanced":
        order = rng.permutation(len(sequences))
        sequences = [sequences[i] for i in order]
    return SequenceSet(sequences)
