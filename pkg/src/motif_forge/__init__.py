"""motif-forge: DNA motif discovery with a deterministic-policy RL loop and a
high-order divergence information-content reward."""

__version__ = "0.1.0"

from .agent import (
    DiscoveryResult,
    Experience,
    Hyperparams,
    OuProcess,
    ReplayMemory,
    RescueResult,
    run_discovery,
    run_rescue,
)
from .datasets import DatasetSpec, generate_dataset, generate_negative, generate_positive
from .environment import (
    CountMatrix,
    Placement,
    best_alignment,
    build_alignment_counts,
    hkdic_position,
    kdic,
    log_multinomial_likelihood,
    reward,
)
from .motif import (
    Pwm,
    SimilarityReport,
    consensus_iupac,
    motif_inequality,
    position_inequality,
    pwm_similarity,
    read_pwm,
    rejection_sample_motif,
    sample_random_motif,
    write_pwm,
)
from .seqcore import (
    BackgroundModel,
    DnaSequence,
    SequenceSet,
    background_frequencies,
    extract_windows,
    kmer_index,
    parse_fasta,
    read_peaks,
    reverse_complement,
    state_tensor,
    write_fasta,
)

__all__ = [
    "BackgroundModel",
    "CountMatrix",
    "DatasetSpec",
    "DiscoveryResult",
    "DnaSequence",
    "Experience",
    "Hyperparams",
    "OuProcess",
    "Placement",
    "Pwm",
    "ReplayMemory",
    "RescueResult",
    "SequenceSet",
    "SimilarityReport",
    "background_frequencies",
    "best_alignment",
    "build_alignment_counts",
    "consensus_iupac",
    "extract_windows",
    "generate_dataset",
    "generate_negative",
    "generate_positive",
    "hkdic_position",
    "kdic",
    "kmer_index",
    "log_multinomial_likelihood",
    "motif_inequality",
    "parse_fasta",
    "position_inequality",
    "pwm_similarity",
    "read_peaks",
    "read_pwm",
    "reverse_complement",
    "reward",
    "rejection_sample_motif",
    "run_discovery",
    "run_rescue",
    "sample_random_motif",
    "state_tensor",
    "write_fasta",
    "write_pwm",
]
