import numpy as np
import pytest

from motif_forge import (
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
from motif_forge.seqcore import FastaError

from helpers import brute_force_background, brute_force_kmer_index, kmer_table, random_dna


class TestDnaSequence:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            DnaSequence("", "x")

    def test_rejects_illegal_symbols(self):
        with pytest.raises(ValueError):
            DnaSequence("ACXT", "x")

    def test_codes(self):
        assert DnaSequence("ACGTN").codes().tolist() == [0, 1, 2, 3, -1]


class TestReverseComplement:
    @pytest.mark.parametrize(
        "seq,expected",
        [("ACGT", "ACGT"), ("AAAC", "GTTT"), ("ANG", "CNT")],
    )
    def test_hand_cases(self, seq, expected):
        assert reverse_complement(DnaSequence(seq)).bases == expected

    def test_involution(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            seq = DnaSequence(random_dna(rng, int(rng.integers(1, 40)), n_prob=0.1))
            assert reverse_complement(reverse_complement(seq)).bases == seq.bases


class TestParseFasta:
    def test_single_record(self):
        out = parse_fasta(">a\nacgt\n")
        assert len(out) == 1
        assert out.sequences[0].bases == "ACGT"
        assert out.sequences[0].id == "a"

    def test_multiline_body_concatenation(self):
        out = parse_fasta(">a\nAC\nGT\n>b\nTTTT\n")
        assert [s.bases for s in out] == ["ACGT", "TTTT"]

    def test_illegal_character_reports_line(self):
        with pytest.raises(FastaError) as err:
            parse_fasta(">a\nACXT\n")
        assert err.value.line == 2
        assert "'X'" in str(err.value)

    def test_empty_input(self):
        with pytest.raises(FastaError):
            parse_fasta("  \n")

    def test_empty_record(self):
        with pytest.raises(FastaError):
            parse_fasta(">a\n>b\nACGT\n")

    def test_data_before_header(self):
        with pytest.raises(FastaError):
            parse_fasta("ACGT\n")

    def test_roundtrip_with_writer(self):
        rng = np.random.default_rng(1)
        original = SequenceSet(
            [DnaSequence(random_dna(rng, 150), f"seq{i}") for i in range(5)]
        )
        again = parse_fasta(write_fasta(original))
        assert [s.bases for s in again] == [s.bases for s in original]
        assert [s.id for s in again] == [s.id for s in original]


class TestKmerIndex:
    def test_order_zero_is_base_code(self):
        assert kmer_index(DnaSequence("ACGT"), 1, 0) == 1

    def test_order_one_matches_enumeration(self):
        # oracle: position of "ACG" in the lexicographic list of all triplets
        assert brute_force_kmer_index("ACG") == 6
        assert kmer_index(DnaSequence("ACGT"), 1, 1) == 6

    def test_boundary_is_undefined(self):
        assert kmer_index(DnaSequence("ACGT"), 0, 1) is None
        assert kmer_index(DnaSequence("ACGT"), 3, 1) is None

    def test_n_is_undefined(self):
        assert kmer_index(DnaSequence("ANGT"), 1, 1) is None

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            kmer_index(DnaSequence("ACGT"), 4, 0)

    def test_bijection_over_all_triplets(self):
        seen = set()
        for word in kmer_table(3):
            idx = kmer_index(DnaSequence(word), 1, 1)
            assert idx == brute_force_kmer_index(word)
            seen.add(idx)
        assert seen == set(range(64))


class TestBackgroundFrequencies:
    def test_palindromic_pair(self):
        bg = background_frequencies(SequenceSet([DnaSequence("AACC")]), 0, 0.0)
        assert np.allclose(bg.frequencies, [0.25, 0.25, 0.25, 0.25])

    def test_homopolymer_without_pseudocount(self):
        bg = background_frequencies(SequenceSet([DnaSequence("AAAA")]), 0, 0.0)
        assert np.allclose(bg.frequencies, [0.5, 0.0, 0.0, 0.5])

    def test_homopolymer_with_pseudocount(self):
        bg = background_frequencies(SequenceSet([DnaSequence("AAAA")]), 0, 1.0)
        assert np.allclose(bg.frequencies, np.array([5, 1, 1, 5]) / 12)

    def test_matches_bruteforce_dictionary_count(self):
        rng = np.random.default_rng(7)
        for order in (0, 1):
            seqs = [random_dna(rng, 30, n_prob=0.05) for _ in range(4)]
            got = background_frequencies(
                SequenceSet([DnaSequence(s) for s in seqs]), order, 0.5
            )
            want = brute_force_background(seqs, order, 0.5)
            assert np.abs(got.frequencies - want).max() <= 1e-12

    def test_sums_to_one_and_strand_symmetric(self):
        rng = np.random.default_rng(8)
        seqs = SequenceSet([DnaSequence(random_dna(rng, 60)) for _ in range(3)])
        bg = background_frequencies(seqs, 1, 1e-6)
        assert abs(bg.frequencies.sum() - 1.0) <= 1e-9
        table = kmer_table(3)
        comp = str.maketrans("ACGT", "TGCA")
        for i, word in enumerate(table):
            rc = word.translate(comp)[::-1]
            assert bg.frequencies[i] == pytest.approx(
                bg.frequencies[table.index(rc)], abs=1e-15
            )

    def test_too_short_errors(self):
        with pytest.raises(ValueError):
            background_frequencies(SequenceSet([DnaSequence("AC")]), 2, 1e-6)

    def test_all_n_errors(self):
        with pytest.raises(ValueError):
            background_frequencies(SequenceSet([DnaSequence("NNNN")]), 0, 1e-6)


class TestBackgroundModel:
    def test_uniform(self):
        bg = BackgroundModel.uniform(1)
        assert bg.num_bins == 64
        assert np.allclose(bg.frequencies, 1 / 64)

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            BackgroundModel(0, np.array([0.5, 0.5, 0.5, 0.5]))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            BackgroundModel(1, np.full(4, 0.25))


class TestExtractWindows:
    def _genome(self):
        rng = np.random.default_rng(3)
        return {"chr1": DnaSequence(random_dna(rng, 200), "chr1")}

    def test_interior_window(self):
        genome = self._genome()
        out = extract_windows([("chr1", 50)], genome, 50)
        assert len(out) == 1
        assert out.sequences[0].bases == genome["chr1"].bases[0:100]

    def test_edge_window_dropped_with_warning(self):
        genome = self._genome()
        with pytest.warns(UserWarning, match="dropped 1"):
            out = extract_windows([("chr1", 10), ("chr1", 100)], genome, 50)
        assert len(out) == 1

    def test_benchmark_scale_windows(self):
        rng = np.random.default_rng(4)
        genome = {"chr1": DnaSequence(random_dna(rng, 40000), "chr1")}
        peaks = [("chr1", int(p)) for p in rng.integers(50, 39950, size=300)]
        out = extract_windows(peaks, genome, 50)
        assert len(out) == 300
        assert out.length == 100

    def test_unknown_chromosome(self):
        with pytest.raises(KeyError):
            extract_windows([("chrX", 50)], self._genome(), 10)

    def test_sequence_set_as_genome(self):
        genome = SequenceSet([DnaSequence("ACGT" * 50, "chr1")])
        out = extract_windows([("chr1", 100)], genome, 10)
        assert len(out.sequences[0]) == 20


class TestReadPeaks:
    def test_basic(self):
        assert read_peaks("# header\nchr1 50\nchr2\t70\n") == [("chr1", 50), ("chr2", 70)]

    def test_bad_summit(self):
        with pytest.raises(FastaError):
            read_peaks("chr1 abc\n")

    def test_missing_column(self):
        with pytest.raises(FastaError):
            read_peaks("chr1\n")


class TestStateTensor:
    def test_layout_and_onehot(self):
        seqs = SequenceSet([DnaSequence("ACGT"), DnaSequence("TTTT")])
        tensor = state_tensor(seqs)
        assert tensor.shape == (2, 2, 4, 4)
        assert np.array_equal(tensor[0, 0], np.eye(4))  # ACGT forward
        # reverse complement of ACGT is ACGT
        assert np.array_equal(tensor[1, 0], np.eye(4))
        # reverse complement of TTTT is AAAA
        assert np.array_equal(tensor[1, 1], np.tile([1, 0, 0, 0], (4, 1)))

    def test_n_base_is_zero_row(self):
        tensor = state_tensor(SequenceSet([DnaSequence("AN")]))
        assert np.array_equal(tensor[0, 0, 1], np.zeros(4))

    def test_max_sequences_cap(self):
        seqs = SequenceSet([DnaSequence("ACGT") for _ in range(5)])
        assert state_tensor(seqs, max_sequences=2).shape == (2, 2, 4, 4)


class TestSequenceSet:
    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            SequenceSet([])

    def test_mixed_lengths_rejected_on_length(self):
        mixed = SequenceSet([DnaSequence("ACGT"), DnaSequence("AC")])
        with pytest.raises(ValueError):
            _ = mixed.length

    def test_codes_rc_matches_per_sequence(self):
        rng = np.random.default_rng(5)
        seqs = SequenceSet([DnaSequence(random_dna(rng, 25, n_prob=0.1)) for _ in range(3)])
        rc_codes = seqs.codes_rc()
        for i, seq in enumerate(seqs):
            assert np.array_equal(rc_codes[i], reverse_complement(seq).codes())
