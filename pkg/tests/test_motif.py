import itertools

import numpy as np
import pytest

from motif_forge import (
    Pwm,
    consensus_iupac,
    motif_inequality,
    position_inequality,
    pwm_similarity,
    read_pwm,
    rejection_sample_motif,
    sample_random_motif,
    write_pwm,
)
from motif_forge.motif import MAX_POSITION_INEQUALITY, PwmFormatError

from helpers import random_pwm

ONE_HOT_E = 0.31640625  # (3/4)^4 as an exact binary fraction


class TestPwm:
    def test_valid(self):
        p = Pwm(np.array([[0.25, 0.25, 0.25, 0.25]]))
        assert p.width == 1

    def test_row_sum_enforced(self):
        with pytest.raises(ValueError):
            Pwm(np.array([[0.5, 0.5, 0.5, 0.5]]))

    def test_entry_range_enforced(self):
        with pytest.raises(ValueError):
            Pwm(np.array([[1.5, -0.5, 0.0, 0.0]]))

    def test_reverse_complement_is_involution(self):
        p = random_pwm(np.random.default_rng(0), 5)
        assert np.allclose(p.reverse_complement().reverse_complement().matrix, p.matrix)


class TestConsensus:
    def test_one_hot(self):
        assert consensus_iupac(Pwm(np.array([[1.0, 0, 0, 0]])), 0.5) == "A"

    def test_two_way_tie(self):
        assert consensus_iupac(Pwm(np.array([[0.5, 0.5, 0, 0]])), 0.5) == "M"

    def test_uniform(self):
        assert consensus_iupac(Pwm(np.full((1, 4), 0.25)), 0.5) == "N"

    def test_all_codes_reachable(self):
        # every degenerate subset maps to its documented letter
        expected = {
            ("A",): "A", ("C",): "C", ("G",): "G", ("T",): "T",
            ("A", "G"): "R", ("C", "T"): "Y", ("C", "G"): "S", ("A", "T"): "W",
            ("G", "T"): "K", ("A", "C"): "M", ("C", "G", "T"): "B",
            ("A", "G", "T"): "D", ("A", "C", "T"): "H", ("A", "C", "G"): "V",
            ("A", "C", "G", "T"): "N",
        }
        for bases, code in expected.items():
            col = np.zeros(4)
            for b in bases:
                col["ACGT".index(b)] = 1.0 / len(bases)
            assert consensus_iupac(Pwm(col[None]), 0.9) == code

    def test_threshold_range(self):
        with pytest.raises(ValueError):
            consensus_iupac(Pwm(np.full((1, 4), 0.25)), 0.0)


class TestPositionInequality:
    def test_uniform_is_zero(self):
        assert position_inequality(np.full(4, 0.25)) == 0.0

    def test_one_hot_exact(self):
        assert position_inequality(np.array([1.0, 0, 0, 0])) == ONE_HOT_E

    def test_half_half_exact(self):
        assert position_inequality(np.array([0.5, 0.5, 0, 0])) == 0.0625

    def test_permutation_invariant(self):
        rng = np.random.default_rng(1)
        col = rng.dirichlet(np.ones(4))
        values = {position_inequality(col[list(p)]) for p in itertools.permutations(range(4))}
        assert max(values) - min(values) <= 1e-15

    def test_zero_iff_all_equal(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            col = rng.dirichlet(np.ones(4))
            if np.ptp(col) > 1e-12:
                assert position_inequality(col) > 0.0

    def test_grid_search_maximizer_is_one_hot(self):
        # enumerate the probability simplex at resolution 0.01
        step = 100
        best, best_col = -1.0, None
        grid = []
        for a in range(step + 1):
            for c in range(step + 1 - a):
                for g in range(step + 1 - a - c):
                    grid.append((a, c, g, step - a - c - g))
        grid = np.array(grid, dtype=np.float64) / step
        diffs = np.abs(grid[:, :, None] - grid[:, None, :]).sum(axis=(1, 2))
        values = (4.0 * diffs / 32.0) ** 4
        top = values.argmax()
        assert values[top] == pytest.approx(MAX_POSITION_INEQUALITY, abs=1e-12)
        assert sorted(grid[top]) == [0, 0, 0, 1.0]


class TestMotifInequality:
    def test_two_one_hot_columns(self):
        p = Pwm(np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0]]))
        assert motif_inequality(p) == pytest.approx(ONE_HOT_E**2, abs=1e-15)

    def test_uniform_column_annihilates(self):
        p = Pwm(np.array([[1.0, 0, 0, 0], [0.25, 0.25, 0.25, 0.25]]))
        assert motif_inequality(p) == 0.0

    def test_single_column_reduces(self):
        p = Pwm(np.array([[1.0, 0, 0, 0]]))
        assert motif_inequality(p) == position_inequality(p.matrix[0])

    def test_bounds(self):
        rng = np.random.default_rng(3)
        for m in (1, 3, 6):
            for _ in range(20):
                e = motif_inequality(random_pwm(rng, m, 0.4))
                assert 0.0 <= e <= MAX_POSITION_INEQUALITY**m


class TestSampling:
    def test_shape_and_normalization(self):
        p = sample_random_motif(5, 0.3, np.random.default_rng(0))
        assert p.width == 5
        assert np.abs(p.matrix.sum(axis=1) - 1).max() <= 1e-9

    def test_high_concentration_mean_near_uniform(self):
        rng = np.random.default_rng(1)
        draws = np.stack([sample_random_motif(1, 100.0, rng).matrix[0] for _ in range(10000)])
        assert np.abs(draws.mean(axis=0) - 0.25).max() <= 0.02

    def test_seed_determinism(self):
        a = sample_random_motif(4, 0.3, np.random.default_rng(9)).matrix
        b = sample_random_motif(4, 0.3, np.random.default_rng(9)).matrix
        assert np.array_equal(a, b)

    def test_rejection_seed_determinism(self):
        a = rejection_sample_motif(4, 0.3, np.random.default_rng(9)).matrix
        b = rejection_sample_motif(4, 0.3, np.random.default_rng(9)).matrix
        assert np.array_equal(a, b)

    def test_one_hot_acceptance_weight_is_one(self):
        # normalization by (3/4)^(4m): a fully one-hot motif is always accepted
        assert motif_inequality(Pwm(np.eye(4)[:1])) / MAX_POSITION_INEQUALITY == 1.0

    def test_rejection_enriches_inequality(self):
        rng = np.random.default_rng(2)
        raw = np.mean([motif_inequality(sample_random_motif(6, 0.3, rng)) for _ in range(2000)])
        rng = np.random.default_rng(3)
        accepted = np.mean(
            [motif_inequality(rejection_sample_motif(6, 0.3, rng)) for _ in range(2000)]
        )
        assert accepted > raw

    def test_invalid_args(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_random_motif(0, 0.3, rng)
        with pytest.raises(ValueError):
            sample_random_motif(3, 0.0, rng)
        with pytest.raises(ValueError):
            rejection_sample_motif(3, 0.3, rng, max_tries=0)


class TestSimilarity:
    def test_identical(self):
        rng = np.random.default_rng(4)
        p = random_pwm(rng, 6, 0.3)
        report = pwm_similarity(p, p, 4)
        assert report.score == pytest.approx(1.0, abs=1e-12)
        assert report.best_offset == 0
        assert report.best_strand == "forward"
        assert report.overlap == 6

    def test_reverse_complement_strand(self):
        rng = np.random.default_rng(5)
        p = random_pwm(rng, 6, 0.3)
        report = pwm_similarity(p, p.reverse_complement(), 4)
        assert report.score == pytest.approx(1.0, abs=1e-12)
        assert report.best_strand == "reverse"

    def test_one_hot_mismatch_pearson(self):
        a = Pwm(np.array([[1.0, 0, 0, 0]]))
        b = Pwm(np.array([[0, 1.0, 0, 0]]))
        report = pwm_similarity(a, b, 1)
        # best over strands: reverse of one-hot C is one-hot G, also -1/3
        assert report.score == pytest.approx(-1 / 3, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a = random_pwm(rng, int(rng.integers(4, 9)), 0.5)
            b = random_pwm(rng, int(rng.integers(4, 9)), 0.5)
            assert pwm_similarity(a, b, 4).score == pytest.approx(
                pwm_similarity(b, a, 4).score, abs=1e-9
            )

    def test_shifted_copy_found_at_offset(self):
        rng = np.random.default_rng(7)
        a = random_pwm(rng, 8, 0.3)
        b = Pwm(a.matrix[2:8].copy())
        report = pwm_similarity(a, b, 4)
        assert report.best_offset == 2
        assert report.score == pytest.approx(1.0, abs=1e-12)

    def test_zero_variance_column_scores_zero(self):
        a = Pwm(np.full((4, 4), 0.25))
        b = Pwm(np.full((4, 4), 0.25))
        assert pwm_similarity(a, b, 4).score == 0.0

    def test_min_overlap_unreachable(self):
        a = Pwm(np.full((3, 4), 0.25))
        with pytest.raises(ValueError):
            pwm_similarity(a, a, 4)


class TestPwmIO:
    @pytest.mark.parametrize("fmt", ["jaspar", "meme_minimal"])
    def test_roundtrip(self, fmt):
        rng = np.random.default_rng(8)
        for _ in range(5):
            p = random_pwm(rng, int(rng.integers(1, 12)), 0.7)
            again = read_pwm(write_pwm(p, fmt), fmt)
            assert np.abs(again.matrix - p.matrix).max() <= 1e-6

    def test_meme_header(self):
        p = random_pwm(np.random.default_rng(9), 5)
        assert write_pwm(p, "meme_minimal").startswith("MEME version 4")

    def test_jaspar_shape(self):
        p = random_pwm(np.random.default_rng(10), 7)
        lines = [l for l in write_pwm(p, "jaspar").splitlines() if not l.startswith(">")]
        assert len(lines) == 4
        for line in lines:
            body = line.split("[")[1].split("]")[0]
            assert len(body.split()) == 7

    def test_jaspar_counts_normalized(self):
        text = ">m\nA [ 10 0 ]\nC [ 0 10 ]\nG [ 10 0 ]\nT [ 0 10 ]\n"
        p = read_pwm(text, "jaspar")
        assert np.allclose(p.matrix, [[0.5, 0, 0.5, 0], [0, 0.5, 0, 0.5]])

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            write_pwm(random_pwm(np.random.default_rng(0), 2), "transfac")

    def test_jaspar_malformed_line_number(self):
        with pytest.raises(PwmFormatError) as err:
            read_pwm(">m\nA [ 1 ]\nQ [ 1 ]\n", "jaspar")
        assert err.value.line == 3

    def test_meme_missing_header(self):
        with pytest.raises(PwmFormatError):
            read_pwm("letter-probability matrix: w= 2\n0.25 0.25 0.25 0.25\n", "meme_minimal")

    def test_meme_width_mismatch(self):
        text = "MEME version 4\n\nMOTIF x\nletter-probability matrix: alength= 4 w= 3\n 0.25 0.25 0.25 0.25\n"
        with pytest.raises(PwmFormatError):
            read_pwm(text, "meme_minimal")
