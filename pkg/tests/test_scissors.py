"""Quantum scissors: beam splitters on truncated Fock space, herald statistics, outputs."""
import numpy as np
import pytest
from scipy.linalg import expm

from qtelesim import scissors
from qtelesim.acceptance import scissors_bruteforce
from qtelesim.rng import RngStream
from qtelesim.scissors import BeamSplitterSpec, DetectionPattern, FockVector, TruncationError

R2 = 1 / np.sqrt(2)
BALANCED = BeamSplitterSpec()


def ket(dim, m, n):
    v = np.zeros(dim * dim, dtype=complex)
    v[m * dim + n] = 1
    return v


def random_fock(n, seed):
    z = RngStream(seed).generator.standard_normal((2, n))
    v = z[0] + 1j * z[1]
    return v / np.linalg.norm(v)


class TestBeamSplitter:
    @pytest.mark.parametrize("dim", [2, 4, 7])
    def test_zero_angle_is_identity(self, dim):
        u = scissors.beamsplitter_unitary(BeamSplitterSpec(0.0), dim).matrix
        np.testing.assert_allclose(u, np.eye(dim * dim), atol=1e-15)

    def test_balanced_single_photon(self):
        out = scissors.beamsplitter_unitary(BALANCED, 2).matrix @ ket(2, 1, 0)
        ref = expm(1j * np.pi / 4 * scissors.two_mode_generator(2)) @ ket(2, 1, 0)
        np.testing.assert_allclose(out, ref, atol=1e-12)
        assert abs(out[1 * 2 + 0]) ** 2 == pytest.approx(0.5, abs=1e-12)
        assert abs(out[0 * 2 + 1]) ** 2 == pytest.approx(0.5, abs=1e-12)
        # the reflected amplitude carries i
        assert out[1] == pytest.approx(1j * R2, abs=1e-12)

    def test_two_photon_interference(self):
        out = scissors.beamsplitter_unitary(BALANCED, 3).matrix @ ket(3, 1, 1)
        ref = expm(1j * np.pi / 4 * scissors.two_mode_generator(3)) @ ket(3, 1, 1)
        np.testing.assert_allclose(out, ref, atol=1e-12)
        assert abs(out[1 * 3 + 1]) < 1e-12
        assert abs(out[2 * 3 + 0]) ** 2 == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("dim", range(2, 7))
    @pytest.mark.parametrize("theta,phi", [(np.pi / 4, 0.0), (0.3, 1.1), (2.0, -0.7)])
    def test_matches_matrix_exponential(self, dim, theta, phi):
        u = scissors.beamsplitter_unitary(BeamSplitterSpec(theta, phi), dim).matrix
        ref = expm(1j * theta * scissors.two_mode_generator(dim, phi))
        np.testing.assert_allclose(u, ref, atol=1e-10)

    @pytest.mark.parametrize("dim", [2, 5, 8])
    def test_block_diagonal_in_photon_number(self, dim):
        u = scissors.beamsplitter_unitary(BeamSplitterSpec(0.7, 0.4), dim).matrix
        total = np.add.outer(np.arange(dim), np.arange(dim)).reshape(-1)
        off = u[total[:, None] != total[None, :]]
        assert np.max(np.abs(off)) <= 1e-12

    def test_dim_too_small(self):
        with pytest.raises(TruncationError):
            scissors.beamsplitter_unitary(BALANCED, 1)


class TestHeraldProbabilities:
    def test_qubit_input(self):
        probs = scissors.herald_probabilities(FockVector([0.6, 0.8j]))
        assert probs[DetectionPattern(1, 0)] == pytest.approx(0.25, abs=1e-12)
        assert probs[DetectionPattern(0, 1)] == pytest.approx(0.25, abs=1e-12)
        assert scissors.success_probability(FockVector([0.6, 0.8j])) == pytest.approx(0.5, abs=1e-12)

    def test_two_photon_input_never_succeeds(self):
        assert scissors.success_probability(FockVector.number(2, 3)) == pytest.approx(0.0, abs=1e-14)

    def test_vacuum_plus_two(self):
        probs = scissors.herald_probabilities(FockVector([R2, 0, R2]))
        assert probs[DetectionPattern(1, 0)] == pytest.approx(1 / 8, abs=1e-12)
        assert probs[DetectionPattern(0, 1)] == pytest.approx(1 / 8, abs=1e-12)

    def test_three_term_input(self):
        probs = scissors.herald_probabilities(FockVector([1, 1, 1]))
        for p in scissors.SUCCESS_PATTERNS:
            assert probs[DetectionPattern(*p)] == pytest.approx(1 / 6, abs=1e-12)

    @pytest.mark.parametrize("d", range(2, 7))
    def test_law_against_brute_force(self, d):
        for seed in range(5):
            amps = random_fock(d, 100 * d + seed)
            probs = scissors.herald_probabilities(FockVector(amps))
            brute = scissors_bruteforce(amps)
            law = (abs(amps[0]) ** 2 + abs(amps[1]) ** 2) / 4
            for p in scissors.SUCCESS_PATTERNS:
                assert probs[DetectionPattern(*p)] == pytest.approx(law, abs=1e-10)
                assert probs[DetectionPattern(*p)] == pytest.approx(brute[p][0], abs=1e-10)

    @pytest.mark.parametrize("d", range(2, 7))
    def test_probabilities_sum_to_one(self, d):
        probs = scissors.herald_probabilities(FockVector(random_fock(d, d)))
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-10)
        assert all(p.n1 + p.n2 <= d for p in probs)

    def test_truncation_too_small(self):
        with pytest.raises(TruncationError):
            scissors.herald_probabilities(FockVector([0, 0, 0, 1]), dim=4)
        scissors.herald_probabilities(FockVector([0, 0, 0, 1]), dim=5)


class TestOutputs:
    def test_vacuum_input(self):
        r = scissors.conditional_output(FockVector([1, 0]), (1, 0))
        assert r.success
        assert abs(r.output.amps[0]) == pytest.approx(1.0)
        assert scissors.success_probability(FockVector([1, 0])) == pytest.approx(0.5, abs=1e-12)

    def test_qubit_teleported_on_d1(self):
        amps = np.array([0.6, 0.8j])
        r = scissors.conditional_output(FockVector(amps), (1, 0))
        np.testing.assert_allclose(r.output.amps, 1j * amps, atol=1e-12)
        assert not r.needs_phase_flip
        np.testing.assert_allclose(r.corrected().amps, amps, atol=1e-12)

    def test_d2_needs_phase_flip(self):
        amps = np.array([0.6, 0.8j])
        r = scissors.conditional_output(FockVector(amps), (0, 1))
        np.testing.assert_allclose(r.output.amps, [0.6, -0.8j], atol=1e-12)
        assert r.needs_phase_flip
        np.testing.assert_allclose(r.corrected().amps, amps, atol=1e-12)

    def test_three_term_input_truncated(self):
        r = scissors.conditional_output(FockVector([1, 1, 1]), (1, 0))
        np.testing.assert_allclose(np.abs(r.corrected().amps), [R2, R2, 0], atol=1e-12)
        assert r.herald_probability == pytest.approx(1 / 6, abs=1e-12)

    @pytest.mark.parametrize("d", range(2, 7))
    def test_random_inputs_truncated(self, d):
        for seed in range(5):
            amps = random_fock(d, 7 * d + seed)
            inp = FockVector(amps)
            brute = scissors_bruteforce(amps)
            for p in scissors.SUCCESS_PATTERNS:
                r = scissors.conditional_output(inp, p)
                np.testing.assert_allclose(r.corrected().amps, inp.truncated().amps, atol=1e-10)
                # brute-force Bob amplitudes agree, including the pinned phase
                bob = brute[p][1][: 2] / np.sqrt(brute[p][0])
                np.testing.assert_allclose(r.output.amps[:2], bob, atol=1e-10)

    def test_failure_patterns_have_no_output(self):
        r = scissors.conditional_output(FockVector([0.6, 0.8]), (1, 1))
        assert not r.success and r.output is None
        with pytest.raises(ValueError):
            r.corrected()

    def test_qubit_fidelity_after_correction(self):
        base = RngStream(31)
        for i in range(100):
            amps = random_fock(2, 1000 + i)
            r = scissors.scissors_run(FockVector(amps), rng=base.substream(i))
            if r.success:
                assert abs(np.vdot(amps, r.corrected().amps)) ** 2 == pytest.approx(1.0, abs=1e-10)


class TestSampling:
    def test_success_rate(self):
        q = FockVector([R2, R2])
        base = RngStream(17)
        n = 20_000
        hits = sum(scissors.scissors_run(q, rng=base.substream(i)).success for i in range(n))
        # 3 sigma band for p = 1/2 at this n
        assert abs(hits / n - 0.5) <= 3 * np.sqrt(0.25 / n)

    def test_seeded(self):
        q = FockVector([1, 1, 1])
        a = [scissors.scissors_run(q, rng=RngStream(5).substream(i)).pattern for i in range(200)]
        b = [scissors.scissors_run(q, rng=RngStream(5).substream(i)).pattern for i in range(200)]
        assert a == b

    def test_needs_rng(self):
        with pytest.raises(ValueError):
            scissors.scissors_run(FockVector([1, 0]))

    def test_pattern_frequencies_match_born(self):
        from scipy import stats

        q = FockVector([0.5, 0.5, 0.5, 0.5])
        probs = scissors.herald_probabilities(q)
        pats = sorted(probs)
        base = RngStream(99)
        n = 20_000
        seen = {p: 0 for p in pats}
        for i in range(n):
            seen[scissors.scissors_run(q, rng=base.substream(i)).pattern] += 1
        keep = [p for p in pats if probs[p] * n >= 5]
        exp = np.array([probs[p] for p in keep]) * n
        obs = np.array([seen[p] for p in keep])
        exp *= obs.sum() / exp.sum()
        assert stats.chisquare(obs, exp).pvalue >= 1e-3
