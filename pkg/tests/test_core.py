"""State-vector primitives: construction, tensor, unitaries, measurement, partial trace."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from qtelesim import core
from qtelesim.core import DensityMatrix, DimensionError, StateVector, UnitaryOp
from qtelesim.rng import RngStream
from qtelesim.teleport import BellOutcome, bell_basis, bell_state

R2 = 1 / np.sqrt(2)
ZERO = StateVector([1, 0])
ONE = StateVector([0, 1])
PLUS = StateVector([R2, R2])


def explicit_partial_trace_2x2(amps4, keep):
    """rho_keep[i, j] = sum_k psi[i, k] psi*[j, k] written out by hand."""
    psi = np.asarray(amps4).reshape(2, 2)
    rho = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                if keep == 0:
                    rho[i, j] += psi[i, k] * np.conj(psi[j, k])
                else:
                    rho[i, j] += psi[k, i] * np.conj(psi[k, j])
    return rho


class TestStateVector:
    def test_normalizes_on_construction(self):
        s = StateVector([3, 4j])
        np.testing.assert_allclose(s.amps, [0.6, 0.8j])

    def test_zero_norm_is_an_error(self):
        with pytest.raises(ValueError):
            StateVector([0, 0])

    def test_unnormalized_rejected_without_normalize(self):
        with pytest.raises(ValueError):
            StateVector([1, 1], normalize=False)

    def test_amplitudes_read_only(self):
        s = StateVector([1, 0])
        with pytest.raises(ValueError):
            s.amps[0] = 2

    def test_dims_must_match_length(self):
        with pytest.raises(DimensionError):
            StateVector([1, 0, 0], dims=(2, 2))

    def test_basis_is_big_endian(self):
        s = StateVector.basis((2, 3), (1, 2))
        assert s.amps[1 * 3 + 2] == 1
        assert s.dims == (2, 3)


class TestTensor:
    def test_basis_product(self):
        s = core.tensor(ZERO, ONE)
        np.testing.assert_array_equal(s.amps, [0, 1, 0, 0])
        assert s.dims == (2, 2)

    def test_linearity(self):
        s = core.tensor(ZERO, PLUS)
        np.testing.assert_allclose(s.amps, [R2, R2, 0, 0])

    def test_norm_preserved(self):
        a = core.random_state((3,), RngStream(1))
        b = core.random_state((2, 2), RngStream(2))
        assert core.tensor(a, b).norm() == pytest.approx(1.0, abs=1e-12)

    def test_input_times_singlet_regroups_into_bell_branches(self):
        a, b = 0.6, 0.8j
        s = core.tensor(StateVector([a, b]), bell_state("A"))
        # by hand: sum over Bell states of qubits 1,2 times Bob's branch
        branch = {"A": [a, b], "B": [a, -b], "C": [-b, -a], "D": [b, -a]}
        rebuilt = sum(np.kron(bell_state(k).amps, np.array(v) / 2) for k, v in branch.items())
        # the regrouping carries an overall -1 relative to the product
        np.testing.assert_allclose(s.amps, -rebuilt, atol=1e-12)


class TestPermute:
    def test_swaps_two_qubits(self):
        s = core.permute(core.tensor(ZERO, ONE), (1, 0))
        np.testing.assert_array_equal(s.amps, core.tensor(ONE, ZERO).amps)

    def test_rejects_partial_order(self):
        with pytest.raises(DimensionError):
            core.permute(core.tensor(ZERO, ONE), (0,))


class TestApplyUnitary:
    def test_phase_flip(self):
        out = core.apply_unitary(PLUS, core.PAULI_Z, (0,))
        np.testing.assert_allclose(out.amps, [R2, -R2])

    def test_identity(self):
        s = core.random_state((2, 3), RngStream(5))
        out = core.apply_unitary(s, np.eye(3), (1,))
        np.testing.assert_array_equal(out.amps, s.amps)

    def test_minus_sigma_x_matrix_oracle(self):
        a, b = 0.6, 0.8j
        s = StateVector([b, a])  # a|1> + b|0>
        out = core.apply_unitary(s, -core.PAULI_X, (0,))
        np.testing.assert_allclose(out.amps, -np.array([a, b]), atol=1e-15)

    def test_acts_on_the_named_subsystem(self):
        s = core.tensor(ZERO, ZERO)
        out = core.apply_unitary(s, core.PAULI_X, (1,))
        np.testing.assert_array_equal(out.amps, [0, 1, 0, 0])

    def test_two_target_order_matters(self):
        cnot = np.eye(4)[[0, 1, 3, 2]]
        s = core.tensor(ONE, ZERO)
        assert core.apply_unitary(s, cnot, (0, 1)).amps[3] == 1
        assert core.apply_unitary(s, cnot, (1, 0)).amps[2] == 1

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            core.apply_unitary(core.tensor(ZERO, ZERO), np.eye(4), (0,))

    def test_out_of_range_target(self):
        with pytest.raises(DimensionError):
            core.apply_unitary(ZERO, core.PAULI_X, (1,))

    def test_repeated_target(self):
        with pytest.raises(DimensionError):
            core.apply_unitary(core.tensor(ZERO, ZERO), np.eye(4), (0, 0))

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            core.apply_unitary(ZERO, np.array([[1, 1], [0, 1]]), (0,))


class TestMeasureProjective:
    comp = [ZERO, ONE]

    def test_deterministic_basis_state(self):
        k, p, post = core.measure_projective(ZERO, self.comp, (0,), RngStream(0))
        assert (k, p) == (0, 1.0)
        np.testing.assert_array_equal(post.amps, [1, 0])

    def test_bell_state_in_bell_basis(self):
        k, p, _ = core.measure_projective(bell_state("A"), bell_basis(), (0, 1), RngStream(3))
        assert BellOutcome(k) is BellOutcome.A
        assert p == pytest.approx(1.0, abs=1e-12)

    def test_teleport_input_gives_quarter_outcomes(self):
        s = core.tensor(StateVector([0.6, 0.8j]), bell_state("A"))
        probs = core.born_probabilities(s, bell_basis(), (0, 1))
        # brute force: |<B_k (x) e_j | s>|^2 summed over j
        for k, bv in enumerate(bell_basis()):
            brute = sum(abs(np.vdot(np.kron(bv.amps, np.eye(2)[j]), s.amps)) ** 2 for j in range(2))
            assert probs[k] == pytest.approx(brute, abs=1e-14)
            assert probs[k] == pytest.approx(0.25, abs=1e-12)

    def test_post_state_keeps_branch_phase(self):
        s = StateVector([1, 1j]).with_phase(-1)
        p, post = core.project(s, ONE, (0,))
        assert p == pytest.approx(0.5)
        np.testing.assert_allclose(post.amps, [0, -1j], atol=1e-15)

    def test_non_orthonormal_basis(self):
        with pytest.raises(ValueError):
            core.measure_projective(ZERO, [ZERO, PLUS], (0,), RngStream(0))

    def test_incomplete_basis(self):
        with pytest.raises(ValueError):
            core.born_probabilities(core.tensor(ZERO, ZERO), [ZERO.amps.tolist() + [0, 0]], (0, 1))

    def test_zero_probability_projection(self):
        with pytest.raises(ValueError):
            core.project(ZERO, ONE, (0,))


class TestReducedDensity:
    def test_product_state(self):
        rho = core.reduced_density(core.tensor(ZERO, ONE), (0,))
        np.testing.assert_array_equal(rho.matrix, [[1, 0], [0, 0]])

    @pytest.mark.parametrize("keep", [0, 1])
    def test_bell_d_is_maximally_mixed(self, keep):
        s = bell_state("D")
        rho = core.reduced_density(s, (keep,)).matrix
        np.testing.assert_allclose(rho, explicit_partial_trace_2x2(s.amps, keep), atol=1e-15)
        np.testing.assert_allclose(rho, np.eye(2) / 2, atol=1e-15)

    @pytest.mark.parametrize("keep", [0, 1])
    def test_matches_explicit_sum_for_random_states(self, keep):
        s = core.random_state((2, 2), RngStream(40 + keep))
        rho = core.reduced_density(s, (keep,)).matrix
        np.testing.assert_allclose(rho, explicit_partial_trace_2x2(s.amps, keep), atol=1e-14)

    def test_keep_order_follows_argument(self):
        s = core.tensor(core.tensor(ZERO, ONE), PLUS)
        rho = core.reduced_density(s, (1, 0)).matrix
        assert rho[2, 2] == pytest.approx(1.0)  # |1>|0> in the (1, 0) order

    def test_out_of_range(self):
        with pytest.raises(DimensionError):
            core.reduced_density(ZERO, (1,))


class TestFidelity:
    def test_self(self):
        s = core.random_state((4,), RngStream(9))
        assert core.fidelity(s, s) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert core.fidelity(ZERO, ONE) == 0.0

    def test_half(self):
        assert core.fidelity(PLUS, ZERO) == pytest.approx(0.5, abs=1e-15)

    def test_ignores_global_phase_but_amplitudes_do_not(self):
        s = core.random_state((2,), RngStream(11))
        t = s.with_phase(1j)
        assert core.fidelity(s, t) == pytest.approx(1.0, abs=1e-12)
        assert not core.amplitudes_close(s, t)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            core.fidelity(ZERO, core.tensor(ZERO, ZERO))


class TestOperatorTypes:
    def test_density_matrix_invariants(self):
        with pytest.raises(ValueError):
            DensityMatrix([[1, 1], [0, 0]])  # not Hermitian
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2))  # trace 2
        with pytest.raises(ValueError):
            DensityMatrix([[1.5, 0], [0, -0.5]])  # negative eigenvalue

    def test_density_matrix_purity(self):
        assert DensityMatrix(np.eye(2) / 2).purity() == pytest.approx(0.5)

    def test_unitary_composition(self):
        u = UnitaryOp(core.PAULI_X) @ UnitaryOp(core.PAULI_Z)
        np.testing.assert_allclose(u.matrix, core.PAULI_X @ core.PAULI_Z)


class TestInvariants:
    def test_unitarity_preservation(self):
        base = RngStream(2024)
        worst = 0.0
        for i in range(1000):
            s = base.substream(i)
            dims = [(2,), (3,), (2, 2), (2, 3), (4, 4), (2, 2, 2, 2)][i % 6]
            psi = core.random_state(dims, s.substream(0))
            n = len(dims)
            targets = tuple(range(n))[-(1 + i % n):] if n > 1 else (0,)
            tdim = int(np.prod([dims[t] for t in targets]))
            u = core.random_unitary(tdim, s.substream(1))
            worst = max(worst, abs(core.apply_unitary(psi, u, targets).norm() - 1.0))
        assert worst <= 1e-10

    def test_born_completeness(self):
        base = RngStream(77)
        for i in range(200):
            psi = core.random_state((2, 4), base.substream(i).substream(0))
            u = core.random_unitary(4, base.substream(i).substream(1)).matrix
            basis = [u[:, k] for k in range(4)]
            assert core.born_probabilities(psi, basis, (1,)).sum() == pytest.approx(1.0, abs=1e-10)

    def test_sampling_passes_chi_square(self):
        psi = core.random_state((5,), RngStream(123))
        basis = np.eye(5)
        probs = core.born_probabilities(psi, basis, (0,))
        base = RngStream(321)
        n = 100_000
        counts = np.bincount([base.substream(i).choice_index(probs) for i in range(n)], minlength=5)
        assert stats.chisquare(counts, probs * n).pvalue >= 1e-3

    def test_partial_trace_consistency(self):
        base = RngStream(55)
        for i in range(50):
            a = core.random_state((2,), base.substream(i).substream(0))
            b = core.random_state((3,), base.substream(i).substream(1))
            s = core.tensor(a, b)
            for keep, factor in (((0,), a), ((1,), b)):
                rho = core.reduced_density(s, keep)
                assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-10)
                np.testing.assert_allclose(rho.matrix, np.outer(factor.amps, factor.amps.conj()),
                                           atol=1e-12)


amplitude = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(st.lists(amplitude, min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 1e-3),
           st.integers(0, 2 ** 32))
    def test_unitary_keeps_norm(self, amps, seed):
        psi = StateVector(amps, (2, 2))
        u = core.random_unitary(2, RngStream(seed))
        out = core.apply_unitary(psi, u, (seed % 2,))
        assert out.norm() == pytest.approx(1.0, abs=1e-10)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(amplitude, min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-3))
    def test_reduced_states_are_valid(self, amps):
        psi = StateVector(amps, (2, 2, 2))
        for keep in ((0,), (1, 2), (2, 0)):
            rho = core.reduced_density(psi, keep)
            assert rho.eigenvalues().min() >= -1e-9
            assert np.trace(rho.matrix).real == pytest.approx(1.0, abs=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(amplitude, min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 1e-3))
    def test_bell_probabilities_sum_to_one(self, amps):
        psi = StateVector(amps, (2, 2))
        assert core.born_probabilities(psi, bell_basis(), (0, 1)).sum() == pytest.approx(1.0, abs=1e-10)


class TestRngStream:
    def test_same_seed_same_sequence(self):
        assert np.array_equal(RngStream(7).random(10), RngStream(7).random(10))

    def test_substreams_differ(self):
        base = RngStream(7)
        assert not np.array_equal(base.substream(0).random(4), base.substream(1).random(4))

    def test_substream_independent_of_siblings(self):
        a = RngStream(9).substream(5).random(3)
        base = RngStream(9)
        for i in range(5):
            base.substream(i).random(100)
        np.testing.assert_array_equal(base.substream(5).random(3), a)

    def test_frozen_values(self):
        # portable across platforms: Philox keyed through SeedSequence
        got = RngStream(20021101).substream(3).random(2)
        np.testing.assert_array_equal(got, [float.fromhex(h) for h in FROZEN_RNG])

    def test_seed_range(self):
        with pytest.raises(ValueError):
            RngStream(-1)
        with pytest.raises(ValueError):
            RngStream(2 ** 64)

    def test_choice_skips_zero_weights(self):
        base = RngStream(1)
        picks = {base.substream(i).choice_index([0.0, 0.3, 0.0, 0.7, 0.0]) for i in range(500)}
        assert picks == {1, 3}


FROZEN_RNG = ('0x1.30ce4582ee1eap-2', '0x1.30c089788abb9p-1')
