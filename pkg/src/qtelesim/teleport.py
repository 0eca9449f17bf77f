"""Bennett qubit teleportation: Bell basis, regrouping, measurement and correction.

Qubits are numbered 1, 2, 3 in the physics and sit at subsystem indices
0, 1, 2.  Alice holds qubits 1 (the input) and 2; Bob holds qubit 3.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import core
from .core import StateVector, UnitaryOp
from .rng import RngStream

_R2 = 1 / np.sqrt(2)


class BellOutcome(enum.Enum):
    A = 0
    B = 1
    C = 2
    D = 3

    @property
    def bits(self) -> tuple[int, int]:
        return (self.value >> 1) & 1, self.value & 1

    @classmethod
    def from_bits(cls, bits) -> "BellOutcome":
        hi, lo = bits
        return cls((int(hi) << 1) | int(lo))

    @classmethod
    def parse(cls, label) -> "BellOutcome":
        if isinstance(label, cls):
            return label
        try:
            return cls[str(label).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown Bell label {label!r}; expected one of A, B, C, D") from None


class ClassicalMessage(NamedTuple):
    """The two bits Alice sends to Bob."""

    bits: tuple[int, int]

    @classmethod
    def from_outcome(cls, outcome: BellOutcome) -> "ClassicalMessage":
        return cls(outcome.bits)

    @property
    def outcome(self) -> BellOutcome:
        return BellOutcome.from_bits(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class QubitState:
    a: complex
    b: complex

    def __post_init__(self):
        n = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(n - 1.0) > core.NORM_TOL:
            raise ValueError(f"|a|^2 + |b|^2 = {n!r}, expected 1")

    @classmethod
    def normalized(cls, a: complex, b: complex) -> "QubitState":
        n = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(complex(a) / n, complex(b) / n)

    @classmethod
    def from_state(cls, s: StateVector) -> "QubitState":
        if s.dims != (2,):
            raise core.DimensionError(f"expected a single qubit, got layout {s.dims}")
        return cls(complex(s.amps[0]), complex(s.amps[1]))

    @classmethod
    def random(cls, rng: RngStream) -> "QubitState":
        return cls.from_state(core.random_state((2,), rng))

    @property
    def vector(self) -> StateVector:
        return StateVector._trusted(np.array([self.a, self.b], dtype=complex), (2,))


@lru_cache(maxsize=None)
def _bell_amps(label: BellOutcome) -> np.ndarray:
    amps = {
        BellOutcome.A: [0, 1, -1, 0],
        BellOutcome.B: [0, 1, 1, 0],
        BellOutcome.C: [1, 0, 0, -1],
        BellOutcome.D: [1, 0, 0, 1],
    }[label]
    out = np.array(amps, dtype=complex) * _R2
    out.setflags(write=False)
    return out


def bell_state(label) -> StateVector:
    return StateVector._trusted(_bell_amps(BellOutcome.parse(label)), (2, 2))


def bell_basis() -> list[StateVector]:
    """Bell states in outcome order A, B, C, D."""
    return [bell_state(k) for k in BellOutcome]


def _snap(m: np.ndarray) -> np.ndarray:
    # branch operators are signed Paulis; their entries are exactly 0, +-1, +-i
    snapped = np.round(m.real) + 1j * np.round(m.imag)
    if np.max(np.abs(snapped - m)) > 1e-12:
        raise ArithmeticError("branch operator is not a signed Pauli matrix")
    return snapped


@lru_cache(maxsize=None)
def _branch_table(shared: BellOutcome):
    """Global phase and per-outcome branch operators for a shared pair.

    With ``|in>|shared>_23 = phase * 1/2 * sum_k |Phi_k>_12 (W_k |in>)_3`` this
    returns ``(phase, {k: W_k})``.  The phase is fixed so that the outcome whose
    branch is proportional to the identity carries exactly ``I``.
    """
    pair = _bell_amps(shared)
    raw = {}
    for k in BellOutcome:
        bra = _bell_amps(k).conj()
        cols = []
        for j in range(2):
            total = np.kron(np.eye(2)[j], pair).reshape(4, 2)
            cols.append(2 * (bra @ total))
        raw[k] = np.array(cols).T
    ident = [k for k, m in raw.items() if abs(m[0, 1]) < 1e-12 and abs(m[0, 0] - m[1, 1]) < 1e-12]
    (k0,) = ident
    phase = complex(_snap(raw[k0][:1, :1])[0, 0])
    branches = {k: _snap(m / phase) for k, m in raw.items()}
    return phase, branches


@dataclass(frozen=True)
class BellDecomposition:
    """``state = global_phase * 1/2 * sum_k |Phi_k>_12 branches[k]``."""

    global_phase: complex
    branches: dict

    def reconstruct(self) -> StateVector:
        amps = sum(np.kron(_bell_amps(k), self.branches[k].amps) for k in BellOutcome)
        return StateVector(0.5 * self.global_phase * amps, (2, 2, 2), normalize=False)


def bell_decompose(state: QubitState, shared=BellOutcome.A) -> BellDecomposition:
    """Regroup ``|in>_1 |shared>_23`` in the Bell basis of qubits 1, 2.

    For the default singlet resource the branches are ``A: a|0>+b|1>``,
    ``B: a|0>-b|1>``, ``C: -(a|1>+b|0>)``, ``D: -(a|1>-b|0>)`` with a global
    phase of -1 pulled out front.
    """
    phase, ops = _branch_table(BellOutcome.parse(shared))
    v = np.array([state.a, state.b], dtype=complex)
    branches = {k: StateVector._trusted(ops[k] @ v, (2,)) for k in BellOutcome}
    return BellDecomposition(phase, branches)


def correction(outcome, shared=BellOutcome.A) -> UnitaryOp:
    """Bob's unitary for a Bell outcome: I, sigma_z, -sigma_x, -i sigma_y for the singlet."""
    _, ops = _branch_table(BellOutcome.parse(shared))
    return UnitaryOp(ops[BellOutcome.parse(outcome)].conj().T)


@dataclass(frozen=True)
class TeleportResult:
    outcome: BellOutcome
    message: ClassicalMessage
    bob_state: QubitState
    fidelity: float
    probability: float
    alice_state: StateVector

    @property
    def bits(self) -> str:
        return str(self.message)


def initial_state(state: QubitState, shared=BellOutcome.A) -> StateVector:
    """Three-qubit input, expressed without the global phase the regrouping factors out."""
    shared = BellOutcome.parse(shared)
    phase, _ = _branch_table(shared)
    return core.tensor(state.vector, bell_state(shared)).with_phase(np.conj(phase))


def outcome_probabilities(state: QubitState, shared=BellOutcome.A) -> np.ndarray:
    return core.born_probabilities(initial_state(state, shared), bell_basis(), (0, 1))


def bob_premessage_density(state: QubitState, shared=BellOutcome.A) -> core.DensityMatrix:
    """Bob's qubit after the Bell measurement, averaged over outcomes he has not yet learned."""
    psi = initial_state(state, shared)
    rho = np.zeros((2, 2), dtype=complex)
    for k, vec in enumerate(bell_basis()):
        p, post = core.project(psi, vec, (0, 1))
        rho += p * core.reduced_density(post, (2,)).matrix
    return core.DensityMatrix(rho)


def teleport(state: QubitState, rng: RngStream | None = None, *, shared=BellOutcome.A,
             outcome=None) -> TeleportResult:
    """Run the protocol once.

    The Bell measurement is sampled from ``rng`` unless ``outcome`` forces a branch.
    """
    shared = BellOutcome.parse(shared)
    psi = initial_state(state, shared)
    basis = bell_basis()
    if outcome is None:
        if rng is None:
            raise ValueError("either rng or a forced outcome is required")
        k, p, post = core.measure_projective(psi, basis, (0, 1), rng)
        measured = BellOutcome(k)
    else:
        measured = BellOutcome.parse(outcome)
        p, post = core.project(psi, basis[measured.value], (0, 1))
    corrected = core.apply_unitary(post, correction(measured, shared), (2,))
    bob = core.project_out(corrected, basis[measured.value], (0, 1))
    alice = core.project_out(corrected, bob, (2,))
    return TeleportResult(
        outcome=measured,
        message=ClassicalMessage.from_outcome(measured),
        bob_state=QubitState.from_state(bob),
        fidelity=core.fidelity(bob, state.vector),
        probability=p,
        alice_state=alice,
    )
