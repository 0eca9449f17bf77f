"""
Pure states on composite Hilbert spaces and the primitives built on them.

Amplitude ordering is big-endian over the subsystem layout: for
``dims = (d0, d1, ..., dk)`` the basis ket ``|i0 i1 ... ik>`` sits at the flat
index ``np.ravel_multi_index((i0, ..., ik), dims)``, so subsystem 0 is the most
significant digit.  ``|0>|1>`` is therefore index 1 of 4.

States are immutable; every operation returns a new object.
"""
from __future__ import annotations

from math import prod
from typing import Iterable, Sequence

import numpy as np

from .rng import RngStream

NORM_TOL = 1e-9
ALGEBRA_TOL = 1e-10


class DimensionError(ValueError):
    """Subsystem indices or operator sizes do not fit the state."""


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise DimensionError("layout needs at least one subsystem")
    if any(d < 2 for d in dims):
        raise DimensionError(f"every subsystem dimension must be >= 2, got {dims}")
    return dims


def _check_targets(targets, n: int) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise DimensionError(f"target indices must be distinct, got {targets}")
    for t in targets:
        if not 0 <= t < n:
            raise DimensionError(f"subsystem index {t} out of range for {n} subsystems")
    return targets


class StateVector:
    """Normalized ket over the subsystems listed in ``dims``."""

    __slots__ = ("dims", "amps")

    def __init__(self, amps, dims: Sequence[int] | None = None, *, normalize: bool = True):
        amps = np.array(amps, dtype=complex).reshape(-1)
        dims = _check_dims(dims if dims is not None else (amps.size,))
        if prod(dims) != amps.size:
            raise DimensionError(
                f"layout {dims} has total dimension {prod(dims)}, got {amps.size} amplitudes"
            )
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0.0 or not np.isfinite(norm):
                raise ValueError("cannot normalize a zero or non-finite amplitude vector")
            amps = amps / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        amps.setflags(write=False)
        self.dims = dims
        self.amps = amps

    @classmethod
    def _trusted(cls, amps: np.ndarray, dims: tuple[int, ...]) -> "StateVector":
        # skip validation for results of norm-preserving operations
        obj = cls.__new__(cls)
        amps = np.ascontiguousarray(amps, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        obj.dims = dims
        obj.amps = amps
        return obj

    @classmethod
    def basis(cls, dims: Sequence[int], digits: Sequence[int]) -> "StateVector":
        dims = _check_dims(dims)
        amps = np.zeros(prod(dims), dtype=complex)
        amps[np.ravel_multi_index(tuple(digits), dims)] = 1.0
        return cls._trusted(amps, dims)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def as_tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    def with_phase(self, phase: complex) -> "StateVector":
        if abs(abs(phase) - 1.0) > NORM_TOL:
            raise ValueError("global phase must have unit modulus")
        return StateVector._trusted(self.amps * phase, self.dims)

    def __repr__(self) -> str:
        return f"StateVector(dims={self.dims}, amps={np.array2string(self.amps, precision=4)})"


class UnitaryOp:
    """Square matrix checked for unitarity at construction."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, tol: float = ALGEBRA_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"unitary must be square, got shape {m.shape}")
        err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if err > tol:
            raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {err:.3e})")
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        return UnitaryOp(self.matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"UnitaryOp(dim={self.dim})"


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, tol: float = ALGEBRA_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} is not 1")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, psi: StateVector) -> float:
        """<psi|rho|psi>, the fidelity of this state with a pure state."""
        v = psi.amps
        return float(np.real(v.conj() @ self.matrix @ v))

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def tensor(a: StateVector, b: StateVector) -> StateVector:
    return StateVector._trusted(np.kron(a.amps, b.amps), a.dims + b.dims)


def tensor_all(states: Iterable[StateVector]) -> StateVector:
    states = list(states)
    out = states[0]
    for s in states[1:]:
        out = tensor(out, s)
    return out


def permute(s: StateVector, order: Sequence[int]) -> StateVector:
    """Reorder subsystems: subsystem ``i`` of the result is ``order[i]`` of ``s``."""
    order = _check_targets(order, s.n_subsystems)
    if len(order) != s.n_subsystems:
        raise DimensionError("permutation must list every subsystem once")
    t = np.transpose(s.as_tensor(), order)
    return StateVector._trusted(t, tuple(s.dims[i] for i in order))


def _split(s: StateVector, targets: tuple[int, ...]):
    """Return the amplitudes as a (targets, rest) matrix plus the axis bookkeeping."""
    rest = tuple(i for i in range(s.n_subsystems) if i not in targets)
    order = targets + rest
    t = np.transpose(s.as_tensor(), order)
    tdim = prod(s.dims[i] for i in targets)
    return t.reshape(tdim, -1), order, rest


def _merge(mat: np.ndarray, s: StateVector, order: tuple[int, ...]) -> np.ndarray:
    shaped = mat.reshape(tuple(s.dims[i] for i in order))
    return np.transpose(shaped, np.argsort(order))


def _as_matrix(u) -> np.ndarray:
    return u.matrix if isinstance(u, UnitaryOp) else UnitaryOp(u).matrix


def apply_unitary(s: StateVector, u, targets: Sequence[int]) -> StateVector:
    targets = _check_targets(targets, s.n_subsystems)
    m = _as_matrix(u)
    tdim = prod(s.dims[i] for i in targets)
    if m.shape[0] != tdim:
        raise DimensionError(
            f"operator of dimension {m.shape[0]} does not match targets of dimension {tdim}"
        )
    mat, order, _ = _split(s, targets)
    return StateVector._trusted(_merge(m @ mat, s, order), s.dims)


def _basis_matrix(basis, tdim: int) -> np.ndarray:
    vecs = np.array([b.amps if isinstance(b, StateVector) else np.asarray(b, complex)
                     for b in basis], dtype=complex)
    if vecs.ndim != 2 or vecs.shape[1] != tdim:
        raise DimensionError(f"basis vectors must have dimension {tdim}")
    if vecs.shape[0] != tdim:
        raise ValueError(f"basis has {vecs.shape[0]} vectors but must span dimension {tdim}")
    gram = vecs.conj() @ vecs.T
    if np.max(np.abs(gram - np.eye(tdim))) > ALGEBRA_TOL:
        raise ValueError("measurement basis is not orthonormal")
    return vecs


def born_probabilities(s: StateVector, basis, targets: Sequence[int]) -> np.ndarray:
    targets = _check_targets(targets, s.n_subsystems)
    mat, _, _ = _split(s, targets)
    vecs = _basis_matrix(basis, mat.shape[0])
    coeffs = vecs.conj() @ mat
    return np.sum(np.abs(coeffs) ** 2, axis=1)


def project(s: StateVector, vector, targets: Sequence[int]) -> tuple[float, StateVector]:
    """Project ``targets`` onto one basis vector; returns (probability, post-state).

    The post-state is ``|v><v| (x) I |s>`` divided by its norm only, so any phase
    the branch carries in ``s`` survives untouched.
    """
    targets = _check_targets(targets, s.n_subsystems)
    mat, order, _ = _split(s, targets)
    v = vector.amps if isinstance(vector, StateVector) else np.asarray(vector, complex)
    rest = v.conj() @ mat
    p = float(np.real(np.vdot(rest, rest)))
    if p <= 0.0:
        raise ValueError("projection has zero probability")
    post = np.outer(v, rest / np.sqrt(p))
    return p, StateVector._trusted(_merge(post, s, order), s.dims)


def measure_projective(s: StateVector, basis, targets: Sequence[int], rng: RngStream):
    """Sample a projective measurement; returns (outcome index, probability, post-state)."""
    probs = born_probabilities(s, basis, targets)
    k = rng.choice_index(probs)
    vec = basis[k]
    p, post = project(s, vec, targets)
    return k, p, post


def project_out(s: StateVector, vector, targets: Sequence[int]) -> StateVector:
    """Contract ``targets`` with ``<vector|`` and return the normalized remainder."""
    targets = _check_targets(targets, s.n_subsystems)
    if len(targets) == s.n_subsystems:
        raise DimensionError("nothing left after contracting every subsystem")
    mat, _, rest = _split(s, targets)
    v = vector.amps if isinstance(vector, StateVector) else np.asarray(vector, complex)
    out = v.conj() @ mat
    return StateVector(out, tuple(s.dims[i] for i in rest))


def reduced_density(s: StateVector, keep: Sequence[int]) -> DensityMatrix:
    keep = _check_targets(keep, s.n_subsystems)
    if not keep:
        raise DimensionError("keep at least one subsystem")
    mat, _, _ = _split(s, keep)
    rho = mat @ mat.conj().T
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def fidelity(x: StateVector, y: StateVector) -> float:
    """|<x|y>|^2; insensitive to global phase."""
    if x.dim != y.dim:
        raise DimensionError(f"cannot compare states of dimension {x.dim} and {y.dim}")
    f = abs(np.vdot(x.amps, y.amps)) ** 2
    return float(min(max(f, 0.0), 1.0))


def amplitudes_close(x: StateVector, y: StateVector, atol: float = ALGEBRA_TOL) -> bool:
    """Phase-exact comparison, unlike :func:`fidelity`."""
    if x.dim != y.dim:
        raise DimensionError(f"cannot compare states of dimension {x.dim} and {y.dim}")
    return bool(np.max(np.abs(x.amps - y.amps)) <= atol)


def random_state(dims: Sequence[int], rng: RngStream) -> StateVector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    dims = _check_dims(dims)
    z = rng.generator.standard_normal((2, prod(dims)))
    return StateVector(z[0] + 1j * z[1], dims)


def random_unitary(dim: int, rng: RngStream) -> UnitaryOp:
    """Haar-random unitary via QR with phase fix."""
    z = rng.generator.standard_normal((2, dim, dim))
    q, r = np.linalg.qr((z[0] + 1j * z[1]) / np.sqrt(2))
    d = np.diagonal(r)
    return UnitaryOp(q * (d / np.abs(d)))


PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
