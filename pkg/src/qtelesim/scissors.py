"""
Quantum scissors: teleportation and truncation of a single optical mode.

Three truncated modes, big-endian in this order:

    0  ``a``  Alice's input mode, later the D1 port of BS1
    1  ``b``  BS2 port that starts with one photon; its BS2 output feeds BS1,
              and after BS1 it is the D2 port
    2  ``c``  BS2 port that starts in vacuum; its BS2 output is Bob's mode

Beam splitters use the symmetric convention ``U = exp(i theta (e^{i phi} a^dag b
+ e^{-i phi} a b^dag))``, so a reflected photon picks up ``i e^{-i phi}`` and a
balanced splitter has ``theta = pi/4``.

With balanced splitters the heralded outputs of Bob's mode are

    D1 click (1, 0):  i (c0|0> + c1|1>)   (the input, up to the pinned phase i)
    D2 click (0, 1):     c0|0> - c1|1>    (needs the phase flip |x> -> (-1)^x |x>)
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, sqrt
from typing import NamedTuple

import numpy as np

from . import core
from .core import StateVector, UnitaryOp
from .rng import RngStream

DEFAULT_DIM = 8

SUCCESS_PATTERNS = ((1, 0), (0, 1))
# global phase each success pattern imprints on the truncated input (balanced splitters)
PATTERN_PHASE = {(1, 0): 1j, (0, 1): 1.0}
# patterns after which Bob applies |x> -> (-1)^x |x>
NEEDS_PHASE_FLIP = {(1, 0): False, (0, 1): True}


class TruncationError(ValueError):
    """The joint Fock space cannot hold every photon the network can carry."""


class FockVector:
    """Normalized single-mode amplitudes ``c_0 .. c_{d-1}``."""

    __slots__ = ("amps",)

    def __init__(self, amps, *, normalize: bool = True):
        s = StateVector(amps, normalize=normalize)
        self.amps = s.amps

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def state(self) -> StateVector:
        return StateVector._trusted(self.amps, (self.dim,))

    def max_photons(self) -> int:
        """Highest photon number with a nonzero amplitude."""
        return int(np.flatnonzero(self.amps)[-1])

    def truncated(self, dim: int | None = None) -> "FockVector":
        """Normalized ``c_0|0> + c_1|1>`` padded to ``dim`` (default: own dim)."""
        out = np.zeros(dim or self.dim, dtype=complex)
        out[:2] = self.amps[:2]
        return FockVector(out)

    @classmethod
    def number(cls, n: int, dim: int) -> "FockVector":
        amps = np.zeros(dim, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    def __repr__(self) -> str:
        return f"FockVector({np.array2string(self.amps, precision=4)})"


@dataclass(frozen=True)
class BeamSplitterSpec:
    theta: float = np.pi / 4
    phi: float = 0.0


class DetectionPattern(NamedTuple):
    n1: int
    n2: int


@dataclass(frozen=True)
class ScissorsResult:
    pattern: DetectionPattern
    success: bool
    herald_probability: float
    output: FockVector | None = None
    needs_phase_flip: bool = False

    def corrected(self) -> FockVector:
        """Bob's mode after the classical correction, with the pinned pattern phase removed."""
        if not self.success:
            raise ValueError("failed run has no output state")
        amps = np.array(self.output.amps)
        if self.needs_phase_flip:
            amps[1::2] *= -1
        return FockVector(amps * np.conj(PATTERN_PHASE[tuple(self.pattern)]))


def _block_closed_form(n_total: int, theta: float, phi: float) -> np.ndarray:
    """Block of the beam splitter on ``{|m, N-m>}`` from the mode transformation.

    ``U a^dag U^dag = cos a^dag + i e^{-i phi} sin b^dag`` and
    ``U b^dag U^dag = cos b^dag + i e^{i phi} sin a^dag``; expanding
    ``(a^dag)^m (b^dag)^n |0>`` binomially gives every matrix element.
    """
    c, s = np.cos(theta), np.sin(theta)
    ra, rb = 1j * np.exp(-1j * phi) * s, 1j * np.exp(1j * phi) * s
    blk = np.zeros((n_total + 1, n_total + 1), dtype=complex)
    for m in range(n_total + 1):
        n = n_total - m
        norm_in = sqrt(factorial(m) * factorial(n))
        for j in range(m + 1):  # j photons of a^dag^m redirected into b
            for k in range(n + 1):  # k photons of b^dag^n redirected into a
                out_a = m - j + k
                out_b = j + n - k
                coeff = comb(m, j) * comb(n, k) * c ** (m - j) * ra ** j * c ** (n - k) * rb ** k
                blk[out_a, m] += coeff * sqrt(factorial(out_a) * factorial(out_b)) / norm_in
    return blk


def _block_truncated(states: list[tuple[int, int]], theta: float, phi: float) -> np.ndarray:
    # generator restricted to the surviving kets of an incomplete photon-number block
    size = len(states)
    g = np.zeros((size, size), dtype=complex)
    pos = {st: i for i, st in enumerate(states)}
    for i, (m, n) in enumerate(states):
        if (m + 1, n - 1) in pos:  # e^{i phi} a^dag b
            g[pos[(m + 1, n - 1)], i] += np.exp(1j * phi) * sqrt((m + 1) * n)
        if (m - 1, n + 1) in pos:  # e^{-i phi} a b^dag
            g[pos[(m - 1, n + 1)], i] += np.exp(-1j * phi) * sqrt(m * (n + 1))
    w, v = np.linalg.eigh(g)
    return (v * np.exp(1j * theta * w)) @ v.conj().T


@lru_cache(maxsize=64)
def _beamsplitter_matrix(theta: float, phi: float, dim: int) -> np.ndarray:
    u = np.zeros((dim * dim, dim * dim), dtype=complex)
    for n_total in range(2 * dim - 1):
        states = [(m, n_total - m) for m in range(dim) if 0 <= n_total - m < dim]
        idx = [m * dim + n for m, n in states]
        if n_total < dim:
            # complete block: kets ordered by m = 0..N, as in the closed form
            blk = _block_closed_form(n_total, theta, phi)
        else:
            blk = _block_truncated(states, theta, phi)
        u[np.ix_(idx, idx)] = blk
    u.setflags(write=False)
    return u


def beamsplitter_unitary(spec: BeamSplitterSpec, dim: int) -> UnitaryOp:
    """Two-mode beam splitter on ``dim x dim`` truncated Fock space.

    Blocks with total photon number ``N < dim`` are exact.  Higher blocks are cut
    by the truncation; on those the truncated generator is exponentiated, which
    keeps the operator unitary and photon-number conserving.
    """
    if dim < 2:
        raise TruncationError("truncation dimension must be at least 2")
    return UnitaryOp(_beamsplitter_matrix(float(spec.theta), float(spec.phi), int(dim)))


def two_mode_generator(dim: int, phi: float = 0.0) -> np.ndarray:
    """``e^{i phi} a^dag b + h.c.`` on truncated modes."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    eye = np.eye(dim)
    ab = np.kron(a.conj().T, eye) @ np.kron(eye, a)
    return np.exp(1j * phi) * ab + np.exp(-1j * phi) * ab.conj().T


def _check_truncation(inp: FockVector, dim: int) -> None:
    need = inp.max_photons() + 1  # input photons plus the ancilla photon
    if need > dim - 1:
        raise TruncationError(
            f"input populates up to {inp.max_photons()} photons; the network then carries "
            f"{need}, which needs truncation dim >= {need + 1} (got {dim})"
        )
    if inp.dim > dim and np.any(inp.amps[dim:]):
        raise TruncationError("input has amplitude beyond the joint truncation")


def _embed(inp: FockVector, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=complex)
    n = min(dim, inp.dim)
    out[:n] = inp.amps[:n]
    return out


def output_distribution(inp: FockVector, spec: BeamSplitterSpec = BeamSplitterSpec(),
                        dim: int = DEFAULT_DIM) -> np.ndarray:
    """Joint amplitudes after both beam splitters, shaped ``(a, b, c)``."""
    _check_truncation(inp, dim)
    return _cached_output(inp.amps.tobytes(), float(spec.theta), float(spec.phi), int(dim))


@lru_cache(maxsize=256)
def _cached_output(key: bytes, theta: float, phi: float, dim: int) -> np.ndarray:
    inp = FockVector(np.frombuffer(key, dtype=complex), normalize=False)
    spec = BeamSplitterSpec(theta, phi)
    psi = core.tensor_all([
        StateVector._trusted(_embed(inp, dim), (dim,)),
        StateVector.basis((dim,), (1,)),
        StateVector.basis((dim,), (0,)),
    ])
    bs = beamsplitter_unitary(spec, dim)
    psi = core.apply_unitary(psi, bs, (1, 2))  # BS2: ancilla photon on b, vacuum on c
    psi = core.apply_unitary(psi, bs, (0, 1))  # BS1: input a with the b output of BS2
    out = psi.as_tensor()
    out.setflags(write=False)
    return out


def herald_probabilities(inp: FockVector, spec: BeamSplitterSpec = BeamSplitterSpec(),
                         dim: int = DEFAULT_DIM) -> dict:
    """Born probability of every detector pattern ``(n1, n2)`` with nonzero weight."""
    joint = output_distribution(inp, spec, dim)
    weights = np.sum(np.abs(joint) ** 2, axis=2)
    total = inp.max_photons() + 1
    return {
        DetectionPattern(n1, n2): float(weights[n1, n2])
        for n1 in range(dim) for n2 in range(dim)
        if n1 + n2 <= total
    }


def success_probability(inp: FockVector, spec: BeamSplitterSpec = BeamSplitterSpec(),
                        dim: int = DEFAULT_DIM) -> float:
    probs = herald_probabilities(inp, spec, dim)
    return sum(probs[DetectionPattern(*p)] for p in SUCCESS_PATTERNS)


def _result(joint: np.ndarray, pattern: DetectionPattern, prob: float, out_dim: int) -> ScissorsResult:
    success = tuple(pattern) in SUCCESS_PATTERNS
    if not success or prob <= 0.0:
        return ScissorsResult(pattern, False, prob)
    bob = joint[pattern.n1, pattern.n2, :]
    if np.any(np.abs(bob[2:]) > 1e-12):
        raise ArithmeticError("single-click herald left more than one photon in Bob's mode")
    out = np.zeros(out_dim, dtype=complex)
    out[:2] = bob[:2]
    return ScissorsResult(pattern, True, prob, FockVector(out), NEEDS_PHASE_FLIP[tuple(pattern)])


def conditional_output(inp: FockVector, pattern, spec: BeamSplitterSpec = BeamSplitterSpec(),
                       dim: int = DEFAULT_DIM) -> ScissorsResult:
    """The result for a forced detector pattern (no sampling)."""
    pattern = DetectionPattern(*pattern)
    joint = output_distribution(inp, spec, dim)
    prob = float(np.sum(np.abs(joint[pattern.n1, pattern.n2, :]) ** 2))
    return _result(joint, pattern, prob, inp.dim)


def scissors_run(inp: FockVector, spec: BeamSplitterSpec = BeamSplitterSpec(),
                 rng: RngStream | None = None, dim: int = DEFAULT_DIM) -> ScissorsResult:
    """One run: sample a detector pattern and return Bob's heralded mode."""
    if rng is None:
        raise ValueError("scissors_run needs an RngStream")
    joint = output_distribution(inp, spec, dim)
    weights = np.sum(np.abs(joint) ** 2, axis=2)
    flat = weights.reshape(-1)
    k = rng.choice_index(flat)
    pattern = DetectionPattern(*divmod(k, dim))
    return _result(joint, pattern, float(flat[k]), inp.dim)
