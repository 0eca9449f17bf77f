"""Entanglement swapping: a Bell measurement on one qubit of each of two pairs.

Qubits 1..4 sit at subsystem indices 0..3.  Pairs are (1, 4) and (2, 3); the
Bell measurement acts on qubits 1 and 2 and leaves qubits 3 and 4 entangled.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import core
from .core import StateVector
from .rng import RngStream
from .teleport import BellOutcome, bell_basis, bell_state, correction


@dataclass(frozen=True)
class SwapResult:
    outcome: BellOutcome
    probability: float
    pair34_state: StateVector
    bell_label: BellOutcome
    bell_fidelity: float
    entanglement_check: float


def initial_state(pair14, pair23) -> StateVector:
    """Four-qubit product of the two pairs, reordered to qubits (1, 2, 3, 4)."""
    p14 = bell_state(pair14)
    p23 = bell_state(pair23)
    # tensor order is (1, 4, 2, 3)
    return core.permute(core.tensor(p14, p23), (0, 2, 3, 1))


def outcome_probabilities(pair14, pair23) -> np.ndarray:
    return core.born_probabilities(initial_state(pair14, pair23), bell_basis(), (0, 1))


def closest_bell(s: StateVector) -> tuple[BellOutcome, float]:
    fids = [core.fidelity(s, b) for b in bell_basis()]
    k = int(np.argmax(fids))
    return BellOutcome(k), fids[k]


def swap(pair14, pair23, rng: RngStream | None = None, *, outcome=None) -> SwapResult:
    pair14, pair23 = BellOutcome.parse(pair14), BellOutcome.parse(pair23)
    psi = initial_state(pair14, pair23)
    basis = bell_basis()
    if outcome is None:
        if rng is None:
            raise ValueError("either rng or a forced outcome is required")
        k, p, post = core.measure_projective(psi, basis, (0, 1), rng)
        measured = BellOutcome(k)
    else:
        measured = BellOutcome.parse(outcome)
        p, post = core.project(psi, basis[measured.value], (0, 1))
    pair34 = core.project_out(post, basis[measured.value], (0, 1))
    label, fid = closest_bell(pair34)
    lam = core.reduced_density(pair34, (0,)).eigenvalues().max()
    return SwapResult(measured, p, pair34, label, fid, float(lam))


@lru_cache(maxsize=None)
def swap_table(pair14, pair23) -> dict:
    """Outcome -> Bell label of the (3, 4) pair."""
    pair14, pair23 = BellOutcome.parse(pair14), BellOutcome.parse(pair23)
    return {k: swap(pair14, pair23, outcome=k).bell_label for k in BellOutcome}


def swap_as_teleport_check(pair14, pair23) -> bool:
    """Both readings of swapping as teleportation hold for every outcome.

    Correcting qubit 3 with one of the four teleportation unitaries must turn
    the (3, 4) pair into the original (1, 4) Bell state, with qubit 3 standing in
    for qubit 1.  Correcting qubit 4 must likewise restore the (2, 3) Bell state
    with qubit 4 standing in for qubit 2.
    """
    pair14, pair23 = BellOutcome.parse(pair14), BellOutcome.parse(pair23)
    fixes = [correction(k).matrix for k in BellOutcome]
    target14 = bell_state(pair14)
    target23 = core.permute(bell_state(pair23), (1, 0))  # as (qubit 3, qubit 4)
    for k in BellOutcome:
        s = swap(pair14, pair23, outcome=k).pair34_state
        via3 = any(core.fidelity(core.apply_unitary(s, u, (0,)), target14) > 1 - 1e-10 for u in fixes)
        via4 = any(core.fidelity(core.apply_unitary(s, u, (1,)), target23) > 1 - 1e-10 for u in fixes)
        if not (via3 and via4):
            return False
    return True
