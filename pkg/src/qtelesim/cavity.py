"""
Atomic-state teleportation heralded by photons leaking from two cavities.

Effective two-level model.  The joint state lives on four qubit-sized
subsystems, big-endian:

    0  Alice's atom   (|g> = 0, |e> = 1)
    1  Alice's cavity (photon number 0 or 1)
    2  Bob's atom
    3  Bob's cavity

During detection the lasers are off and only cavity leakage acts.  The leaked
fields meet on a balanced beam splitter, giving the collapse channels

    D1:  sqrt(kappa) (a_A + a_B) / sqrt(2)
    D2:  sqrt(kappa) (a_A - a_B) / sqrt(2)

and the no-click drift ``exp(-kappa/2 (n_A + n_B) t)``.  ``kappa`` is the
photon-number decay rate of each cavity.

Trajectories use the waiting-time form of the quantum-jump method.  Each
trajectory draws a threshold ``r``, integrates the drift step by step
(first order, renormalizing every step) while accumulating its survival
probability, and jumps once the survival falls to ``r``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec
from scipy.linalg import expm

from . import core
from .core import StateVector
from .rng import RngStream

DIMS = (2, 2, 2, 2)
G, E = 0, 1
DETECTORS = ("D1", "D2")

# Bob's correction per detector, including the constant phase each click imprints
CLICK_CORRECTION = {
    "D1": -1j * core.PAULI_I,
    "D2": 1j * core.PAULI_Z,
}

# uniforms pre-drawn per trajectory: threshold, channel, threshold, channel, ...
_DRAWS = 8

# heralded records holding more photons than this are flagged as window-too-short
RESIDUAL_TOL = 1e-3


class WindowTooShortError(RuntimeError):
    """A heralded record still has photons in the cavities."""


@dataclass(frozen=True)
class AtomQubit:
    c: complex  # amplitude of |g>
    c_e: complex  # amplitude of |e>

    def __post_init__(self):
        n = abs(self.c) ** 2 + abs(self.c_e) ** 2
        if abs(n - 1.0) > core.NORM_TOL:
            raise ValueError(f"|c|^2 + |c'|^2 = {n!r}, expected 1")

    @classmethod
    def normalized(cls, c: complex, c_e: complex) -> "AtomQubit":
        v = StateVector([c, c_e])
        return cls(complex(v.amps[0]), complex(v.amps[1]))

    @classmethod
    def from_state(cls, s: StateVector) -> "AtomQubit":
        return cls(complex(s.amps[0]), complex(s.amps[1]))

    @property
    def vector(self) -> StateVector:
        return StateVector._trusted(np.array([self.c, self.c_e], dtype=complex), (2,))


@dataclass(frozen=True)
class CavityParams:
    kappa: float = 1.0
    g_eff: float = 1.0
    T: float = 10.0
    dt: float = 1e-3

    def __post_init__(self):
        for name in ("kappa", "g_eff", "T", "dt"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.dt > 1e-2 / self.kappa * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} too coarse: need dt <= 1e-2/kappa = {1e-2 / self.kappa}")
        if self.dt > 1e-2 / self.g_eff * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} too coarse: need dt <= 1e-2/g_eff = {1e-2 / self.g_eff}")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class TrajectoryRecord:
    clicks: list
    final_state: StateVector
    success: bool
    max_drift_norm: float = 1.0

    @property
    def detector(self) -> str | None:
        return self.clicks[0][1] if len(self.clicks) == 1 else None


@dataclass(frozen=True)
class ProtocolSummary:
    trials: int
    successes: int
    success_rate: float
    mean_fidelity: float
    histogram: tuple
    bin_edges: tuple
    misheralded: int
    click_counts: dict
    max_drift_norm: float
    conditional_rho: np.ndarray = field(repr=False, compare=False, default=None)
    fidelities: np.ndarray = field(repr=False, compare=False, default=None)


# ---------------------------------------------------------------------------
# preparation pulses

def _raman_hamiltonian(g_eff: float) -> np.ndarray:
    # -g (|g,1><e,0| + h.c.) on (atom, cavity); sign chosen so a pi pulse gives |e0> -> i|g1>
    h = np.zeros((4, 4), dtype=complex)
    e0, g1 = 2 * E + 0, 2 * G + 1
    h[g1, e0] = h[e0, g1] = -g_eff
    return h


def _pulse(state: StateVector, area: float, g_eff: float) -> StateVector:
    if abs(state.amps[2 * E + 1]) > 0:
        raise core.DimensionError("|e,1> would couple to |g,2> outside the one-photon cavity space")
    t = area / (2 * g_eff)
    return core.apply_unitary(state, expm(-1j * t * _raman_hamiltonian(g_eff)), (0, 1))


def map_atom_to_cavity(inp: AtomQubit, params: CavityParams | None = None) -> StateVector:
    """Alice's pi pulse: ``(c|g> + c'|e>)|0>  ->  |g>(c|0> + i c'|1>)``."""
    g_eff = (params or CavityParams()).g_eff
    start = core.tensor(inp.vector, StateVector.basis((2,), (0,)))
    return _pulse(start, np.pi, g_eff)


def prepare_bob_entangled(params: CavityParams | None = None) -> StateVector:
    """Bob's pi/2 pulse from ``|e,0>``: ``(|e,0> + i|g,1>)/sqrt(2)``."""
    g_eff = (params or CavityParams()).g_eff
    return _pulse(StateVector.basis((2, 2), (E, 0)), np.pi / 2, g_eff)


def joint_initial_state(inp: AtomQubit, params: CavityParams | None = None) -> StateVector:
    return core.tensor(map_atom_to_cavity(inp, params), prepare_bob_entangled(params))


# ---------------------------------------------------------------------------
# operators on the 16-dim joint space

def _digits():
    return np.array(np.unravel_index(np.arange(16), DIMS)).T


@lru_cache(maxsize=None)
def photon_number() -> np.ndarray:
    d = _digits()
    return (d[:, 1] + d[:, 3]).astype(float)


@lru_cache(maxsize=None)
def annihilation(mode: int) -> np.ndarray:
    """a_A (mode=1) or a_B (mode=3) as a 16x16 matrix."""
    op = np.zeros((16, 16))
    for src, dig in enumerate(_digits()):
        if dig[mode] == 1:
            out = dig.copy()
            out[mode] = 0
            op[np.ravel_multi_index(tuple(out), DIMS), src] = 1.0
    return op


@lru_cache(maxsize=None)
def jump_operators() -> tuple[np.ndarray, np.ndarray]:
    """Unscaled D1, D2 collapse operators; multiply by sqrt(kappa) for rates."""
    a_a, a_b = annihilation(1), annihilation(3)
    r = 1 / np.sqrt(2)
    return r * (a_a + a_b), r * (a_a - a_b)


def _support(psi0: np.ndarray) -> np.ndarray:
    # drift is diagonal, so the reachable support is closed under the two jumps
    j1, j2 = jump_operators()
    s = set(np.flatnonzero(np.any(psi0 != 0, axis=0)).tolist())
    frontier = set(s)
    while frontier:
        new = set()
        for col in frontier:
            for j in (j1, j2):
                new.update(np.flatnonzero(j[:, col]).tolist())
        frontier = new - s
        s |= new
    return np.array(sorted(s), dtype=int)


def _sparse(op: np.ndarray, support: np.ndarray):
    """(dst, [(src, coeff), ...]) pairs of ``op`` restricted to the support columns."""
    pos = {c: i for i, c in enumerate(support)}
    out = []
    for dst in support:
        terms = [(pos[src], op[dst, src]) for src in support if op[dst, src] != 0]
        out.append((pos[dst], terms))
    return out


def _apply_sparse(rows: np.ndarray, ops) -> np.ndarray:
    out = np.zeros_like(rows)
    for dst, terms in ops:
        for src, coeff in terms:
            out[:, dst] = out[:, dst] + coeff * rows[:, src]
    return out


def _rowsum(x: np.ndarray) -> np.ndarray:
    # fixed left-to-right order so every row's result is independent of batch shape
    acc = x[:, 0].copy()
    for j in range(1, x.shape[1]):
        acc = acc + x[:, j]
    return acc


def _abs2(x: np.ndarray) -> np.ndarray:
    return x.real * x.real + x.imag * x.imag


def trajectory_uniforms(stream: RngStream) -> np.ndarray:
    return stream.random(_DRAWS)


def evolve_batch(psi0: np.ndarray, params: CavityParams, uniforms: np.ndarray):
    """Run ``len(psi0)`` trajectories in lockstep.

    ``psi0`` has shape (B, 16); ``uniforms`` has shape (B, _DRAWS) and holds each
    trajectory's own random numbers.  Returns (final states, clicks per row,
    channel/time arrays, max pre-renormalization norm over all drift steps).
    """
    psi0 = np.asarray(psi0, dtype=complex)
    batch = psi0.shape[0]
    support = _support(psi0)
    psi = psi0[:, support].copy()
    j1, j2 = jump_operators()
    jumps = (_sparse(j1, support), _sparse(j2, support))
    drift = 1.0 - 0.5 * params.kappa * params.dt * photon_number()[support]
    survival = np.ones(batch)
    draw = np.zeros(batch, dtype=int)
    threshold = uniforms[:, 0].copy()
    draw[:] = 1
    n_clicks = np.zeros(batch, dtype=int)
    click_t = np.full((batch, 3), np.nan)
    click_d = np.full((batch, 3), -1, dtype=int)
    max_norm = 0.0
    for step in range(params.steps):
        psi = psi * drift
        p = _rowsum(_abs2(psi))
        step_max = float(p.max())
        if step_max > 1.0 + 1e-9:
            raise ArithmeticError(f"no-click drift increased the norm to {step_max!r}; dt too coarse")
        max_norm = max(max_norm, step_max)
        psi = psi / np.sqrt(p)[:, None]
        survival = survival * p
        hit = np.flatnonzero(survival <= threshold)
        if hit.size == 0:
            continue
        rows = psi[hit]
        after = [_apply_sparse(rows, ops) for ops in jumps]
        w = [_rowsum(_abs2(x)) for x in after]
        wsum = w[0] + w[1]
        live = wsum > 0
        hit, rows, after, w, wsum = hit[live], rows[live], [x[live] for x in after], \
            [x[live] for x in w], wsum[live]
        if hit.size == 0:
            continue
        u = uniforms[hit, draw[hit]]
        which = (u * wsum >= w[0]).astype(int)
        new = np.where(which[:, None] == 0, after[0], after[1])
        norms = np.where(which == 0, w[0], w[1])
        psi[hit] = new / np.sqrt(norms)[:, None]
        slot = n_clicks[hit]
        if np.any(slot >= 2):
            raise ArithmeticError("more than two clicks from at most two photons")
        click_t[hit, slot] = (step + 1) * params.dt
        click_d[hit, slot] = which
        n_clicks[hit] += 1
        draw[hit] += 1
        threshold[hit] = uniforms[hit, draw[hit]]
        draw[hit] += 1
        survival[hit] = 1.0
    full = np.zeros((batch, 16), dtype=complex)
    full[:, support] = psi
    return full, n_clicks, click_t, click_d, max_norm


def _records(full, n_clicks, click_t, click_d, max_norm) -> list[TrajectoryRecord]:
    out = []
    for i in range(full.shape[0]):
        clicks = [(float(click_t[i, k]), DETECTORS[click_d[i, k]]) for k in range(n_clicks[i])]
        out.append(TrajectoryRecord(clicks, StateVector._trusted(full[i], DIMS),
                                    bool(n_clicks[i] == 1), max_norm))
    return out


def evolve_heralded(joint: StateVector, params: CavityParams, rng: RngStream) -> TrajectoryRecord:
    """One quantum-jump trajectory over the detection window ``[0, T]``."""
    if joint.dims != DIMS:
        raise core.DimensionError(f"expected joint layout {DIMS}, got {joint.dims}")
    u = trajectory_uniforms(rng)[None, :]
    return _records(*evolve_batch(joint.amps[None, :], params, u))[0]


def evolve_many(joints, params: CavityParams, streams) -> list[TrajectoryRecord]:
    """Batched :func:`evolve_heralded`; ``joints`` is one state or one per stream."""
    streams = list(streams)
    if isinstance(joints, StateVector):
        joints = [joints] * len(streams)
    psi0 = np.array([j.amps for j in joints])
    uni = np.array([trajectory_uniforms(s) for s in streams])
    return _records(*evolve_batch(psi0, params, uni))


# ---------------------------------------------------------------------------
# heralding

def residual_photons(state: StateVector) -> float:
    return float(np.sum(photon_number() * np.abs(state.amps) ** 2))


def _bob_density(state: StateVector, detector: str) -> np.ndarray:
    rho = core.reduced_density(state, (2,)).matrix
    u = CLICK_CORRECTION[detector]
    return u @ rho @ u.conj().T


def herald_and_correct(record: TrajectoryRecord, *, strict: bool = True,
                       photon_tol: float = RESIDUAL_TOL) -> tuple[AtomQubit | None, bool]:
    """Bob's corrected atom for a single-click record, or ``(None, False)``.

    With ``strict`` a heralded record that still holds more than ``photon_tol``
    photons raises :class:`WindowTooShortError`.  Otherwise Bob's atom is taken
    from its reduced state (dominant eigenvector) and may be imperfect.
    """
    if not record.success:
        return None, False
    state = record.final_state
    det = record.detector
    leftover = residual_photons(state)
    if leftover <= photon_tol:
        vac = np.zeros(8, dtype=complex)  # |g>_A |0>_A |0>_B in the (0, 1, 3) order
        vac[0] = 1.0
        bob = core.project_out(state, vac, (0, 1, 3))
        fixed = CLICK_CORRECTION[det] @ bob.amps
        return AtomQubit.normalized(*fixed), True
    if strict:
        raise WindowTooShortError(
            f"heralded record still holds {leftover:.3e} photons; lengthen the detection window"
        )
    w, v = np.linalg.eigh(_bob_density(state, det))
    return AtomQubit.normalized(*v[:, -1]), True


def conditional_fidelity(record: TrajectoryRecord, inp: AtomQubit) -> float:
    """<in| rho_Bob |in> after correction; exact even for imperfect heralds."""
    if not record.success:
        return 0.0
    v = inp.vector.amps
    rho = _bob_density(record.final_state, record.detector)
    return float(np.clip(np.real(v.conj() @ rho @ v), 0.0, 1.0))


# ---------------------------------------------------------------------------
# ensembles

def simulate(inputs: list[AtomQubit], params: CavityParams, streams: list[RngStream]):
    """Trajectories for paired (input, stream) lists; returns per-trial arrays."""
    psi0 = np.array([joint_initial_state(x, params).amps for x in inputs])
    uni = np.array([trajectory_uniforms(s) for s in streams])
    full, n_clicks, click_t, click_d, max_norm = evolve_batch(psi0, params, uni)
    recs = _records(full, n_clicks, click_t, click_d, max_norm)
    fid = np.array([conditional_fidelity(r, x) for r, x in zip(recs, inputs)])
    rhos = np.array([_bob_density(r.final_state, r.detector) if r.success else np.zeros((2, 2))
                     for r in recs])
    leftover = np.array([residual_photons(r.final_state) for r in recs])
    return {
        "success": n_clicks == 1,
        "clicks": n_clicks,
        "detector": click_d[:, 0],
        "first_click": click_t[:, 0],
        "fidelity": fid,
        "residual": leftover,
        "bob_rho": rhos,
        "max_drift_norm": max_norm,
    }


def _chunk_worker(args):
    inp, params, seed, path, start, stop = args
    base = RngStream(seed, path)
    streams = [base.substream(i) for i in range(start, stop)]
    return simulate([inp] * (stop - start), params, streams)


def _merge(parts: list[dict]) -> dict:
    out = {k: np.concatenate([p[k] for p in parts]) for k in parts[0] if k != "max_drift_norm"}
    out["max_drift_norm"] = max(p["max_drift_norm"] for p in parts)
    return out


def run_protocol(inp: AtomQubit, params: CavityParams, trials: int, rng: RngStream,
                 *, workers: int = 1, chunk: int = 2048, bins: int = 20) -> ProtocolSummary:
    """Map, prepare, evolve and herald ``trials`` times; trial ``i`` uses ``rng.substream(i)``."""
    from .parallel import map_ordered

    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(inp, params, rng.seed, rng.path, s, min(s + chunk, trials))
            for s in range(0, trials, chunk)]
    res = _merge(map_ordered(_chunk_worker, jobs, workers))
    ok = res["success"]
    fid = res["fidelity"][ok]
    hist, edges = np.histogram(fid, bins=bins, range=(0.0, 1.0))
    counts = {n: int(np.sum(res["clicks"] == n)) for n in (0, 1, 2)}
    return ProtocolSummary(
        trials=trials,
        successes=int(ok.sum()),
        success_rate=float(ok.mean()),
        mean_fidelity=float(fid.mean()) if fid.size else float("nan"),
        histogram=tuple(int(h) for h in hist),
        bin_edges=tuple(float(e) for e in edges),
        misheralded=int(np.sum(res["residual"][ok] > RESIDUAL_TOL)),
        click_counts=counts,
        max_drift_norm=float(res["max_drift_norm"]),
        conditional_rho=res["bob_rho"][ok].mean(axis=0) if ok.any() else None,
        fidelities=fid,
    )


# ---------------------------------------------------------------------------
# direct single-click integration, independent of the trajectory sampler

def single_click_oracle(inp: AtomQubit, params: CavityParams, *, epsabs: float = 1e-12):
    """Exact heralding statistics from ``e^{-K(T-t)} J e^{-K t} psi0`` integrated over ``t``.

    Returns ``(success probability, corrected conditional density matrix of Bob's
    atom, mean conditional fidelity)``.  Uses exact exponentials, not the
    stepped drift.
    """
    psi0 = joint_initial_state(inp, params).amps
    rate = 0.5 * params.kappa * photon_number()
    js = [np.sqrt(params.kappa) * j for j in jump_operators()]
    T = params.T

    def integrand(t):
        out = np.zeros(4, dtype=complex)
        for det, j in zip(DETECTORS, js):
            phi = np.exp(-rate * (T - t)) * (j @ (np.exp(-rate * t) * psi0))
            m = phi.reshape(2, 2, 2, 2).transpose(2, 0, 1, 3).reshape(2, -1)
            rho = m @ m.conj().T
            u = CLICK_CORRECTION[det]
            out += (u @ rho @ u.conj().T).reshape(-1)
        return np.concatenate([out.real, out.imag])

    val, _ = quad_vec(integrand, 0.0, T, epsabs=epsabs, epsrel=1e-12)
    rho = (val[:4] + 1j * val[4:]).reshape(2, 2)
    p = float(np.real(np.trace(rho)))
    rho = rho / p
    v = inp.vector.amps
    return p, rho, float(np.real(v.conj() @ rho @ v))
