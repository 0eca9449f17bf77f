"""Acceptance checks, one per criterion, shared by ``qtelesim selftest`` and pytest.

Each check returns a :class:`CheckResult`; tolerances are fixed here.
"""
from __future__ import annotations

import contextlib
import io
import sys
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.linalg import expm, sqrtm

from . import cavity, core, scissors, swap, teleport
from .rng import RngStream
from .teleport import BellOutcome, QubitState

SEED = 20021101


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _random_qubits(n: int, seed: int) -> list[QubitState]:
    base = RngStream(seed)
    return [QubitState.random(base.substream(i)) for i in range(n)]


def check_bell_basis():
    vecs = np.array([b.amps for b in teleport.bell_basis()])
    err = np.max(np.abs(vecs.conj() @ vecs.T - np.eye(4)))
    return err <= 1e-12, f"max |Gram - I| = {err:.2e} (tol 1e-12)"


def check_teleport_exactness():
    worst = 0.0
    for q in _random_qubits(1000, SEED):
        for k in BellOutcome:
            r = teleport.teleport(q, outcome=k)
            worst = max(worst, np.max(np.abs(r.bob_state.vector.amps - q.vector.amps)))
    return worst <= 1e-10, f"4000 branches, max amplitude error {worst:.2e} (tol 1e-10)"


def check_bsm_uniformity():
    worst = 0.0
    for q in _random_qubits(1000, SEED + 1):
        worst = max(worst, np.max(np.abs(teleport.outcome_probabilities(q) - 0.25)))
    n = 100_000
    base = RngStream(SEED + 2)
    q = QubitState.normalized(0.6, 0.8j)
    psi = teleport.initial_state(q)
    basis = teleport.bell_basis()
    counts = np.zeros(4, dtype=int)
    for i in range(n):
        k, _, _ = core.measure_projective(psi, basis, (0, 1), base.substream(i))
        counts[k] += 1
    pval = stats.chisquare(counts, np.full(4, n / 4)).pvalue
    ok = worst <= 1e-12 and pval >= 1e-3
    return ok, (f"max |p - 1/4| = {worst:.2e} (tol 1e-12); {n} samples {counts.tolist()}, "
                f"chi-square p = {pval:.3f} (need >= 0.001)")


def check_no_signaling():
    worst = 0.0
    for q in _random_qubits(100, SEED + 3):
        rho = teleport.bob_premessage_density(q).matrix
        worst = max(worst, np.max(np.abs(rho - np.eye(2) / 2)))
    return worst <= 1e-10, f"max |rho_Bob - I/2| = {worst:.2e} over 100 inputs (tol 1e-10)"


@lru_cache(maxsize=8)
def _three_mode_network(dim: int, theta: float = np.pi / 4) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    eye = np.eye(dim)
    mode = [np.kron(np.kron(a if k == 0 else eye, a if k == 1 else eye), a if k == 2 else eye)
            for k in range(3)]

    def bs(i, j):
        gen = mode[i].T @ mode[j] + mode[i] @ mode[j].T
        return expm(1j * theta * gen)

    return bs(0, 1) @ bs(1, 2)


def scissors_bruteforce(amps, dim: int = scissors.DEFAULT_DIM):
    """Pattern -> (probability, Bob amplitudes) from full three-mode matrix exponentials."""
    psi = np.kron(np.kron(np.pad(np.asarray(amps, complex), (0, dim - len(amps))),
                          np.eye(dim)[1]), np.eye(dim)[0])
    out = (_three_mode_network(dim) @ psi).reshape(dim, dim, dim)
    return {p: (float(np.sum(np.abs(out[p]) ** 2)), out[p]) for p in scissors.SUCCESS_PATTERNS}


def _random_fock(n: int, stream: RngStream) -> np.ndarray:
    z = stream.generator.standard_normal((2, n))
    v = z[0] + 1j * z[1]
    return v / np.linalg.norm(v)


def check_scissors_herald():
    base = RngStream(SEED + 4)
    worst_law = worst_brute = 0.0
    for i in range(60):
        s = base.substream(i)
        d = 2 + i % 5  # input dims 2..6
        amps = _random_fock(d, s)
        inp = scissors.FockVector(amps)
        probs = scissors.herald_probabilities(inp)
        brute = scissors_bruteforce(amps)
        law = (abs(amps[0]) ** 2 + abs(amps[1]) ** 2) / 4
        for p in scissors.SUCCESS_PATTERNS:
            got = probs[scissors.DetectionPattern(*p)]
            worst_law = max(worst_law, abs(got - law))
            worst_brute = max(worst_brute, abs(got - brute[p][0]))
    qubit_worst = 0.0
    for i in range(100):
        inp = scissors.FockVector(_random_fock(2, base.substream(1000 + i)))
        qubit_worst = max(qubit_worst, abs(scissors.success_probability(inp) - 0.5))
    n = 100_000
    q = scissors.FockVector([0.6, 0.8j])
    sample = RngStream(SEED + 5)
    hits = sum(scissors.scissors_run(q, rng=sample.substream(i)).success for i in range(n))
    rate = hits / n
    ok = worst_law <= 1e-10 and worst_brute <= 1e-10 and qubit_worst <= 1e-12 and abs(rate - 0.5) <= 0.01
    return ok, (f"law err {worst_law:.1e}, brute-force err {worst_brute:.1e} (tol 1e-10); "
                f"qubit total |P-1/2| {qubit_worst:.1e}; sampled rate {rate:.4f} over {n} (0.5 +- 0.01)")


def check_scissors_truncation():
    base = RngStream(SEED + 6)
    worst = 0.0
    for i in range(60):
        d = 2 + i % 5
        amps = _random_fock(d, base.substream(i))
        inp = scissors.FockVector(amps)
        trunc = inp.truncated().amps
        flipped = trunc * np.where(np.arange(d) % 2, -1, 1)
        expect = {(1, 0): scissors.PATTERN_PHASE[(1, 0)] * trunc,
                  (0, 1): scissors.PATTERN_PHASE[(0, 1)] * flipped}
        for p, want in expect.items():
            r = scissors.conditional_output(inp, p)
            worst = max(worst, np.max(np.abs(r.output.amps - want)))
            worst = max(worst, np.max(np.abs(r.corrected().amps - trunc)))
    return worst <= 1e-10, f"max amplitude error {worst:.2e} over 60 inputs x 2 patterns (tol 1e-10)"


def check_swapping():
    worst_f = worst_rho = 0.0
    for p14 in BellOutcome:
        for p23 in BellOutcome:
            for k in BellOutcome:
                r = swap.swap(p14, p23, outcome=k)
                worst_f = max(worst_f, 1 - r.bell_fidelity)
                for q in (0, 1):
                    rho = core.reduced_density(r.pair34_state, (q,)).matrix
                    worst_rho = max(worst_rho, np.max(np.abs(rho - np.eye(2) / 2)))
    ok = worst_f <= 1e-10 and worst_rho <= 1e-10
    return ok, f"64 cases: max 1 - F_Bell = {worst_f:.1e}, max |rho - I/2| = {worst_rho:.1e} (tol 1e-10)"


def _uhlmann(rho, sigma) -> float:
    r = sqrtm(rho)
    return float(np.real(np.trace(sqrtm(r @ sigma @ r))) ** 2)


def check_cavity():
    params = cavity.CavityParams(kappa=1.0, T=10.0, dt=1e-3)
    inp = cavity.AtomQubit.normalized(1, 1)
    summary = cavity.run_protocol(inp, params, 10_000, RngStream(SEED + 7))
    p_or, rho_or, f_or = cavity.single_click_oracle(inp, params)
    ens_f = _uhlmann(summary.conditional_rho, rho_or)
    ok = (abs(summary.success_rate - 0.5) <= 0.02 and summary.mean_fidelity >= 0.99
          and abs(summary.mean_fidelity - f_or) <= 1e-3 and ens_f >= 1 - 1e-3)
    return ok, (f"success {summary.success_rate:.4f} (0.5 +- 0.02; oracle {p_or:.6f}); "
                f"mean F {summary.mean_fidelity:.6f} (>= 0.99; oracle {f_or:.6f}); "
                f"F(rho_ens, rho_oracle) = {ens_f:.8f} (>= 1 - 1e-3)")


def check_oracle_equivalence():
    worst = 0.0
    rng = RngStream(SEED + 8)
    for d in range(2, 7):
        for i in range(4):
            theta, phi = (np.pi / 4, 0.0) if i == 0 else tuple(rng.substream(10 * d + i).random(2) * 2 * np.pi)
            u = scissors.beamsplitter_unitary(scissors.BeamSplitterSpec(theta, phi), d).matrix
            ref = expm(1j * theta * scissors.two_mode_generator(d, phi))
            worst = max(worst, np.max(np.abs(u - ref)))
    params = cavity.CavityParams()
    summary = cavity.run_protocol(cavity.AtomQubit.normalized(0.3, 0.9j), params, 2000, RngStream(SEED + 9))
    excess = summary.max_drift_norm - 1.0
    ok = worst <= 1e-10 and excess <= 1e-9
    return ok, (f"max |U_bs - expm| = {worst:.1e} for d <= 6 (tol 1e-10); "
                f"max drift-step norm^2 - 1 = {excess:.1e} (tol 1e-9)")


_DETERMINISM_RUNS = [
    ["teleport", "--trials", "300", "--seed", "11"],
    ["swap", "--trials", "300", "--seed", "12", "--pair14", "random", "--pair23", "random"],
    ["scissors", "--trials", "300", "--seed", "13", "--input-dim", "4"],
    ["cavity", "--trials", "96", "--seed", "14", "--T", "4"],
]


def check_determinism():
    from .cli import main

    bad = []
    for argv in _DETERMINISM_RUNS:
        outputs = []
        for workers in (1, 4, 8):
            buf = io.StringIO()
            with contextlib.redirect_stdout(buf):
                code = main(argv + ["--workers", str(workers)], environ={})
            outputs.append((code, buf.getvalue().encode("utf-8")))
        if any(o != outputs[0] for o in outputs) or outputs[0][0] != 0:
            bad.append(argv[0])
    return not bad, ("byte-identical at workers 1, 4, 8 for " + ", ".join(a[0] for a in _DETERMINISM_RUNS)
                     if not bad else f"outputs differ for {bad}")


CHECKS = [
    (1, "bell basis orthonormal", check_bell_basis),
    (2, "teleportation exactness", check_teleport_exactness),
    (3, "BSM uniformity", check_bsm_uniformity),
    (4, "no-signaling", check_no_signaling),
    (5, "scissors herald law", check_scissors_herald),
    (6, "scissors truncation", check_scissors_truncation),
    (7, "entanglement swapping", check_swapping),
    (8, "cavity protocol", check_cavity),
    (9, "oracle equivalence", check_oracle_equivalence),
    (10, "determinism", check_determinism),
]


def run_check(number: int) -> CheckResult:
    num, name, fn = next(c for c in CHECKS if c[0] == number)
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failed criterion, reported like one
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CheckResult(num, name, bool(ok), detail, time.perf_counter() - t0)


def run_all(only=None, stream=sys.stdout) -> list[CheckResult]:
    results = []
    for num, _, _ in CHECKS:
        if only and num not in only:
            continue
        r = run_check(num)
        results.append(r)
        if stream is not None:
            print(r.line(), file=stream, flush=True)
    return results
