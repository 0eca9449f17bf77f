"""
Batch experiments: configuration, seeded trial runners, summaries and reports.

Config text is flat ``key = value`` lines, UTF-8, ``#`` starts a comment.
Environment variables ``QTELESIM_<KEY>`` (e.g. ``QTELESIM_SEED=7``) override
the file, and explicit command-line flags override both.

Trial ``i`` of every run draws from ``RngStream(seed).substream(i)``: its
substream 0 picks a random input when one is requested, and substream 1 drives
the measurement or trajectory.  Results are therefore independent of how
trials are split across workers.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import cavity, scissors, swap, teleport
from .core import StateVector
from .parallel import map_ordered
from .rng import RngStream

SCHEMA_VERSION = 1
ENV_PREFIX = "QTELESIM_"
PROTOCOLS = ("teleport", "swap", "scissors", "cavity")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending key."""


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    trials: int = 1000
    seed: int = 0
    input: tuple | str = "random"
    workers: int = 1
    # teleport
    shared: str = "A"
    # swap
    pair14: str = "A"
    pair23: str = "A"
    # scissors
    dim: int = scissors.DEFAULT_DIM
    input_dim: int = 2
    theta: float = math.pi / 4
    phi: float = 0.0
    # cavity
    kappa: float = 1.0
    g_eff: float = 1.0
    T: float = 10.0
    dt: float = 1e-3
    notices: tuple = field(default=(), compare=False)

    @property
    def cavity_params(self) -> cavity.CavityParams:
        return cavity.CavityParams(self.kappa, self.g_eff, self.T, self.dt)

    @property
    def splitter(self) -> scissors.BeamSplitterSpec:
        return scissors.BeamSplitterSpec(self.theta, self.phi)


_COMMON = {"protocol", "trials", "seed", "workers"}
_KEYS = {
    "teleport": _COMMON | {"input", "shared"},
    "swap": _COMMON | {"pair14", "pair23"},
    "scissors": _COMMON | {"input", "input_dim", "dim", "theta", "phi"},
    "cavity": _COMMON | {"input", "kappa", "g_eff", "T", "dt"},
}
_ALL_KEYS = {f.name for f in fields(ExperimentConfig)} - {"notices"}


def _parse_amplitudes(key: str, text: str):
    text = text.strip()
    if text.lower() == "random":
        return "random"
    try:
        amps = tuple(complex(part.strip().replace(" ", "")) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"{key}: cannot parse amplitudes {text!r}; use e.g. '1, 1j' or 'random'") from None
    return amps


def _coerce(key: str, raw):
    if key == "protocol":
        return str(raw).strip().lower()
    if key == "input":
        return _parse_amplitudes(key, raw) if isinstance(raw, str) else raw
    if key in ("shared", "pair14", "pair23"):
        v = str(raw).strip()
        return v.lower() if v.lower() == "random" else v.upper()
    if key in ("trials", "seed", "workers", "dim", "input_dim"):
        try:
            return int(str(raw).strip(), 0)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    try:
        return float(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def parse_pairs(text: str) -> dict:
    """Flat ``key=value`` text to a dict of raw strings."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):]
            out[key if key == "T" else key.lower()] = value
    return out


def build_config(values: dict) -> ExperimentConfig:
    """Validate raw key/value pairs into a config."""
    values = dict(values)
    protocol = _coerce("protocol", values.get("protocol", ""))
    if protocol not in PROTOCOLS:
        raise ConfigError(f"protocol: unknown protocol {values.get('protocol')!r}; expected one of {PROTOCOLS}")
    for key in values:
        if key not in _ALL_KEYS:
            raise ConfigError(f"{key}: unknown key")
        if key not in _KEYS[protocol]:
            raise ConfigError(f"{key}: not a parameter of protocol {protocol!r}")
    typed = {k: _coerce(k, v) for k, v in values.items()}
    typed["protocol"] = protocol
    cfg = ExperimentConfig(**typed)
    return _validate(cfg)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    values = parse_pairs(text)
    values.update(overrides or {})
    return build_config(values)


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    notices = []
    if cfg.trials < 1:
        raise ConfigError(f"trials: must be a positive integer, got {cfg.trials}")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError(f"seed: must fit in 64 unsigned bits, got {cfg.seed}")
    if cfg.workers < 1:
        raise ConfigError(f"workers: must be >= 1, got {cfg.workers}")
    for key in ("shared", "pair14", "pair23"):
        v = getattr(cfg, key)
        if v != "random" and v not in ("A", "B", "C", "D"):
            raise ConfigError(f"{key}: expected a Bell label A-D or 'random', got {v!r}")
    if cfg.protocol == "teleport" and cfg.shared == "random":
        raise ConfigError("shared: the shared pair must be a fixed label")
    inp = cfg.input
    if inp != "random":
        want = {"teleport": 2, "cavity": 2}.get(cfg.protocol)
        if want is not None and len(inp) != want:
            raise ConfigError(f"input: {cfg.protocol} needs exactly {want} amplitudes, got {len(inp)}")
        if cfg.protocol == "scissors" and len(inp) < 2:
            raise ConfigError("input: scissors needs at least 2 Fock amplitudes")
        norm = math.sqrt(sum(abs(a) ** 2 for a in inp))
        if norm == 0 or not math.isfinite(norm):
            raise ConfigError("input: amplitudes are not normalizable")
        if abs(norm - 1.0) > 1e-12:
            inp = tuple(a / norm for a in inp)
            notices.append(f"input: normalized amplitudes by 1/{norm:.12g}")
    if cfg.protocol == "scissors":
        if cfg.dim < 2:
            raise ConfigError(f"dim: truncation must be >= 2, got {cfg.dim}")
        if cfg.input_dim < 2:
            raise ConfigError(f"input_dim: must be >= 2, got {cfg.input_dim}")
        n_in = len(inp) if inp != "random" else cfg.input_dim
        if n_in + 1 > cfg.dim:
            raise ConfigError(
                f"dim: truncation {cfg.dim} cannot carry a {n_in}-level input plus the ancilla photon "
                f"(need dim >= {n_in + 1})"
            )
    if cfg.protocol == "cavity":
        try:
            cfg.cavity_params
        except ValueError as exc:
            raise ConfigError(f"cavity parameters: {exc}") from None
    return replace(cfg, input=inp, notices=tuple(notices))


# ---------------------------------------------------------------------------
# records and trial runners

@dataclass(frozen=True)
class RunRecord:
    trial: int
    outcome: str
    success: bool
    fidelity: float
    probability: float
    aux: tuple = ()

    def items(self):
        yield "schema", SCHEMA_VERSION
        yield "trial", self.trial
        yield "outcome", self.outcome
        yield "success", int(self.success)
        yield "fidelity", self.fidelity
        yield "probability", self.probability
        yield from self.aux


def _random_amps(stream: RngStream, n: int) -> np.ndarray:
    z = stream.generator.standard_normal((2, n))
    return StateVector(z[0] + 1j * z[1]).amps


def _teleport_trials(cfg: ExperimentConfig, start: int, stop: int) -> list[RunRecord]:
    base = RngStream(cfg.seed)
    out = []
    for i in range(start, stop):
        s = base.substream(i)
        amps = _random_amps(s.substream(0), 2) if cfg.input == "random" else cfg.input
        state = teleport.QubitState(*amps)
        r = teleport.teleport(state, s.substream(1), shared=cfg.shared)
        ok = teleport.core.amplitudes_close(r.bob_state.vector, state.vector)
        out.append(RunRecord(i, r.outcome.name, ok, r.fidelity, r.probability,
                             (("bits", r.bits),)))
    return out


def _swap_trials(cfg: ExperimentConfig, start: int, stop: int) -> list[RunRecord]:
    base = RngStream(cfg.seed)
    labels = "ABCD"
    out = []
    for i in range(start, stop):
        s = base.substream(i)
        pick = s.substream(0)
        p14 = labels[int(pick.random() * 4)] if cfg.pair14 == "random" else cfg.pair14
        p23 = labels[int(pick.random() * 4)] if cfg.pair23 == "random" else cfg.pair23
        r = swap.swap(p14, p23, s.substream(1))
        ok = r.bell_fidelity > 1 - 1e-10 and abs(r.entanglement_check - 0.5) < 1e-10
        out.append(RunRecord(i, r.outcome.name, ok, r.bell_fidelity, r.probability, (
            ("pair14", p14), ("pair23", p23), ("pair34", r.bell_label.name),
            ("max_eigenvalue", r.entanglement_check),
        )))
    return out


def _scissors_trials(cfg: ExperimentConfig, start: int, stop: int) -> list[RunRecord]:
    base = RngStream(cfg.seed)
    out = []
    for i in range(start, stop):
        s = base.substream(i)
        amps = _random_amps(s.substream(0), cfg.input_dim) if cfg.input == "random" else cfg.input
        inp = scissors.FockVector(amps)
        r = scissors.scissors_run(inp, cfg.splitter, s.substream(1), cfg.dim)
        fid = 0.0
        if r.success:
            fid = teleport.core.fidelity(r.corrected().state, inp.truncated().state)
        out.append(RunRecord(i, f"{r.pattern.n1}:{r.pattern.n2}", r.success, fid,
                             r.herald_probability, (("phase_flip", int(r.needs_phase_flip)),)))
    return out


def _cavity_trials(cfg: ExperimentConfig, start: int, stop: int) -> list[RunRecord]:
    base = RngStream(cfg.seed)
    inputs, streams = [], []
    for i in range(start, stop):
        s = base.substream(i)
        amps = _random_amps(s.substream(0), 2) if cfg.input == "random" else cfg.input
        inputs.append(cavity.AtomQubit(*amps))
        streams.append(s.substream(1))
    res = cavity.simulate(inputs, cfg.cavity_params, streams)
    out = []
    for j, i in enumerate(range(start, stop)):
        n = int(res["clicks"][j])
        det = cavity.DETECTORS[res["detector"][j]] if n == 1 else ("none" if n == 0 else "both")
        out.append(RunRecord(i, det, bool(res["success"][j]), float(res["fidelity"][j]), float("nan"), (
            ("clicks", n),
            ("first_click", float(res["first_click"][j])),
            ("residual_photons", float(res["residual"][j])),
        )))
    return out


_RUNNERS = {
    "teleport": _teleport_trials,
    "swap": _swap_trials,
    "scissors": _scissors_trials,
    "cavity": _cavity_trials,
}


def _job(args):
    cfg, start, stop = args
    try:
        return _RUNNERS[cfg.protocol](cfg, start, stop)
    except Exception as exc:  # attach the chunk so the failing trial can be found
        raise RuntimeError(f"trials {start}..{stop - 1}: {type(exc).__name__}: {exc}") from exc


def chunks(trials: int, workers: int, cap: int = 2048) -> list[tuple[int, int]]:
    size = min(cap, max(1, math.ceil(trials / workers)))
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def run_experiment(cfg: ExperimentConfig, workers: int | None = None):
    """Run every trial; returns ``(records in trial order, summary dict)``."""
    workers = cfg.workers if workers is None else workers
    t0 = time.perf_counter()
    jobs = [(cfg, a, b) for a, b in chunks(cfg.trials, workers)]
    records = [r for part in map_ordered(_job, jobs, workers) for r in part]
    summary = summarize(cfg, records)
    summary["wall_clock_s"] = time.perf_counter() - t0
    return records, summary


def _outcome_labels(protocol: str) -> list[str]:
    return {
        "teleport": ["A", "B", "C", "D"],
        "swap": ["A", "B", "C", "D"],
        "cavity": ["D1", "D2", "none", "both"],
    }.get(protocol, [])


def summarize(cfg: ExperimentConfig, records: list[RunRecord]) -> dict:
    hist = {k: 0 for k in _outcome_labels(cfg.protocol)}
    for r in records:
        hist[r.outcome] = hist.get(r.outcome, 0) + 1
    if cfg.protocol == "scissors":
        hist = dict(sorted(hist.items()))
    ok = [r for r in records if r.success]
    fids = [r.fidelity for r in (ok if cfg.protocol in ("scissors", "cavity") else records)]
    summary = {
        "schema": SCHEMA_VERSION,
        "protocol": cfg.protocol,
        "trials": len(records),
        "seed": cfg.seed,
        "successes": len(ok),
        "success_rate": len(ok) / len(records),
        "mean_fidelity": float(np.mean(fids)) if fids else float("nan"),
        "min_fidelity": float(np.min(fids)) if fids else float("nan"),
        "histogram": hist,
    }
    if cfg.protocol == "cavity":
        summary["misheralded"] = sum(
            1 for r in ok if dict(r.aux)["residual_photons"] > cavity.RESIDUAL_TOL)
    return summary


# ---------------------------------------------------------------------------
# reports

def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.12g}"
    return str(v)


def record_line(rec: RunRecord) -> str:
    return "record " + " ".join(f"{k}={_fmt(v)}" for k, v in rec.items())


def _summary_items(summary: dict, timing: bool):
    for k, v in summary.items():
        if k == "wall_clock_s" and not timing:
            continue
        if k == "histogram":
            for label, n in v.items():
                yield f"hist.{label}", n
        else:
            yield k, v


def emit_report(summary: dict, fmt: str = "lines", records=None, *, timing: bool = False) -> str:
    """Render a run.

    ``lines``: one ``record`` line per trial (if given) and a final ``summary``
    line, each a space-separated ``key=value`` group.  ``table``: aligned
    human-readable summary.  Wall-clock time is left out unless ``timing`` is
    set, so identical runs give byte-identical text.
    """
    if fmt == "lines":
        out = [record_line(r) for r in (records or [])]
        out.append("summary " + " ".join(f"{k}={_fmt(v)}" for k, v in _summary_items(summary, timing)))
        return "\n".join(out) + "\n"
    if fmt == "table":
        rows = [(k, _fmt(v)) for k, v in _summary_items(summary, timing) if not k.startswith("hist.")]
        width = max(len(k) for k, _ in rows)
        out = [f"{k:<{width}}  {v}" for k, v in rows]
        hist = summary["histogram"]
        total = max(1, summary["trials"])
        out.append("")
        out.append(f"{'outcome':<10}{'count':>10}{'fraction':>16}")
        for label, n in hist.items():
            out.append(f"{label:<10}{n:>10}{n / total:>16.12f}")
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
