"""Command-line front end.

    qtelesim teleport --trials 1000 --seed 42
    qtelesim scissors --config run.cfg --format table
    qtelesim selftest

Exit codes: 0 success, 1 selftest failure, 2 configuration error,
3 runtime error during a run.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiment
from .experiment import ConfigError

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# flag dest -> config key
_OVERRIDES = {
    "trials": "trials", "seed": "seed", "workers": "workers", "input": "input",
    "shared": "shared", "pair14": "pair14", "pair23": "pair23",
    "dim": "dim", "input_dim": "input_dim", "theta": "theta", "phi": "phi",
    "kappa": "kappa", "g_eff": "g_eff", "T": "T", "dt": "dt",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value config file")
    p.add_argument("--trials", type=str, help="number of trials")
    p.add_argument("--seed", type=str, help="64-bit seed")
    p.add_argument("--workers", type=str, help="worker processes (output is identical for any value)")
    p.add_argument("--format", choices=("lines", "table"), default="lines")
    p.add_argument("--records", type=Path, help="also write per-trial records to this file")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in the report")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtelesim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("teleport", help="Bennett qubit teleportation")
    _common(p)
    p.add_argument("--input", help="amplitudes 'a, b' or 'random'")
    p.add_argument("--shared", help="shared Bell pair label (default A)")

    p = sub.add_parser("swap", help="entanglement swapping")
    _common(p)
    p.add_argument("--pair14", help="Bell label of pair (1,4) or 'random'")
    p.add_argument("--pair23", help="Bell label of pair (2,3) or 'random'")

    p = sub.add_parser("scissors", help="quantum scissors teleportation/truncation")
    _common(p)
    p.add_argument("--input", help="Fock amplitudes 'c0, c1, ...' or 'random'")
    p.add_argument("--input-dim", dest="input_dim", help="levels of a random input")
    p.add_argument("--dim", help="joint truncation per mode")
    p.add_argument("--theta", help="beam-splitter angle (pi/4 is balanced)")
    p.add_argument("--phi", help="beam-splitter phase")

    p = sub.add_parser("cavity", help="atomic teleportation via heralded cavity decay")
    _common(p)
    p.add_argument("--input", help="atomic amplitudes 'c, c_e' or 'random'")
    p.add_argument("--kappa", help="cavity photon-number decay rate")
    p.add_argument("--g-eff", dest="g_eff", help="effective Raman coupling rate")
    p.add_argument("--T", dest="T", help="detection window")
    p.add_argument("--dt", help="integration step")

    p = sub.add_parser("selftest", help="run the acceptance checks")
    p.add_argument("--only", type=int, action="append", help="run only this criterion (repeatable)")
    return parser


def load_config(args: argparse.Namespace, environ=None) -> experiment.ExperimentConfig:
    values = {}
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        values.update(experiment.parse_pairs(text))
    if "protocol" in values and values["protocol"].strip().lower() != args.command:
        raise ConfigError(f"protocol: config file says {values['protocol']!r} but subcommand is {args.command!r}")
    values.update(experiment.env_overrides(environ))
    for dest, key in _OVERRIDES.items():
        v = getattr(args, dest, None)
        if v is not None:
            values[key] = v
    values["protocol"] = args.command
    return experiment.build_config(values)


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        from .acceptance import run_all

        results = run_all(only=args.only, stream=sys.stdout)
        return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST_FAILED
    try:
        cfg = load_config(args, environ)
    except ConfigError as exc:
        sys.stderr.write(f"qtelesim: config error: {exc}\n")
        return EXIT_CONFIG
    for note in cfg.notices:
        sys.stderr.write(f"qtelesim: notice: {note}\n")
    try:
        records, summary = experiment.run_experiment(cfg)
    except Exception as exc:
        sys.stderr.write(f"qtelesim: runtime error: {exc}\n")
        return EXIT_RUNTIME
    if args.records is not None:
        args.records.write_text("".join(experiment.record_line(r) + "\n" for r in records),
                                encoding="utf-8")
    shown = records if args.format == "lines" else None
    sys.stdout.write(experiment.emit_report(summary, args.format, shown, timing=args.timing))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
