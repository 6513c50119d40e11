"""Command-line driver.

    nfisac se-vs-snr --preset desk --out snr.csv
    nfisac se-vs-bandwidth --config run.json --bsa off
    nfisac beampattern --preset desk --out pattern.csv
    nfisac design-dump --preset desk

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .design import NumericalError
from .sim import PRESETS, ConfigError, SimConfig, design_for_trial, design_to_dict, run_beampattern, run_se_vs_bandwidth, run_se_vs_snr

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nfisac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [
        ("se-vs-snr", "spectral efficiency versus SNR"),
        ("se-vs-bandwidth", "spectral efficiency versus bandwidth"),
        ("beampattern", "radar beampattern of one trial's design"),
        ("design-dump", "dump one trial's hybrid design as JSON"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file with SimConfig fields")
        p.add_argument("--preset", choices=sorted(PRESETS), default="paper")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--mode", choices=["nearfield", "farfield"])
        p.add_argument("--bsa", choices=["on", "off"])
        p.add_argument("--trials", type=_positive)
        p.add_argument("--workers", type=_positive)
        if name in ("beampattern", "design-dump"):
            p.add_argument("--trial", type=int, default=0, help="trial index to design for")
    return parser


def resolve_config(args) -> SimConfig:
    config = PRESETS[args.preset]
    if args.config:
        config = SimConfig.load(args.config, base=config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.bsa is not None:
        overrides["compensation"] = "bsa" if args.bsa == "on" else "none"
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    return config.replace(**overrides) if overrides else config


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "se-vs-snr":
            _emit(run_se_vs_snr(config).to_csv(), args.out)
        elif args.command == "se-vs-bandwidth":
            _emit(run_se_vs_bandwidth(config).to_csv(), args.out)
        elif args.command == "beampattern":
            _emit(run_beampattern(config, design_for_trial(config, args.trial)).to_csv(), args.out)
        elif args.command == "design-dump":
            _emit(json.dumps(design_to_dict(design_for_trial(config, args.trial)), indent=1) + "\n", args.out)
    except (ConfigError, OSError) as exc:
        print(f"nfisac: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"nfisac: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
