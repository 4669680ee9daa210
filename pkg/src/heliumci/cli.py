"""Command line entry point: ``heliumci <stage> [--config PATH] [--out DIR] [--labels PATH]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import STAGES, StageError, load_config, run_pipeline

COMMANDS = STAGES + ("all",)

_HELP = {
    "orbitals": "hydrogenic B-spline orbitals and their energies",
    "spectrum": "bound CI spectra per symmetry block",
    "resonances": "Q-projected resonance spectra with (K,T)^A labels",
    "density": "pair densities, rho(0) and the diagonal node diagnostic",
    "measures": "Shannon entropy and Fisher information",
    "entanglement": "linear and von Neumann entropies, Slater rank",
    "delta-demo": "transmission through a double delta well",
    "all": "every stage",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heliumci", description="Two-electron CI with B-spline orbitals.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", metavar="PATH", help="INI run configuration (default: bundled)")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
        p.add_argument("--labels", metavar="PATH", help="(K,T)^A label table CSV (overrides the config)")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, out=args.out, labels=args.labels)
    except (ValueError, OSError) as exc:
        print(f"heliumci: [config] {exc}", file=sys.stderr)
        return 2
    stages = None if args.command == "all" else [args.command]
    try:
        result = run_pipeline(cfg, stages)
    except StageError as exc:
        print(f"heliumci: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"heliumci: [config] {exc}", file=sys.stderr)
        return 2
    for note in result.notices:
        print(f"heliumci: notice: {note}", file=sys.stderr)
    for path in result.files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
