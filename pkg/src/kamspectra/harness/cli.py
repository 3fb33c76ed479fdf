"""Command-line entry point: ``kamspectra <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .. import kernels
from .config import ConfigError, build_config
from .io import ArtifactWriter
from .runs import COMMANDS

log = logging.getLogger("kamspectra")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML (or JSON) configuration file")
    common.add_argument("--out", help="output directory for artifacts")
    common.add_argument("--mode", choices=("strict", "desk"), help="parameter regime")
    common.add_argument("--levels", type=int, help="number of levels of the construction")
    common.add_argument("--seed", type=int, help="seed for randomly drawn potential modes")
    common.add_argument("--threads", type=int, help="worker threads for independent samples")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    p = argparse.ArgumentParser(prog="kamspectra",
                                description="Isoenergetic curves and resonance sets of "
                                            "(-Delta)^l + V with a limit-periodic potential.")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"trace": "trace the isoenergetic curves kappa_n(phi) over the non-resonant angles",
             "swisscheese": "disk sets, zero counts and resonance arcs in the complex angle strip",
             "verify": "run the invariant checks and report pass/fail per check",
             "eigenfunction": "assemble Psi_n at traced points and report convergence",
             "sweep": "measures of Theta_1 over a k grid and coverage over a lambda grid"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    overrides = {"out": args.out, "mode": args.mode, "levels": args.levels, "seed": args.seed,
                 "threads": args.threads}
    try:
        cfg = build_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"kamspectra: configuration error: {exc}", file=sys.stderr)
        return 2
    log.info("backend: %s; config hash %s", kernels.BACKEND, cfg.hash())
    writer = ArtifactWriter(cfg.out, cfg)
    summary, warnings, code = COMMANDS[args.command](cfg, writer)
    for w in warnings:
        log.warning(w)
    writer.manifest(args.command, summary, warnings)
    print(f"{args.command}: {'ok' if code == 0 else 'FAILED'} -> {writer.out}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
