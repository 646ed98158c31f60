"""Command-line entry point: ``entswap {fig1,fig2,verify,emit-config-template}``.

Exit codes: 0 success, 2 configuration error, 3 verification failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import ConfigError, IoError, UnknownSuite
from .sweep import CONFIG_TEMPLATE, MODES, PREPARATIONS, build_config, emit, parse_config_text, run_fig1, run_fig2
from .verify import SUITES, run_verify

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4
SEED_ENV = "ENTSWAP_SEED"

log = logging.getLogger("entswap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_sweep_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="INI sweep file (see emit-config-template)")
    p.add_argument("--q-min", type=float)
    p.add_argument("--q-max", type=float)
    p.add_argument("--q-steps", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise-eps01", type=float)
    p.add_argument("--noise-eps10", type=float)
    p.add_argument("--mode", action="append", choices=MODES, help="repeatable; default: all modes")
    p.add_argument("--prep", choices=PREPARATIONS)
    p.add_argument("--no-mitigation", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entswap", description="Entanglement swapping from partially entangled pure states.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("fig1", "local P, C and E before the Bell measurement"),
                        ("fig2", "post-selected concurrences after the Bell measurement")):
        _add_sweep_flags(sub.add_parser(name, help=help_))
    v = sub.add_parser("verify", help="run a seeded property suite")
    v.add_argument("suite", choices=sorted(SUITES) + ["all"])
    v.add_argument("--trials", type=int, default=1000)
    v.add_argument("--seed", type=int)
    t = sub.add_parser("emit-config-template", help="print an annotated sweep config")
    t.add_argument("--out", default="-")
    return parser


def _default_seed(cli_seed: int | None) -> int:
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV}={env!r} is not an integer", SEED_ENV) from exc


def config_from_args(args: argparse.Namespace):
    overrides: dict = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}", "config") from exc
        overrides = parse_config_text(text)
    flag_map = {
        "q_min": args.q_min, "q_max": args.q_max, "q_steps": args.q_steps, "shots": args.shots,
        "eps01": args.noise_eps01, "eps10": args.noise_eps10, "preparation": args.prep,
        "workers": args.workers,
    }
    for k, v in flag_map.items():
        if v is not None:
            overrides[k] = v
    if any(v is not None for v in (args.q_min, args.q_max, args.q_steps)):
        overrides.pop("q_values", None)
    if args.mode:
        overrides["modes"] = tuple(args.mode)
    if args.no_mitigation:
        overrides["mitigation"] = False
    if args.seed is not None or "seed" not in overrides:
        overrides["seed"] = _default_seed(args.seed)
    return build_config(overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "emit-config-template":
            if args.out == "-":
                sys.stdout.write(CONFIG_TEMPLATE)
            else:
                Path(args.out).write_text(CONFIG_TEMPLATE)
            return EXIT_OK
        if args.command == "verify":
            seed = _default_seed(args.seed)
            names = sorted(SUITES) if args.suite == "all" else [args.suite]
            ok = True
            for name in names:
                rep = run_verify(name, args.trials, seed)
                print("\n".join(rep.lines()))
                ok &= rep.passed
            return EXIT_OK if ok else EXIT_VERIFY
        config = config_from_args(args)
        log.info("sweep over %d q values, modes=%s", len(config.q_values), ",".join(config.modes))
        table = run_fig1(config) if args.command == "fig1" else run_fig2(config)
        text = emit(table, args.format, args.out)
        if args.out == "-":
            sys.stdout.write(text)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnknownSuite as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IoError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
