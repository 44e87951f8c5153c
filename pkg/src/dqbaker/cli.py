"""Command-line front end: ``dqbaker {orbits,evolve,husimi,eigs}``."""

from __future__ import annotations

import argparse
import logging
import multiprocessing
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .classical import enumerate_orbits, format_orbit
from .errors import ConfigError, DQBakerError
from .experiment import eigs_report, load_config, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
log = logging.getLogger("dqbaker")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", metavar="PATH",
                        help="JSON run config or manifest (repeat for a batch)")
    common.add_argument("--output", metavar="DIR", help="override the config's output_dir")
    common.add_argument("--jobs", type=_positive_int, default=1, metavar="K",
                        help="run up to K configs in parallel")

    parser = argparse.ArgumentParser(prog="dqbaker", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbits", help="list primitive periodic orbits")
    p.add_argument("--max", type=_positive_int, required=True, dest="max_period", metavar="L")
    p.add_argument("--no-corner", action="store_true", help="omit the all-ones orbit")

    sub.add_parser("evolve", parents=[common], help="evolve a state, write series.csv")
    sub.add_parser("husimi", parents=[common], help="evolve and write Husimi frames")
    e = sub.add_parser("eigs", parents=[common], help="rank map eigenstates by scar overlap")
    e.add_argument("--top", type=_positive_int, default=5)
    return parser


def _job(args):
    command, path, output, top = args
    cfg = load_config(path)
    if command == "eigs":
        text, _ = eigs_report(cfg, top)
        if output:
            Path(output).mkdir(parents=True, exist_ok=True)
            (Path(output) / "eigs.txt").write_text(text)
        return text
    if command == "husimi" and not cfg.husimi.enabled:
        raise ConfigError("husimi.enabled", "must be true for the husimi command")
    manifest = run(cfg, with_husimi=(command == "husimi"), output_dir=output)
    return f"{path}: wrote {', '.join(sorted(manifest['artifacts']))}\n"


def _outputs(paths, output):
    if output is None or len(paths) == 1:
        return [output] * len(paths)
    # isolate batch members under the shared root
    return [str(Path(output) / Path(p).stem) for p in paths]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    if args.command == "orbits":
        for orbit in enumerate_orbits(args.max_period, include_corner=not args.no_corner):
            print(format_orbit(orbit))
        return EXIT_OK

    if not args.config:
        parser.error("--config is required")
    top = getattr(args, "top", 5)
    jobs = [(args.command, path, out, top) for path, out in zip(args.config, _outputs(args.config, args.output))]
    try:
        if args.jobs > 1 and len(jobs) > 1:
            # spawn: forking after BLAS threads start can kill workers
            ctx = multiprocessing.get_context("spawn")
            with ProcessPoolExecutor(max_workers=args.jobs, mp_context=ctx) as pool:
                results = list(pool.map(_job, jobs))
        else:
            results = [_job(j) for j in jobs]
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DQBakerError, ArithmeticError, FloatingPointError, ValueError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    sys.stdout.write("".join(results))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
