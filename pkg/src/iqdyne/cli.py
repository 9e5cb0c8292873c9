"""Command line entry point: ``iqdyne run|sweep|validate``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, dump, load, resolve, validate_config
from .experiments import PRESETS, run_preset, sweep, write_sweep

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iqdyne", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a figure preset")
    run.add_argument("preset", help=f"one of: {', '.join(PRESETS)}")
    run.add_argument("--config", type=Path, help="YAML overrides, or a manifest.yaml to replay")
    run.add_argument("--out", type=Path, default=Path("out"))
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int, default=1)

    sw = sub.add_parser("sweep", help="sweep one numeric config field")
    sw.add_argument("--param", required=True, help="dotted path, e.g. schedule.n_rep")
    sw.add_argument("--values", nargs="*", type=float, default=[])
    sw.add_argument("--config", type=Path)
    sw.add_argument("--out", type=Path, default=Path("sweep.csv"))
    sw.add_argument("--seed", type=int)
    sw.add_argument("--workers", type=int, default=1)

    val = sub.add_parser("validate", help="check a config file and print the resolved values")
    val.add_argument("--config", type=Path, required=True)
    return p


def _is_manifest(path: Path) -> bool:
    import yaml

    data = yaml.safe_load(path.read_text()) or {}
    return isinstance(data, dict) and "preset" in data and "config" in data


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "validate":
            print(dump(validate_config(args.config)), end="")
            return EXIT_OK
        if args.command == "run":
            settings = None
            overrides = None
            if args.config is not None:
                if _is_manifest(args.config):
                    seed = {"camera": {"seed": args.seed}} if args.seed is not None else None
                    settings = load(args.config, seed)
                else:
                    import yaml

                    overrides = yaml.safe_load(args.config.read_text()) or {}
            manifest = run_preset(args.preset, args.out, overrides, seed=args.seed, workers=args.workers,
                                  settings=settings)
            print(f"{manifest.preset}: wrote {len(manifest.outputs)} files to {args.out}")
            return EXIT_OK
        seed = {"camera": {"seed": args.seed}} if args.seed is not None else {}
        base = load(args.config, seed) if args.config else resolve(seed)
        rows = sweep(args.param, args.values, base, workers=args.workers)
        write_sweep(rows, args.out)
        print(f"sweep {args.param}: {len(rows)} rows -> {args.out}")
        return EXIT_OK
    except ConfigError as err:
        for path, msg in err.errors:
            print(f"config error: {path}: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as err:  # noqa: BLE001
        print(f"error: {err}", file=sys.stderr)
        logging.getLogger(__name__).debug("traceback", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
