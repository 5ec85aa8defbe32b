"""Command-line entry point: ``cryptoherm run <config> [...]``."""

import argparse
from concurrent.futures import ProcessPoolExecutor
import sys
from pathlib import Path

from .. import __version__
from ..exceptions import ConfigError
from ..models import list_models
from .config import FORMATS, load_config
from .emit import emit_results
from .runner import ExperimentFailed, run_experiment

EXIT_OK, EXIT_CERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _output_path(cfg, fmt, out_dir):
    name = cfg.output.get("path") or f"{cfg.id}.{fmt}"
    path = Path(name)
    if not path.is_absolute():
        path = Path(out_dir) / path
    return path.with_suffix(f".{fmt}")


def run_one(config_path, out_dir=".", fmt=None, strict=False):
    """Run one config file; returns ``(exit_code, message_lines)``."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        return EXIT_CONFIG, [f"{config_path}: config error: {exc}"]
    fmt = fmt or cfg.output["format"]
    try:
        record = run_experiment(cfg)
    except ConfigError as exc:
        return EXIT_CONFIG, [f"{config_path}: config error: {exc}"]
    except ExperimentFailed as exc:
        return EXIT_NUMERIC, [f"{config_path}: {exc}"]
    written = emit_results(record, fmt, _output_path(cfg, fmt, out_dir))
    lines = [f"{cfg.id}: wrote {', '.join(str(p) for p in written)}"]
    for c in record.certificates:
        d = c.as_dict()
        lines.append(f"  {d['status']} {d['name']} = {d['value']:.3e} {d['relation']} {d['tol']:.3e}")
    code = EXIT_CERT if strict and not record.passed else EXIT_OK
    return code, lines


def _star(args):
    return run_one(*args)


def build_parser():
    p = argparse.ArgumentParser(prog="cryptoherm", description="Quasi-Hermitian metric experiments.")
    p.add_argument("--version", action="version", version=f"cryptoherm {__version__}")
    p.add_argument("--list-models", action="store_true", help="print the model registry and exit")
    sub = p.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run one or more experiment configs")
    run.add_argument("configs", nargs="+", type=Path)
    run.add_argument("--strict", action="store_true", help="exit 1 if any certificate fails")
    run.add_argument("--out-dir", type=Path, default=Path("."))
    run.add_argument("--format", choices=FORMATS, default=None, help="override the config's output format")
    run.add_argument("--jobs", type=int, default=1, help="run configs in N worker processes")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_models:
        print("\n".join(list_models()))
        return EXIT_OK
    if args.command != "run":
        parser.print_help()
        return EXIT_CONFIG
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    jobs = [(c, args.out_dir, args.format, args.strict) for c in args.configs]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_star, jobs))
    else:
        results = [_star(j) for j in jobs]
    code = EXIT_OK
    for rc, lines in results:
        stream = sys.stdout if rc in (EXIT_OK, EXIT_CERT) else sys.stderr
        print("\n".join(lines), file=stream)
        code = max(code, rc)
    return code


if __name__ == "__main__":
    sys.exit(main())
