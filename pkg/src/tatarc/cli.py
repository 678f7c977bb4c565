"""``tatarc`` command line: simulate, reconstruct, radon, invert-radon.

Exit codes: 0 success, 1 numerical failure, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, load_config
from .fastrecon import ReconstructionError, run_pipeline
from .forward import ForwardSimulationError, add_noise, apply_reduction, simulate_boundary_data
from .grids import GridError, RadonData, Sinogram
from .metrics import csv_row, format_report, rel_error
from .phantom import exact_radon_data
from .radon import FilterSpec, invert

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tatarc", description="Thermoacoustic reconstruction from circular-arc data.")
    ap.add_argument("--threads", type=int, default=1, help="maximum worker threads (default 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="boundary data for the configured phantom")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--reduced-out")
    s.add_argument("--noise", type=float, default=0.0, help="relative L2 level of additive white noise")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv")

    r = sub.add_parser("reconstruct", help="sinogram -> projections -> image")
    r.add_argument("sinogram")
    r.add_argument("--config")
    r.add_argument("--mode", choices=("full", "reduced", "naive"))
    r.add_argument("--out-prefix", required=True)
    r.add_argument("--truth", action="store_true", help="score against the configured phantom")

    d = sub.add_parser("radon", help="exact projections of the configured phantom")
    d.add_argument("--config")
    d.add_argument("--out", required=True)

    v = sub.add_parser("invert-radon", help="filtered backprojection of a projections file")
    v.add_argument("radon")
    v.add_argument("--config")
    v.add_argument("--out", required=True)
    v.add_argument("--pgm")
    return ap


def _read(path, kind):
    if not Path(path).is_file():
        raise UsageError(f"input file not found: {path}")
    try:
        obj = io.read_record(path)
    except (io.FormatError, OSError, KeyError, ValueError) as e:
        raise UsageError(f"cannot read {path}: {e}") from e
    if not isinstance(obj, kind):
        raise UsageError(f"{path} holds a {type(obj).__name__}, expected {kind.__name__}")
    return obj


def _check_outdir(*paths):
    for p in paths:
        if p is not None and not Path(p).resolve().parent.is_dir():
            raise UsageError(f"output directory does not exist: {Path(p).parent}")


def cmd_simulate(args, cfg: RunConfig) -> int:
    _check_outdir(args.out, args.reduced_out, args.csv)
    if args.noise < 0:
        raise UsageError("--noise must be non-negative")
    s = simulate_boundary_data(
        cfg.phantom(),
        cfg.time_grid(),
        cfg.angular_grid(),
        n_nodes=cfg.quad_nodes,
        cutoff=cfg.antialias_cutoff,
        workers=args.threads,
    )
    s = add_noise(s, args.noise, args.seed)
    io.write_record(args.out, s)
    if args.csv:
        io.write_csv(args.csv, s)
    if args.reduced_out:
        io.write_record(args.reduced_out, apply_reduction(s, cfg.acquisition()))
    return EXIT_OK


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    s = _read(args.sinogram, Sinogram)
    prefix = args.out_prefix
    _check_outdir(prefix + ".radon.tatd")
    mode = args.mode or cfg.mode
    try:
        d = run_pipeline(s, cfg.acquisition(), mode=mode, workers=args.threads)
    except ReconstructionError as e:
        raise UsageError(f"fast-recon: {e}") from e
    try:
        img = invert(d, cfg.image_grid(), FilterSpec.for_kind(d.kind, pad_factor=cfg.filter_pad, rolloff=cfg.rolloff), workers=args.threads)
    except ValueError as e:
        raise UsageError(f"radon-inv: {e}") from e
    io.write_record(prefix + ".radon.tatd", d)
    io.write_record(prefix + ".image.tatd", img)
    io.write_pgm(prefix + ".pgm", img)
    if args.truth:
        truth = cfg.phantom().render(cfg.image_grid(), cfg.supersample)
        m = {"mode": mode, "region": cfg.region}
        for norm in ("L2", "Linf"):
            m[f"rel_{norm}"] = rel_error(img, truth, norm, cfg.region)
        io.atomic_write(prefix + ".metrics.txt", format_report(m).encode())
        io.atomic_write(prefix + ".metrics.csv", csv_row(m).encode())
        sys.stdout.write(format_report(m))
    return EXIT_OK


def cmd_radon(args, cfg: RunConfig) -> int:
    _check_outdir(args.out)
    io.write_record(args.out, exact_radon_data(cfg.phantom(), cfg.radon_grid()))
    return EXIT_OK


def cmd_invert_radon(args, cfg: RunConfig) -> int:
    d = _read(args.radon, RadonData)
    _check_outdir(args.out, args.pgm)
    try:
        spec = FilterSpec.for_kind(d.kind, pad_factor=cfg.filter_pad, rolloff=cfg.rolloff)
        img = invert(d, cfg.image_grid(), spec, workers=args.threads)
    except ValueError as e:
        raise UsageError(f"radon-inv: {e}") from e
    io.write_record(args.out, img)
    if args.pgm:
        io.write_pgm(args.pgm, img)
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "radon": cmd_radon,
    "invert-radon": cmd_invert_radon,
}


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if args.threads < 1:
        print("tatarc: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError, OSError) as e:
        print(f"tatarc: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ForwardSimulationError, GridError, FloatingPointError, ArithmeticError) as e:
        print(f"tatarc: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
