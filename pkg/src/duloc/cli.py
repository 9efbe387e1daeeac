"""``duloc`` command line: simulate, localize, beampattern, sweep.

Exit status: 0 success, 2 usage or configuration error, 3 data or runtime error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import io
from .beamformers import METHODS
from .config import ConfigError, ExperimentConfig, load_config
from .fusion import PeakPickingError, locate
from .pipeline import DataError, beampattern, localize, run_sweep, scene_for
from .spectral import MultichannelSignal

EXIT_USAGE = 2
EXIT_DATA = 3

log = logging.getLogger("duloc")


class UsageError(Exception):
    pass


def _sigma2_arg(text: str):
    if text in ("truth", "none"):
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'truth', 'none' or a number, got {text!r}")
    if v < 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("noise power must be a finite non-negative number")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path)


def _method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--snapshots", type=int, metavar="M")
    p.add_argument("--beta", type=float, metavar="B")
    p.add_argument("--delta", type=float, metavar="D")
    p.add_argument("--sources", type=int, metavar="S", help="source count for MUSIC and peak picking")
    p.add_argument("--sigma2", type=_sigma2_arg, help="truth | VALUE | none")
    p.add_argument("--grid-step", type=float, metavar="DEG")
    p.add_argument("--fmin", type=float, metavar="HZ")
    p.add_argument("--fmax", type=float, metavar="HZ")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duloc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a multichannel WAV scene and its truth sidecar")
    _common(p)

    p = sub.add_parser("localize", help="estimate DOAs from a WAV file")
    p.add_argument("wav", type=Path)
    _common(p)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--truth", type=Path, help="truth sidecar (default: WAV path with .json)")
    _method_flags(p)

    p = sub.add_parser("beampattern", help="dump look-direction beampatterns as CSV")
    _common(p)
    p.add_argument("--freq", type=float, default=1000.0, metavar="HZ")
    p.add_argument("--doa", type=float, default=-18.0, metavar="DEG")
    _method_flags(p)

    p = sub.add_parser("sweep", help="Monte-Carlo RMSE sweep over SNR or snapshot count")
    _common(p)
    p.add_argument("--method", choices=METHODS, action="append", dest="methods",
                   help="repeatable; default: the config's method list")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    _method_flags(p)
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {
        "seed": getattr(args, "seed", None),
        "method": getattr(args, "method", None) if args.command == "localize" else None,
        "methods": tuple(args.methods) if getattr(args, "methods", None) else None,
        "trials": getattr(args, "trials", None),
        "snapshots": getattr(args, "snapshots", None),
        "beta": getattr(args, "beta", None),
        "delta": getattr(args, "delta", None),
        "n_sources": getattr(args, "sources", None),
        "sigma2": getattr(args, "sigma2", None),
        "grid_step": getattr(args, "grid_step", None),
        "f_min": getattr(args, "fmin", None),
        "f_max": getattr(args, "fmax", None),
    }
    return cfg.replace(**changes)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if not cfg.sources:
        raise ConfigError("config field 'sources': at least one source is required to simulate")
    out = args.out or Path("scene.wav")
    signal, sigma2 = scene_for(cfg, cfg.seed)
    io.wav_write(out, signal.data, cfg.fs)
    geometry = cfg.geometry()
    io.write_truth(io.truth_path(out), doas=[s.doa for s in cfg.sources], sigma2=sigma2,
                   seed=cfg.seed, spacings=geometry.spacings, c=geometry.c, fs=cfg.fs,
                   snr_db=cfg.snr_db)
    print(f"wrote {out} ({signal.n_channels} channels, {len(signal)} samples) and {io.truth_path(out)}")
    return 0


def cmd_localize(args) -> int:
    cfg = _config(args)
    data, fs = io.wav_read(args.wav)
    if data.shape[0] != cfg.n_channels:
        raise UsageError(f"{args.wav} has {data.shape[0]} channels, "
                         f"the configured array has {cfg.n_channels}")
    if fs != cfg.fs:
        cfg = cfg.replace(fs=float(fs))
    truth_file = args.truth or io.truth_path(args.wav)
    truth_sigma2 = None
    if cfg.sigma2 == "truth" and Path(truth_file).exists():
        truth_sigma2 = float(io.read_truth(truth_file)["sigma2"])
    res = localize(MultichannelSignal(data, fs), cfg, truth_sigma2=truth_sigma2)
    print(f"method {res.method}: {len(res.estimates)} PSD window(s) of {cfg.snapshots} snapshot(s)")
    for i, est in enumerate(res.estimates):
        print(f"window {i}: " + " ".join(f"{a:g}" for a in est.angles))
    overall = locate(res.spectrum, cfg.n_sources, cfg.min_separation, angles=res.angles)
    print("doa_deg: " + " ".join(f"{a:g}" for a in overall.angles))
    out = args.out or Path(args.wav).with_suffix(f".{res.method}.csv")
    io.write_spectrum_csv(out, res.angles, res.spectrum)
    return 0


def cmd_beampattern(args) -> int:
    cfg = _config(args)
    angles, patterns = beampattern(cfg, args.freq, args.doa)
    names = list(patterns)
    rows = [(a, *(patterns[m][i] for m in names)) for i, a in enumerate(angles)]
    out = args.out or Path("beampattern.csv")
    io.csv_write(out, ["theta_deg", *names], rows)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if not cfg.sources:
        raise ConfigError("config field 'sources': at least one source is required to sweep")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    rows = run_sweep(cfg, workers=args.workers)
    out = args.out or Path("sweep.csv")
    io.csv_write(out, ["axis_value", "method", "rmse_deg", "trials"],
                 [(float(v), m, r, t) for v, m, r, t in rows])
    print(f"wrote {out} ({len(rows)} rows, axis {cfg.sweep_axis})")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "localize": cmd_localize,
    "beampattern": cmd_beampattern,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PeakPickingError, io.WavError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
