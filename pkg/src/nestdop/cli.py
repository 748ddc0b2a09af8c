"""Command-line front end.

Subcommands: design, simulate, estimate, spectrogram, mse, compare.
Exit codes: 0 success, 2 config error, 3 numeric/precondition error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import patterns
from .coarray import CoarrayHoleError
from .config import ConfigError, ExperimentConfig, pattern_from_doc
from .estimators import EstimationError, GridSpectrum, LineSpectrum
from .experiments import run_compare, run_estimate, run_mse, run_spectrogram
from .patterns import KLevelParams, PatternError
from .serialize import (
    write_coarray_csv,
    write_lines_csv,
    write_lines_json,
    write_snapshots,
    write_snapshots_csv,
    write_spectrum_csv,
    write_spectrum_json,
)
from .signals import generate_snapshots

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument(
        "--lambda",
        dest="nest_lambda",
        type=float,
        help="override the grid estimator's soft threshold",
    )
    parser.add_argument("--pattern", help="override the pattern family")
    parser.add_argument(
        "--estimator",
        action="append",
        help="restrict to one estimator (repeatable)",
    )
    parser.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    parser.add_argument(
        "--format",
        choices=("csv", "json", "pgm"),
        default="csv",
        help="primary output format",
    )


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.nest_lambda is not None:
        overrides["nest_lambda"] = args.nest_lambda
    if args.pattern is not None:
        pattern_doc = {"family": args.pattern}
        pattern_from_doc(pattern_doc, cfg.window_size)  # validate
        overrides["pattern_doc"] = pattern_doc
    if args.estimator:
        from .config import VALID_ESTIMATORS

        bad = [e for e in args.estimator if e not in VALID_ESTIMATORS]
        if bad:
            raise ConfigError(f"unknown estimators {bad}; valid: {VALID_ESTIMATORS}")
        overrides["estimators"] = tuple(args.estimator)
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


def _write_spectrum(spec, stem: Path, fmt: str):
    if isinstance(spec, LineSpectrum):
        if fmt == "json":
            write_lines_json(spec, stem.with_suffix(".json"))
        else:
            write_lines_csv(spec, stem.with_suffix(".csv"))
        return
    if fmt == "json":
        write_spectrum_json(spec, stem.with_suffix(".json"))
    else:
        write_spectrum_csv(spec, stem.with_suffix(".csv"))


def cmd_design(args) -> int:
    p = args.P
    family = args.family
    if family == "nested":
        variants = []
        n1, n2 = patterns.optimal_nested(p, "fewer_larger_gaps")
        variants.append((n1, n2))
        alt = patterns.optimal_nested(p, "more_smaller_gaps")
        if alt != (n1, n2):
            variants.append(alt)
        if args.n1 is not None:
            variants = [(args.n1, args.n2)]
        built = [patterns.build_nested(a, b) for a, b in variants]
    elif family == "super_nested":
        if args.n1 is None or args.n2 is None:
            raise ConfigError("super_nested requires --n1 and --n2")
        built = [patterns.build_super_nested(args.n1, args.n2)]
    elif family == "coprime":
        if args.n1 is None or args.n2 is None:
            raise ConfigError("coprime requires --n1 and --n2")
        built = [patterns.build_coprime(args.n1, args.n2)]
    elif family == "k_level":
        if args.levels:
            built = [patterns.build_klevel(KLevelParams(tuple(args.levels)))]
        else:
            built = [patterns.build_klevel(patterns.optimal_klevel(p))]
    else:
        built = [patterns.build_standard(p)]

    reports = []
    for pat in built:
        gaps = pat.gap_structure()
        report = {
            "P": pat.window_size,
            "family": pat.family.value,
            "params": pat.params,
            "slots": list(pat.slots),
            "transmissions": pat.n_transmissions,
            "savings_percent": round(100.0 * (1 - pat.n_transmissions / p), 1),
            "gaps": {"count": len(gaps), "sizes": sorted(set(gaps))},
            "contiguous_coarray": patterns.verify_contiguous_coarray(pat),
        }
        reports.append(report)
        print(
            f"{pat.family.value} P={pat.window_size} params={pat.params} "
            f"N={pat.n_transmissions} savings={report['savings_percent']}% "
            f"gaps={report['gaps']['count']}x{report['gaps']['sizes']} "
            f"contiguous={report['contiguous_coarray']}"
        )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "design.json").write_text(json.dumps(reports, indent=2))
    for i, pat in enumerate(built):
        (args.out_dir / f"pattern_{i}.json").write_text(pat.to_json())
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    if cfg.tones is None:
        raise ConfigError("simulate needs a 'tones' entry in the config")
    pattern = cfg.build_pattern()
    snaps = generate_snapshots(
        cfg.tones, pattern, cfg.q, noise_power=cfg.noise_power, rng_seed=cfg.seed
    )
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_snapshots(snaps, args.out_dir / "snapshots.bin")
    if args.format == "csv":
        write_snapshots_csv(snaps, args.out_dir / "snapshots.csv")
    print(
        f"wrote {snaps.n_snapshots} snapshots x {pattern.n_transmissions} emissions "
        f"to {args.out_dir}"
    )
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    result = run_estimate(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    if result["coarray"] is not None:
        write_coarray_csv(result["coarray"], args.out_dir / "coarray.csv")
    for name, spec in result["spectra"].items():
        _write_spectrum(spec, args.out_dir / f"{name}_spectrum", args.format)
        if isinstance(spec, GridSpectrum):
            print(f"{name}: peak at nu={spec.peak_frequency():+.4f}")
        else:
            print(f"{name}: {spec.model_order} lines, noise ~{spec.noise_estimate:.3g}")
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    cfg = _load_config(args)
    result = run_spectrogram(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, gram in result["spectrograms"].items():
        gram.write_csv(args.out_dir / f"{name}_spectrogram.csv")
        if args.format == "pgm":
            gram.write_pgm(args.out_dir / f"{name}_spectrogram.pgm")
        print(f"{name}: {len(gram.frames)} frames x {gram.num_bins} bins")
    return EXIT_OK


def cmd_mse(args) -> int:
    cfg = _load_config(args)
    rows = run_mse(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out_dir / "mse.csv", "w") as fh:
        fh.write("snr_db,estimator,mse\n")
        for row in rows:
            fh.write(f"{float(row.snr_db)!r},{row.estimator},{float(row.mse)!r}\n")
    print(f"{'SNR [dB]':>9} {'estimator':>10} {'MSE':>12}")
    for row in rows:
        print(f"{row.snr_db:>9.1f} {row.estimator:>10} {row.mse:>12.4g}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    report = run_compare(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, gram in report["spectrograms"].items():
        gram.write_csv(args.out_dir / f"{name}_spectrogram.csv")
        gram.write_pgm(args.out_dir / f"{name}_spectrogram.pgm")
    stats = report["stats"]
    (args.out_dir / "report.json").write_text(json.dumps(stats, indent=2))
    for name, st in stats.items():
        print(
            f"{name}: ridge_rms={st['ridge_rms_bins']:.2f} bins, "
            f"within-1-bin={100 * st['ridge_within_one_bin']:.0f}%, "
            f"artifact={st['artifact_energy_db']:.1f} dB"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nestdop",
        description="Sparse slow-time Doppler: pattern design and spectrum recovery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="design an emission pattern")
    p_design.add_argument("P", type=int, help="observation window size")
    p_design.add_argument(
        "--family",
        default="nested",
        choices=("nested", "super_nested", "coprime", "k_level", "standard"),
    )
    p_design.add_argument(
        "--preference",
        default="fewer_larger_gaps",
        choices=("fewer_larger_gaps", "more_smaller_gaps"),
    )
    p_design.add_argument("--n1", type=int)
    p_design.add_argument("--n2", type=int)
    p_design.add_argument("--levels", type=int, nargs="+")
    p_design.add_argument("--out-dir", type=Path, default=Path("."))
    p_design.set_defaults(func=cmd_design)

    for name, func in (
        ("simulate", cmd_simulate),
        ("estimate", cmd_estimate),
        ("spectrogram", cmd_spectrogram),
        ("mse", cmd_mse),
        ("compare", cmd_compare),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CoarrayHoleError, EstimationError, PatternError) as exc:
        print(f"error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
