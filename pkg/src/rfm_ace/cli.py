"""Command-line interface.

    rfm-ace simulate --seed 1 --out phantom
    rfm-ace estimate phantom.rf --method improved --curves curves.csv
    rfm-ace compare phantom.rf --out cmp
    rfm-ace sweep --seeds 0:20 --cutoffs 16 --out sweep.csv

Exit codes: 0 success, 2 I/O failure, 64 usage, 65 corrupt input,
70 estimation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as rfio
from .errors import AceError, CorruptFileError, InvalidArgumentError
from .homomorphic import LifterSpec
from .phantom import PhantomSpec, SystemEffects, exponential_tgc, simulate_frame
from .rfm import RfmOptions, interior_fit_range, run_rfm
from .units import Attenuation, RfFrame, ScanConfig

EXIT_OK = 0
EXIT_IO = 2
EXIT_USAGE = 64
EXIT_CORRUPT = 65
EXIT_ESTIMATION = 70


class UsageError(Exception):
    pass


@contextmanager
def _usage():
    """Configuration errors raised while turning flags into objects are usage errors."""
    try:
        yield
    except InvalidArgumentError as exc:
        raise UsageError(f"invalid arguments: {exc}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _range_pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected z_lo:z_hi in meters, got {text!r}")
    return lo, hi


def _seed_range(text: str) -> range:
    try:
        if ":" in text:
            start, stop = (int(v) for v in text.split(":"))
        else:
            start, stop = 0, int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop, got {text!r}")
    if stop <= start or start < 0:
        raise argparse.ArgumentTypeError(f"empty or negative seed range {text!r}")
    return range(start, stop)


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_simulation_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("phantom")
    g.add_argument("--alpha", type=float, default=0.68, help="ground-truth attenuation, dB/cm/MHz")
    g.add_argument("--lines", type=int, default=64)
    g.add_argument("--samples", type=int, default=3072, help="samples per line")
    g.add_argument("--fs", type=float, default=50e6, help="sampling rate, Hz")
    g.add_argument("--f0", type=float, default=5e6, help="pulse center frequency, Hz")
    g.add_argument("--bandwidth", type=float, default=0.6, help="-6 dB fractional bandwidth")
    g.add_argument("--density", type=float, default=3000.0, help="scatterers per meter per line")
    g.add_argument("--depth-range", type=_range_pair, default=(0.005, 0.045), help="z_min:z_max, m")
    g.add_argument("--snr-db", type=float, default=None)
    g.add_argument("--tgc", default="none", help="none | exp:<dB per cm>")


def _add_estimation_flags(p: argparse.ArgumentParser, with_method: bool = True) -> None:
    g = p.add_argument_group("estimator")
    g.add_argument("--window", type=int, default=256, help="analysis window, samples (power of two)")
    g.add_argument("--hop", type=int, default=64)
    g.add_argument("--taper", choices=("hann", "rect"), default="hann")
    g.add_argument("--step", type=int, default=1, help="ratio spacing in bins")
    g.add_argument("--band-db", type=float, default=15.0)
    g.add_argument("--fit-range", type=_range_pair, default=None, help="z_lo:z_hi, m")
    if with_method:
        g.add_argument("--method", choices=("baseline", "improved"), default="improved")
        g.add_argument("--cutoff", type=int, default=None, help="lifter cutoff N_c")
    g.add_argument("--floor-rel", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rfm-ace", description="Attenuation estimation by the reference frequency method.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic RF frame and its sidecar")
    p.add_argument("--seed", type=int, default=0)
    _add_simulation_flags(p)
    p.add_argument("--out", required=True, help="output prefix; writes <out>.rf and <out>.json")

    p = sub.add_parser("estimate", help="estimate attenuation from an RF file")
    p.add_argument("input", help="RF file (sidecar <stem>.json next to it)")
    _add_estimation_flags(p)
    p.add_argument("--out", default=None, help="result JSON path (default: stdout)")
    p.add_argument("--curves", default=None, help="write ratio curves CSV")

    p = sub.add_parser("compare", help="run baseline and improved on the same frame")
    p.add_argument("input")
    _add_estimation_flags(p, with_method=False)
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--out", default=None, help="prefix for <out>.baseline/.improved/.summary.json")

    p = sub.add_parser("sweep", help="seeds x cutoffs table for both methods")
    p.add_argument("--seeds", type=_seed_range, default=range(0, 20), help="start:stop")
    p.add_argument("--cutoffs", type=_int_list, default=None, help="comma-separated N_c values")
    _add_simulation_flags(p)
    _add_estimation_flags(p, with_method=False)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return parser


def _scan_config(args) -> ScanConfig:
    return ScanConfig(
        sampling_rate=args.fs,
        center_frequency=args.f0,
        fractional_bandwidth=args.bandwidth,
        num_lines=args.lines,
        samples_per_line=args.samples,
    )


def _phantom(args, seed: int) -> PhantomSpec:
    return PhantomSpec(
        depth_range=args.depth_range,
        scatterer_density=args.density,
        alpha=Attenuation(args.alpha),
        seed=seed,
    )


def _effects(args, config: ScanConfig) -> SystemEffects:
    tgc = args.tgc.strip().lower()
    if tgc == "none":
        profile = None
    elif tgc.startswith("exp:"):
        try:
            rate = float(tgc[4:])
        except ValueError:
            raise UsageError(f"bad --tgc rate in {args.tgc!r}")
        profile = exponential_tgc(config, rate)
    else:
        raise UsageError(f"--tgc must be 'none' or 'exp:<dB/cm>', got {args.tgc!r}")
    return SystemEffects(tgc_profile=profile, noise_snr_db=args.snr_db, tgc_label=tgc)


def _options(args, method: str, cutoff: Optional[int], fit_range) -> RfmOptions:
    if cutoff is not None:
        LifterSpec(cutoff).check(args.window)
    return RfmOptions(
        window=args.window,
        hop=args.hop,
        taper=args.taper,
        step=args.step,
        band_threshold_db=args.band_db,
        fit_range=fit_range,
        method=method,
        lifter=LifterSpec(cutoff) if cutoff is not None else None,
        floor_rel=args.floor_rel,
    )


def _default_fit_range(args, depth_range, config: ScanConfig):
    if args.fit_range is not None:
        return args.fit_range
    if depth_range is None:
        return None
    return interior_fit_range(tuple(depth_range), args.window, config)


def _load_frame(path: str) -> tuple[RfFrame, dict]:
    rf_path, sidecar_path = rfio.rf_paths(path)
    samples = rfio.read_rf(rf_path)
    sidecar = rfio.read_json(sidecar_path)
    config = rfio.load_scan_config(sidecar)
    try:
        frame = RfFrame(samples.astype(np.float64), config, dict(sidecar.get("provenance", {})))
    except InvalidArgumentError as exc:
        raise CorruptFileError(f"{rf_path}: {exc}") from exc
    return frame, sidecar


def cmd_simulate(args) -> int:
    with _usage():
        config = _scan_config(args)
        spec = _phantom(args, args.seed)
        effects = _effects(args, config)
    frame = simulate_frame(spec, config, effects)
    rf_path, sidecar_path = rfio.rf_paths(args.out)
    rfio.write_rf(rf_path, frame.samples)
    rfio.write_json(sidecar_path, rfio.sidecar_document(config, spec, effects))
    print(f"wrote {rf_path} ({config.num_lines} x {config.samples_per_line}) and {sidecar_path}")
    return EXIT_OK


def _estimate_frame(frame: RfFrame, sidecar: dict, args, method: str, cutoff):
    depth_range = sidecar.get("phantom", {}).get("depth_range")
    with _usage():
        options = _options(args, method, cutoff, _default_fit_range(args, depth_range, frame.config))
    return run_rfm(frame, options)


def _print_result(doc: dict) -> None:
    line = f"{doc['method']}: alpha = {doc['aggregate_alpha_db_cm_mhz']:.4f} dB/cm/MHz"
    if "signed_error_db_cm_mhz" in doc:
        truth = doc["provenance"]["ground_truth_alpha_db_cm_mhz"]
        line += f" (truth {truth:g}, error {doc['signed_error_db_cm_mhz']:+.4f})"
    line += f", oscillation {doc['oscillation_metric']:.4g}"
    print(line)


def cmd_estimate(args) -> int:
    frame, sidecar = _load_frame(args.input)
    result = _estimate_frame(frame, sidecar, args, args.method, args.cutoff)
    doc = rfio.result_document(result, sidecar.get("provenance"))
    if args.out:
        rfio.write_json(args.out, doc)
    else:
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    if args.curves:
        rfio.write_curves_csv(args.curves, result)
    if args.out:
        _print_result(doc)
    return EXIT_OK


def compare_documents(results: dict, provenance: Optional[dict]) -> dict:
    """Summary of a baseline/improved pair of results."""
    provenance = dict(provenance or {})
    truth = provenance.get("ground_truth_alpha_db_cm_mhz")
    summary = {"ground_truth_alpha_db_cm_mhz": truth}
    for method, result in results.items():
        entry = {
            "alpha_db_cm_mhz": result.aggregate_alpha,
            "oscillation_metric": result.mean_residual_rms,
        }
        if truth is not None:
            entry["abs_error_db_cm_mhz"] = abs(result.aggregate_alpha - truth)
        summary[method] = entry
    summary["oscillation_ratio"] = (
        results["improved"].mean_residual_rms / results["baseline"].mean_residual_rms
    )
    return summary


def cmd_compare(args) -> int:
    frame, sidecar = _load_frame(args.input)
    provenance = sidecar.get("provenance")
    results = {m: _estimate_frame(frame, sidecar, args, m, args.cutoff) for m in ("baseline", "improved")}
    summary = compare_documents(results, provenance)
    if args.out:
        for method, result in results.items():
            rfio.write_json(f"{args.out}.{method}.json", rfio.result_document(result, provenance))
        rfio.write_json(f"{args.out}.summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


SWEEP_COLUMNS = ("seed", "cutoff", "method", "alpha", "abs_error", "oscillation_metric")


def _thread_count() -> int:
    raw = os.environ.get("ACE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise UsageError(f"ACE_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def sweep_rows(args) -> list[tuple]:
    """All sweep rows, ordered (seed, cutoff, method) whatever the schedule."""
    with _usage():
        config = _scan_config(args)
        effects = _effects(args, config)
        cutoffs = args.cutoffs or [LifterSpec.default_for(args.window).cutoff]
        fit_range = _default_fit_range(args, args.depth_range, config)
        for cutoff in cutoffs:
            _options(args, "improved", cutoff, fit_range)
        for seed in args.seeds:
            _phantom(args, seed)

    def cell(seed: int) -> list[tuple]:
        spec = _phantom(args, seed)
        frame = simulate_frame(spec, config, effects)
        baseline = run_rfm(frame, _options(args, "baseline", None, fit_range))
        rows = []
        for cutoff in cutoffs:
            improved = run_rfm(frame, _options(args, "improved", cutoff, fit_range))
            for result in (baseline, improved):
                alpha = result.aggregate_alpha
                rows.append(
                    (seed, cutoff, result.method, alpha, abs(alpha - spec.alpha.value), result.mean_residual_rms)
                )
        return rows

    seeds = list(args.seeds)
    threads = min(_thread_count(), len(seeds))
    if threads == 1:
        per_seed = [cell(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_seed = list(pool.map(cell, seeds))
    return [row for rows in per_seed for row in rows]


def format_sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for seed, cutoff, method, alpha, err, osc in rows:
        writer.writerow([seed, cutoff, method, repr(alpha), repr(err), repr(osc)])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    text = format_sweep_csv(sweep_rows(args))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rfm-ace: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorruptFileError as exc:
        print(f"rfm-ace: corrupt input: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except AceError as exc:
        print(f"rfm-ace: estimation failed at stage '{exc.stage}': {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as exc:
        print(f"rfm-ace: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
