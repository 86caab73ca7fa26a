"""Command-line interface.

Commands print machine-readable JSON to stdout (scan and run commands
additionally write CSV data files; ``table`` and ``theory`` can emit
plot-ready CSV via ``--format csv``). Failures are reported as a single
JSON object on stderr with a stable error code and exit status:

    validation -> 3    estimation -> 4    fit -> 5
    io         -> 6    format     -> 7

Usage errors keep argparse's conventional exit status 2. Stochastic
commands accept ``--seed`` and, where noted, ``--config FILE`` with a
JSON document whose keys mirror the run options; explicit flags win
over config-file values, which win over built-in defaults. Unknown
config keys are rejected.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import (
    estimate_chsh,
    estimate_efficiencies,
    fit_fringe,
    fit_hom_dip,
    hom_visibility_ratio,
)
from .chsh import (
    closed_form_chsh,
    optimize_theta,
    theta_basis,
    violation_threshold,
)
from .detectors import (
    EfficiencyMap,
    ObservedClicks,
    model_from_name,
    model_name,
    model_split_ratio,
)
from .errors import EstimationError, FitError, ModebellError, ValidationError
from .montecarlo import (
    ClickRecord,
    FringeScanData,
    HomScanData,
    RunConfig,
    ScanConfig,
    simulate_fringe_scan,
    simulate_hom_scan,
    simulate_run,
)
from .protocol import (
    PATTERNS,
    PhaseSettings,
    PostSelectionMode,
    group_probabilities,
    pattern_distribution,
)

_EXIT_CODES = {
    "validation": 3,
    "estimation": 4,
    "fit": 5,
    "io": 6,
    "format": 7,
}

_CLICKS_MAGIC = "modebell clicks v1"
_HOM_MAGIC = "modebell hom v1"
_FRINGE_MAGIC = "modebell fringe v1"

_CLICKS_COLUMNS = ["window_id", "x", "y", "n_a1", "n_a2", "n_b1", "n_b2"]
_HOM_COLUMNS = ["delay", "inlab_coinc", "double_clicks", "total_pairs"]
_FRINGE_COLUMNS = ["phi_y", "phi_x", "n_pp", "n_pm", "n_mp", "n_mm", "n_doubles"]


class FormatError(ModebellError):
    """A data or config file does not match the expected layout."""


def _fail(code: str, message: str) -> int:
    json.dump({"error": {"code": code, "message": message}}, sys.stderr)
    sys.stderr.write("\n")
    return _EXIT_CODES[code]


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# Data files
# ---------------------------------------------------------------------------


def _meta_line(magic: str, meta: dict[str, object]) -> str:
    parts = " ".join(f"{k}={v}" for k, v in meta.items())
    return f"# {magic} {parts}".rstrip()


def _parse_meta(line: str, magic: str, path: str) -> dict[str, str]:
    body = line.lstrip("#").strip()
    if not body.startswith(magic):
        raise FormatError(f"{path}: expected a '{magic}' header, got {line!r}")
    meta: dict[str, str] = {}
    for token in body[len(magic):].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise FormatError(f"{path}: malformed header token {token!r}")
        meta[key] = value
    return meta


def write_clicks_csv(path: str, records: Sequence[ClickRecord], config: RunConfig) -> None:
    meta = {
        "detector": model_name(config.detector),
        "split_ratio": repr(model_split_ratio(config.detector)),
        "distinguishable": str(config.overlap == 0.0).lower(),
    }
    with open(path, "w", newline="") as handle:
        handle.write(_meta_line(_CLICKS_MAGIC, meta) + "\n")
        writer = csv.writer(handle)
        writer.writerow(_CLICKS_COLUMNS)
        for record in records:
            writer.writerow(
                [record.window_id, record.x, record.y, *record.observed.counts]
            )


def read_clicks_csv(path: str) -> tuple[list[ClickRecord], dict[str, str]]:
    with open(path, newline="") as handle:
        header = handle.readline().strip()
        meta = _parse_meta(header, _CLICKS_MAGIC, path)
        reader = csv.reader(handle)
        names = next(reader, None)
        if names != _CLICKS_COLUMNS:
            raise FormatError(f"{path}: unexpected column names {names!r}")
        records = []
        for row in reader:
            if not row:
                continue
            try:
                window_id, x, y, *counts = (int(cell) for cell in row)
            except ValueError as exc:
                raise FormatError(f"{path}: non-integer cell in row {row!r}") from exc
            observed = ObservedClicks(counts=tuple(counts), lost=2 - sum(counts))
            records.append(
                ClickRecord(
                    window_id=window_id, x=x, y=y, observed=observed, wall_time_s=0.0
                )
            )
    return records, meta


def write_hom_csv(path: str, scan: HomScanData) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(_meta_line(_HOM_MAGIC, {}) + "\n")
        writer = csv.writer(handle)
        writer.writerow(_HOM_COLUMNS)
        for k in range(len(scan.delay)):
            writer.writerow(
                [
                    repr(float(scan.delay[k])),
                    int(scan.inlab_coinc[k]),
                    int(scan.double_clicks[k]),
                    int(scan.total_pairs[k]),
                ]
            )


def read_hom_csv(path: str) -> HomScanData:
    with open(path, newline="") as handle:
        meta_line = handle.readline().strip()
        _parse_meta(meta_line, _HOM_MAGIC, path)
        reader = csv.reader(handle)
        names = next(reader, None)
        if names != _HOM_COLUMNS:
            raise FormatError(f"{path}: unexpected column names {names!r}")
        rows = [row for row in reader if row]
    if not rows:
        raise FormatError(f"{path}: no scan points")
    try:
        delay = np.array([float(r[0]) for r in rows])
        tallies = np.array([[int(r[1]), int(r[2]), int(r[3])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed scan row") from exc
    return HomScanData(
        delay=delay,
        inlab_coinc=tallies[:, 0],
        double_clicks=tallies[:, 1],
        total_pairs=tallies[:, 2],
    )


def write_fringe_csv(path: str, scan: FringeScanData) -> None:
    meta = {"mode": scan.mode.cli_name}
    with open(path, "w", newline="") as handle:
        handle.write(_meta_line(_FRINGE_MAGIC, meta) + "\n")
        writer = csv.writer(handle)
        writer.writerow(_FRINGE_COLUMNS)
        for k in range(len(scan.phi_y)):
            writer.writerow(
                [
                    repr(float(scan.phi_y[k])),
                    repr(float(scan.phi_x)),
                    int(scan.n_pp[k]),
                    int(scan.n_pm[k]),
                    int(scan.n_mp[k]),
                    int(scan.n_mm[k]),
                    int(scan.n_doubles[k]),
                ]
            )


def read_fringe_csv(path: str) -> FringeScanData:
    with open(path, newline="") as handle:
        meta_line = handle.readline().strip()
        meta = _parse_meta(meta_line, _FRINGE_MAGIC, path)
        reader = csv.reader(handle)
        names = next(reader, None)
        if names != _FRINGE_COLUMNS:
            raise FormatError(f"{path}: unexpected column names {names!r}")
        rows = [row for row in reader if row]
    if not rows:
        raise FormatError(f"{path}: no scan points")
    if "mode" not in meta:
        raise FormatError(f"{path}: header must carry mode=")
    try:
        phi_y = np.array([float(r[0]) for r in rows])
        phi_x_col = np.array([float(r[1]) for r in rows])
        tallies = np.array([[int(cell) for cell in r[2:7]] for r in rows])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed scan row") from exc
    if np.any(phi_x_col != phi_x_col[0]):
        raise FormatError(f"{path}: phi_x must be constant across the scan")
    return FringeScanData(
        phi_x=float(phi_x_col[0]),
        phi_y=phi_y,
        n_pp=tallies[:, 0],
        n_pm=tallies[:, 1],
        n_mp=tallies[:, 2],
        n_mm=tallies[:, 3],
        n_doubles=tallies[:, 4],
        mode=PostSelectionMode.from_name(meta["mode"]),
    )


# ---------------------------------------------------------------------------
# Run options: defaults < config file < explicit flags
# ---------------------------------------------------------------------------

_RUN_DEFAULTS: dict[str, object] = {
    "overlap": 0.952,
    "pair_rate": 50.0,
    "acquisition_s": 1.0,
    "windows_per_setting": 30,
    "theta": math.pi / 8.0,
    "detector": "pseudo",
    "split_ratio": 0.5,
    "efficiency": (1.0, 1.0, 1.0, 1.0),
    "phase_noise_frac": 0.02,
    "fringe_length_rad": 2.0 * math.pi,
    "drift_rad_per_s": 0.0,
    "seed": 0,
}

_RUN_KEYS = frozenset(_RUN_DEFAULTS)
_SIMULATE_KEYS = _RUN_KEYS | {"distinguishable"}
_HOM_KEYS = _RUN_KEYS | {"delay_min", "delay_max", "delay_steps", "coherence_sigma"}
_FRINGE_KEYS = _RUN_KEYS | {"mode", "phi_x", "phi_y_min", "phi_y_max", "phi_y_steps"}

_SCAN_DEFAULTS: dict[str, object] = {
    "distinguishable": False,
    "delay_min": -3.0,
    "delay_max": 3.0,
    "delay_steps": 41,
    "coherence_sigma": 1.0,
    "mode": "cross-lab-only",
    "phi_x": 0.0,
    "phi_y_min": 0.0,
    "phi_y_max": 2.0 * math.pi,
    "phi_y_steps": 25,
}


def _load_config_file(path: str, allowed: frozenset[str]) -> dict[str, object]:
    with open(path) as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: malformed config file: {exc}") from exc
    if not isinstance(payload, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise ValidationError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return payload


def _coerce_efficiency(value: object) -> EfficiencyMap:
    if isinstance(value, EfficiencyMap):
        return value
    if isinstance(value, str):
        parts = value.split(",")
        if len(parts) != 4:
            raise ValidationError("efficiency needs four comma-separated values")
        return EfficiencyMap(eta=tuple(float(p) for p in parts))
    if isinstance(value, dict):
        return EfficiencyMap.from_dict(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 4:
            raise ValidationError("efficiency needs four values")
        return EfficiencyMap(eta=tuple(float(p) for p in value))
    raise ValidationError(f"cannot interpret efficiency value {value!r}")


def _resolve_options(args: argparse.Namespace, allowed: frozenset[str]) -> dict[str, object]:
    merged: dict[str, object] = {}
    merged.update({k: v for k, v in _RUN_DEFAULTS.items() if k in allowed})
    merged.update({k: v for k, v in _SCAN_DEFAULTS.items() if k in allowed})
    if getattr(args, "config", None):
        merged.update(_load_config_file(args.config, allowed))
    for key in allowed:
        flag_value = getattr(args, key, None)
        if flag_value is not None and flag_value is not False:
            merged[key] = flag_value
    merged["efficiency"] = _coerce_efficiency(merged["efficiency"])
    return merged


def _run_config(options: dict[str, object], overlap: float | None = None) -> RunConfig:
    return RunConfig(
        overlap=float(options["overlap"]) if overlap is None else overlap,
        pair_rate=float(options["pair_rate"]),
        acquisition_s=float(options["acquisition_s"]),
        windows_per_setting=int(options["windows_per_setting"]),
        basis=theta_basis(float(options["theta"])),
        detector=model_from_name(str(options["detector"]), float(options["split_ratio"])),
        efficiency=options["efficiency"],
        phase_noise_frac=float(options["phase_noise_frac"]),
        fringe_length_rad=float(options["fringe_length_rad"]),
        drift_rad_per_s=float(options["drift_rad_per_s"]),
        seed=int(options["seed"]),
    )


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="JSON config document; flags override its values")
    parser.add_argument("--overlap", type=float, default=None,
                        help="pairwise mode overlap of the two photons (default 0.952)")
    parser.add_argument("--pair-rate", dest="pair_rate", type=float, default=None,
                        help="mean photon-pair rate per second (default 50)")
    parser.add_argument("--acquisition", dest="acquisition_s", type=float, default=None,
                        help="seconds per acquisition window (default 1)")
    parser.add_argument("--windows", dest="windows_per_setting", type=int, default=None,
                        help="acquisition windows per basis setting (default 30)")
    parser.add_argument("--theta", type=float, default=None,
                        help="basis parameter; settings are (t, -3t) per party (default pi/8)")
    parser.add_argument("--detector", choices=("ideal", "click-only", "pseudo"),
                        default=None, help="detector response model (default pseudo)")
    parser.add_argument("--split-ratio", dest="split_ratio", type=float, default=None,
                        help="routing ratio of the pseudo-resolving splitter (default 0.5)")
    parser.add_argument("--efficiency", default=None,
                        help="four channel efficiencies, e.g. 1,0.9,0.95,0.85")
    parser.add_argument("--phase-noise", dest="phase_noise_frac", type=float,
                        default=None,
                        help="phase noise as a fraction of one fringe (default 0.02)")
    parser.add_argument("--drift", dest="drift_rad_per_s", type=float, default=None,
                        help="linear phase drift in rad/s (default 0)")
    parser.add_argument("--seed", type=int, default=None,
                        help="simulation seed (default 0)")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_table(args: argparse.Namespace) -> int:
    settings = PhaseSettings(phi_x=args.phi_x, phi_y=args.phi_y)
    dist = pattern_distribution(settings, args.overlap)
    rows = [
        {
            "pattern": "".join(str(c) for c in pattern.counts),
            "counts": list(pattern.counts),
            "probability": dist.probabilities[pattern],
        }
        for pattern in PATTERNS
    ]
    if args.format == "csv":
        writer = csv.writer(sys.stdout)
        sys.stdout.write(
            _meta_line(
                "modebell table v1",
                {
                    "phi_x": repr(args.phi_x),
                    "phi_y": repr(args.phi_y),
                    "overlap": repr(args.overlap),
                },
            )
            + "\n"
        )
        writer.writerow(["pattern", "n_a1", "n_a2", "n_b1", "n_b2", "probability"])
        for row in rows:
            writer.writerow([row["pattern"], *row["counts"], repr(row["probability"])])
        return 0
    groups = {}
    for mode in PostSelectionMode:
        g = group_probabilities(settings, args.overlap, mode)
        kept = sum(
            dist.probabilities[p] for p in PATTERNS if mode.keeps(p)
        )
        groups[mode.cli_name] = {
            "p_pp": g.p_pp,
            "p_pm": g.p_pm,
            "p_mp": g.p_mp,
            "p_mm": g.p_mm,
            "correlation": g.p_pp + g.p_mm - g.p_pm - g.p_mp,
            "kept_fraction": kept,
        }
    _emit(
        {
            "phi_x": args.phi_x,
            "phi_y": args.phi_y,
            "overlap": args.overlap,
            "patterns": rows,
            "groups": groups,
        }
    )
    return 0


def _cmd_theory(args: argparse.Namespace) -> int:
    mode = PostSelectionMode.from_name(args.mode)
    overlaps = np.linspace(args.overlap_min, args.overlap_max, args.steps)
    values = []
    for v in overlaps:
        if args.theta is not None:
            values.append(closed_form_chsh(args.theta, float(v), mode))
        else:
            values.append(optimize_theta(float(v), mode).value)
    threshold = violation_threshold(mode)
    if args.format == "json":
        _emit(
            {
                "mode": mode.cli_name,
                "theta": args.theta,
                "threshold_overlap": threshold,
                "points": [
                    {"overlap": float(v), "value": float(b)}
                    for v, b in zip(overlaps, values)
                ],
            }
        )
        return 0
    sys.stdout.write(
        _meta_line(
            "modebell theory v1",
            {
                "mode": mode.cli_name,
                "theta": "optimized" if args.theta is None else repr(args.theta),
                "threshold_overlap": repr(threshold),
            },
        )
        + "\n"
    )
    writer = csv.writer(sys.stdout)
    writer.writerow(["overlap", "value"])
    for v, b in zip(overlaps, values):
        writer.writerow([repr(float(v)), repr(float(b))])
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    mode = PostSelectionMode.from_name(args.mode)
    optimum = optimize_theta(args.overlap, mode)
    _emit(
        {
            "mode": mode.cli_name,
            "overlap": args.overlap,
            "theta": optimum.theta,
            "value": optimum.value,
            "violates": optimum.value > 2.0,
            "threshold_overlap": violation_threshold(mode),
        }
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    options = _resolve_options(args, _SIMULATE_KEYS)
    overlap = 0.0 if options.get("distinguishable") else None
    config = _run_config(options, overlap=overlap)
    records = simulate_run(config)
    write_clicks_csv(args.out, records, config)
    _emit(
        {
            "output": args.out,
            "n_records": len(records),
            "windows_per_setting": config.windows_per_setting,
            "detector": model_name(config.detector),
        }
    )
    return 0


def _cmd_hom_scan(args: argparse.Namespace) -> int:
    options = _resolve_options(args, _HOM_KEYS)
    config = _run_config(options)
    points = tuple(
        np.linspace(
            float(options["delay_min"]),
            float(options["delay_max"]),
            int(options["delay_steps"]),
        )
    )
    scan_config = ScanConfig(
        points=points,
        coherence_sigma=float(options["coherence_sigma"]),
        acquisition_s=float(options["acquisition_s"]),
    )
    scan = simulate_hom_scan(config, scan_config)
    write_hom_csv(args.out, scan)
    _emit({"output": args.out, "n_points": len(points)})
    return 0


def _cmd_fringe_scan(args: argparse.Namespace) -> int:
    options = _resolve_options(args, _FRINGE_KEYS)
    config = _run_config(options)
    mode = PostSelectionMode.from_name(str(options["mode"]))
    grid = tuple(
        np.linspace(
            float(options["phi_y_min"]),
            float(options["phi_y_max"]),
            int(options["phi_y_steps"]),
        )
    )
    scan = simulate_fringe_scan(
        config, phi_x_fixed=float(options["phi_x"]), phi_y_grid=grid, mode=mode
    )
    write_fringe_csv(args.out, scan)
    _emit({"output": args.out, "n_points": len(grid), "mode": mode.cli_name})
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    records, meta = read_clicks_csv(args.input)
    if meta.get("distinguishable") != "true":
        raise EstimationError(
            "calibration needs a distinguishable-photon run "
            "(simulate --distinguishable)"
        )
    efficiency = estimate_efficiencies(records)
    payload = {"eta": efficiency.as_dict(), "n_records": len(records)}
    if args.out is not None:
        with open(args.out, "w") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
    _emit(payload)
    return 0


def _cmd_fit_hom(args: argparse.Namespace) -> int:
    scan = read_hom_csv(args.input)
    fit = fit_hom_dip(scan, n_resamples=args.resamples, seed=args.seed)
    _emit(
        {
            "kind": fit.kind,
            "params": fit.params,
            "std": fit.std,
            "residual_sum_squares": fit.residual_sum_squares,
            "n_points": fit.n_points,
        }
    )
    return 0


def _cmd_fit_fringe(args: argparse.Namespace) -> int:
    scan = read_fringe_csv(args.input)
    mode = PostSelectionMode.from_name(args.mode) if args.mode is not None else None
    fit = fit_fringe(scan, mode=mode, n_resamples=args.resamples, seed=args.seed)
    _emit(
        {
            "kind": fit.kind,
            "mode": (mode or scan.mode).cli_name,
            "params": fit.params,
            "std": fit.std,
            "residual_sum_squares": fit.residual_sum_squares,
            "n_points": fit.n_points,
        }
    )
    return 0


def _detector_from_meta(meta: dict[str, str]):
    return model_from_name(
        meta.get("detector", "ideal"), float(meta.get("split_ratio", "0.5"))
    )


def _cmd_chsh(args: argparse.Namespace) -> int:
    records, meta = read_clicks_csv(args.input)
    mode = PostSelectionMode.from_name(args.mode)
    detector = _detector_from_meta(meta)
    efficiency = _load_efficiency_json(args.efficiency) if args.efficiency else None
    basis = theta_basis(args.theta) if args.theta is not None else None
    estimate = estimate_chsh(
        records,
        mode,
        efficiency=efficiency,
        detector=detector,
        n_resamples=args.resamples,
        seed=args.seed,
        basis=basis,
        phase_noise_prior=args.phase_noise_prior,
    )
    _emit(
        {
            "mode": mode.cli_name,
            "value": estimate.value,
            "std": estimate.std,
            "n_resamples": estimate.n_resamples,
            "violates": estimate.value - 2.0 > 2.0 * estimate.std,
            "correlations": {
                f"{key[0]}{key[1]}": {
                    "value": corr.value,
                    "n_kept": corr.n_kept,
                    "corrected_total": corr.corrected_total,
                }
                for key, corr in estimate.correlations.items()
            },
        }
    )
    return 0


def _cmd_ratio(args: argparse.Namespace) -> int:
    records, meta = read_clicks_csv(args.input)
    detector = _detector_from_meta(meta)
    efficiency = _load_efficiency_json(args.efficiency) if args.efficiency else None
    visibility = hom_visibility_ratio(records, efficiency=efficiency, detector=detector)
    _emit(
        {
            "v_alice": visibility.v_alice,
            "v_bob": visibility.v_bob,
            "average": visibility.average,
        }
    )
    return 0


def _load_efficiency_json(path: str) -> EfficiencyMap:
    with open(path) as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(payload, dict) or "eta" not in payload:
        raise FormatError(f"{path}: expected a JSON object with an 'eta' mapping")
    return EfficiencyMap.from_dict(payload["eta"])


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_MODE_CHOICES = tuple(m.cli_name for m in PostSelectionMode)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modebell",
        description="Simulate and analyze a two-copy single-photon Bell test.",
    )
    parser.add_argument("--version", action="version", version=f"modebell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table", help="detection-pattern probabilities at one setting")
    p.add_argument("--phi-x", type=float, default=0.0)
    p.add_argument("--phi-y", type=float, default=0.0)
    p.add_argument("--overlap", type=float, default=1.0)
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="json adds outcome groups; csv is the bare table")
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("theory", help="CHSH value versus overlap")
    p.add_argument("--mode", choices=_MODE_CHOICES, required=True)
    p.add_argument("--theta", type=float, default=None,
                   help="fixed basis parameter; omit to optimize per point")
    p.add_argument("--overlap-min", type=float, default=0.0)
    p.add_argument("--overlap-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--format", choices=("json", "csv"), default="csv",
                   help="plot-ready csv by default")
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("optimize", help="best basis parameter at one overlap")
    p.add_argument("--mode", choices=_MODE_CHOICES, required=True)
    p.add_argument("--overlap", type=float, default=1.0)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("simulate", help="simulate a Bell run to a clicks CSV")
    p.add_argument("--out", "--output", dest="out", required=True,
                   help="clicks CSV path")
    p.add_argument("--distinguishable", action="store_true",
                   help="make the photons fully distinguishable (overlap 0)")
    _add_run_arguments(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("hom-scan", help="scan in-lab coincidences versus delay")
    p.add_argument("--out", "--output", dest="out", required=True,
                   help="scan CSV path")
    p.add_argument("--delay-min", dest="delay_min", type=float, default=None)
    p.add_argument("--delay-max", dest="delay_max", type=float, default=None)
    p.add_argument("--delay-steps", dest="delay_steps", type=int, default=None)
    p.add_argument("--coherence-sigma", dest="coherence_sigma", type=float,
                   default=None,
                   help="width of the overlap envelope in delay units (default 1)")
    _add_run_arguments(p)
    p.set_defaults(func=_cmd_hom_scan)

    p = sub.add_parser("fringe-scan", help="scan correlations versus one phase")
    p.add_argument("--out", "--output", dest="out", required=True,
                   help="scan CSV path")
    p.add_argument("--mode", choices=_MODE_CHOICES, default=None)
    p.add_argument("--phi-x", dest="phi_x", type=float, default=None)
    p.add_argument("--phi-y-min", dest="phi_y_min", type=float, default=None)
    p.add_argument("--phi-y-max", dest="phi_y_max", type=float, default=None)
    p.add_argument("--phi-y-steps", dest="phi_y_steps", type=int, default=None)
    _add_run_arguments(p)
    p.set_defaults(func=_cmd_fringe_scan)

    p = sub.add_parser("calibrate", help="estimate channel efficiencies from clicks")
    p.add_argument("--in", dest="input", required=True,
                   help="clicks CSV from a distinguishable run")
    p.add_argument("--out", "--output", dest="out", default=None,
                   help="also write the JSON here")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("fit-hom", help="fit the coincidence dip of a delay scan")
    p.add_argument("--in", dest="input", required=True, help="scan CSV from hom-scan")
    p.add_argument("--resamples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_fit_hom)

    p = sub.add_parser("fit-fringe", help="fit amplitude and phase of a fringe scan")
    p.add_argument("--in", dest="input", required=True,
                   help="scan CSV from fringe-scan")
    p.add_argument("--mode", choices=_MODE_CHOICES, default=None,
                   help="override the mode recorded in the scan file")
    p.add_argument("--resamples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_fit_fringe)

    p = sub.add_parser("chsh", help="estimate the CHSH value from a clicks CSV")
    p.add_argument("--in", dest="input", required=True, help="clicks CSV from simulate")
    p.add_argument("--mode", choices=_MODE_CHOICES, required=True)
    p.add_argument("--efficiency", default=None,
                   help="efficiency JSON produced by calibrate")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=float, default=None,
                   help="nominal basis parameter, needed for the phase prior")
    p.add_argument("--phase-noise-prior", dest="phase_noise_prior", type=float,
                   default=None,
                   help="prior width (rad) on the summed phase per setting")
    p.set_defaults(func=_cmd_chsh)

    p = sub.add_parser("ratio", help="visibility from coincidence/double ratios")
    p.add_argument("--in", dest="input", required=True, help="clicks CSV from simulate")
    p.add_argument("--efficiency", default=None,
                   help="efficiency JSON produced by calibrate")
    p.set_defaults(func=_cmd_ratio)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        return _fail("validation", str(exc))
    except EstimationError as exc:
        return _fail("estimation", str(exc))
    except FitError as exc:
        return _fail("fit", str(exc))
    except FormatError as exc:
        return _fail("format", str(exc))
    except OSError as exc:
        return _fail("io", str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
