"""Command-line interface: single runs, parameter sweeps, and the bundled
reproduction suite.

Configuration is a flat key=value file ('#' starts a comment); every key is
also available as a command-line flag (underscores become hyphens), and
flags override the file.  The base seed falls back to the PREFETCHSIM_SEED
environment variable when neither flag nor file provides one.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace

from .energy import EnergyModel
from .engine import (
    DEFAULT_STREAMS,
    ScenarioConfig,
    run_once,
    run_scenario,
    sweep,
)
from .scheme import SchemeKind

ENV_SEED = "PREFETCHSIM_SEED"

ALL_SCHEME_TOKENS = "mobile-only,wifi-noprefetch,wifi-prefetch"

AXES = ("streams", "hotspots", "scale_m", "scale_w", "scale_a", "time_var", "thr_var")

DEFAULT_AXIS_VALUES = {
    "streams": {"hd": (2, 3, 4, 5), "sd": (8, 9, 10, 11)},
    "hotspots": (2, 4, 8),
    "scale_m": (0.6, 0.8, 1.0, 1.2),
    "scale_w": (0.6, 0.8, 1.0, 1.2),
    "scale_a": (0.6, 0.8, 1.0, 1.2),
    "time_var": (0.1, 0.2, 0.3, 0.4),
    "thr_var": (0.2, 0.4, 0.6, 0.8),
}

# Axis name -> ScenarioConfig field and value type.
AXIS_FIELDS = {
    "streams": ("num_streams", int),
    "hotspots": ("num_hotspots", int),
    "scale_m": ("scale_m", float),
    "scale_w": ("scale_w", float),
    "scale_a": ("scale_a", float),
    "time_var": ("time_var", float),
    "thr_var": ("thr_var", float),
}

# key -> (type, default).  None defaults mean "decide later" (streams by
# profile, seed by environment).
SETTINGS = {
    "scheme": (str, "wifi-prefetch"),
    "schemes": (str, ALL_SCHEME_TOKENS),
    "streams": (int, None),
    "hotspots": (int, 4),
    "scale_m": (float, 1.0),
    "scale_w": (float, 1.0),
    "scale_a": (float, 1.0),
    "time_var": (float, 0.1),
    "thr_var": (float, 0.2),
    "trace": (str, None),
    "synth": (str, "hd"),
    "route": (str, None),
    "runs": (int, 120),
    "seed": (int, None),
    "tick": (float, 0.01),
    "threshold_frames": (int, 200),
    "warmup_s": (float, 20.0),
    "ewma_weight": (float, 0.1),
    "energy_cellular_j_per_mb": (float, 100.0),
    "energy_cellular_idle_w": (float, 0.0),
    "energy_wifi_j_per_mb": (float, 5.0),
    "energy_wifi_idle_w": (float, 0.77),
    "axis": (str, None),
    "axis_values": (str, None),
    "out": (str, None),
    "format": (str, "csv"),
    "timeline": (str, None),
    "jobs": (int, 1),
}

# Keys echoed into output headers, in a fixed order.  I/O control keys are
# left out so outputs stay byte-identical across jobs/paths.
ECHO_KEYS = (
    "schemes",
    "streams",
    "hotspots",
    "scale_m",
    "scale_w",
    "scale_a",
    "time_var",
    "thr_var",
    "trace",
    "synth",
    "route",
    "runs",
    "seed",
    "tick",
    "threshold_frames",
    "warmup_s",
    "ewma_weight",
    "energy_cellular_j_per_mb",
    "energy_cellular_idle_w",
    "energy_wifi_j_per_mb",
    "energy_wifi_idle_w",
    "axis",
    "axis_values",
)

CSV_COLUMNS = (
    "axis_value",
    "scheme",
    "paused_mean",
    "paused_ci95",
    "energy_mean_j",
    "energy_ci95_j",
    "runs",
)

TIMELINE_COLUMNS = (
    "time_s",
    "stream",
    "source",
    "rate_mbps",
    "frontier_bytes",
    "next_frame",
    "paused_total",
)

REPRODUCE_SWEEPS = (
    ("streams", "sweep_streams"),
    ("hotspots", "sweep_hotspots"),
    ("scale_m", "sweep_cellular_scale"),
    ("scale_w", "sweep_wifi_scale"),
    ("scale_a", "sweep_backhaul_scale"),
    ("time_var", "sweep_time_variability"),
    ("thr_var", "sweep_throughput_variability"),
)

# Merge layers, higher wins.
_LVL_DEFAULT, _LVL_FILE, _LVL_FLAG = 0, 1, 2


class ConfigError(ValueError):
    """Raised for malformed configuration files or values."""


def _coerce(key: str, text: str, origin: str):
    typ, _default = SETTINGS[key]
    try:
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"{origin}: bad value for {key}: {text!r}") from None


def parse_config_file(path: str) -> dict:
    """Parse a key=value config file into a typed settings dict."""
    values: dict = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            origin = f"{path}:{lineno}"
            if "=" not in line:
                raise ConfigError(f"{origin}: expected key=value, got {raw.strip()!r}")
            key, _, text = line.partition("=")
            key, text = key.strip(), text.strip()
            if key not in SETTINGS:
                raise ConfigError(f"{origin}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{origin}: duplicate key {key!r}")
            values[key] = _coerce(key, text, origin)
    return values


def merge_settings(args: argparse.Namespace) -> dict:
    """Defaults <- config file <- flags, tracking which layer set each key."""
    merged = {k: (default, _LVL_DEFAULT) for k, (_t, default) in SETTINGS.items()}
    config_path = getattr(args, "config", None)
    if config_path:
        for k, v in parse_config_file(config_path).items():
            merged[k] = (v, _LVL_FILE)
    for k in SETTINGS:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = (v, _LVL_FLAG)

    # A frame trace and a synthetic profile are alternatives; whichever was
    # stated more explicitly wins.
    trace_v, trace_l = merged["trace"]
    synth_v, synth_l = merged["synth"]
    if trace_v is not None and synth_v is not None:
        if trace_l == synth_l:
            raise ConfigError("trace and synth are mutually exclusive")
        if trace_l > synth_l:
            merged["synth"] = (None, trace_l)
        else:
            merged["trace"] = (None, synth_l)

    settings = {k: v for k, (v, _l) in merged.items()}
    if settings["synth"] is not None and settings["synth"] not in ("hd", "sd"):
        raise ConfigError(f"synth must be hd or sd, got {settings['synth']!r}")
    if settings["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {settings['format']!r}")
    if settings["axis"] is not None and settings["axis"] not in AXES:
        raise ConfigError(f"axis must be one of {', '.join(AXES)}")
    if settings["seed"] is None:
        env = os.environ.get(ENV_SEED)
        if env is not None:
            try:
                settings["seed"] = int(env)
            except ValueError:
                raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}") from None
        else:
            settings["seed"] = 0
    return settings


def _default_streams(settings: dict) -> int:
    if settings["streams"] is not None:
        return settings["streams"]
    return DEFAULT_STREAMS.get(settings["synth"], 4)


def build_scenario(settings: dict, scheme: SchemeKind) -> ScenarioConfig:
    return ScenarioConfig(
        scheme=scheme,
        num_streams=_default_streams(settings),
        num_hotspots=settings["hotspots"],
        scale_m=settings["scale_m"],
        scale_w=settings["scale_w"],
        scale_a=settings["scale_a"],
        time_var=settings["time_var"],
        thr_var=settings["thr_var"],
        trace_path=settings["trace"],
        synth_profile=settings["synth"],
        runs=settings["runs"],
        base_seed=settings["seed"],
        tick_s=settings["tick"],
        playout_threshold_frames=settings["threshold_frames"],
        wifi_warmup_s=settings["warmup_s"],
        ewma_weight=settings["ewma_weight"],
        route_path=settings["route"],
        energy_model=EnergyModel(
            cellular_j_per_mb=settings["energy_cellular_j_per_mb"],
            cellular_idle_w=settings["energy_cellular_idle_w"],
            wifi_j_per_mb=settings["energy_wifi_j_per_mb"],
            wifi_idle_w=settings["energy_wifi_idle_w"],
        ),
    )


def parse_axis_values(settings: dict, axis: str) -> list:
    """Explicit axis_values, or the standard grid for the axis."""
    _field, typ = AXIS_FIELDS[axis]
    text = settings["axis_values"]
    if text is not None:
        values = []
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            try:
                values.append(typ(part) if typ is int else float(part))
            except ValueError:
                raise ConfigError(f"bad axis value {part!r} for {axis}") from None
        if not values:
            raise ConfigError("axis_values is empty")
        return values
    defaults = DEFAULT_AXIS_VALUES[axis]
    if axis == "streams":
        profile = settings["synth"]
        if profile is None:
            raise ConfigError("streams sweep over a trace file needs axis_values")
        return list(defaults[profile])
    return list(defaults)


def _fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def _echo_settings(settings: dict, schemes=None, axis=None, axis_values=None) -> dict:
    echo = {k: settings[k] for k in ECHO_KEYS}
    echo["streams"] = _default_streams(settings)
    if schemes is not None:
        echo["schemes"] = ",".join(s.value for s in schemes)
    echo["axis"] = axis
    echo["axis_values"] = (
        ",".join(_fmt_value(v) for v in axis_values) if axis_values else None
    )
    return echo


def _axis_cell(v) -> str:
    if v is None:
        return "-"
    return _fmt_value(v)


def emit_results(fh, fmt: str, echo: dict, rows: list) -> None:
    """Write sweep rows with the effective configuration attached.

    rows entries are (axis_value, scheme, ScenarioResult).
    """
    if not rows:
        raise ValueError("no results to write")
    if fmt == "csv":
        for k in ECHO_KEYS:
            fh.write(f"# {k}={_fmt_value(echo[k])}\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for axis_value, scheme, result in rows:
            writer.writerow(
                [
                    _axis_cell(axis_value),
                    scheme.value,
                    f"{result.paused.mean:.6f}",
                    f"{result.paused.ci95_halfwidth:.6f}",
                    f"{result.energy_j.mean:.6f}",
                    f"{result.energy_j.ci95_halfwidth:.6f}",
                    result.runs,
                ]
            )
    elif fmt == "json":
        payload = {
            "config": echo,
            "results": [
                {
                    "axis_value": axis_value,
                    "scheme": scheme.value,
                    "paused_mean": result.paused.mean,
                    "paused_ci95": result.paused.ci95_halfwidth,
                    "energy_mean_j": result.energy_j.mean,
                    "energy_ci95_j": result.energy_j.ci95_halfwidth,
                    "runs": result.runs,
                }
                for axis_value, scheme, result in rows
            ],
        }
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _progress(done: int, total: int, config: ScenarioConfig) -> None:
    print(
        f"[{done}/{total}] scheme={config.scheme.value} streams={config.num_streams} "
        f"hotspots={config.num_hotspots} done",
        file=sys.stderr,
        flush=True,
    )


def _write_timeline(settings: dict, config: ScenarioConfig) -> None:
    path = settings["timeline"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TIMELINE_COLUMNS)
        run_once(config, 0, timeline=writer)


def cmd_run(args: argparse.Namespace) -> int:
    settings = merge_settings(args)
    scheme = SchemeKind.from_token(settings["scheme"])
    config = build_scenario(settings, scheme)
    started = time.monotonic()
    result = run_scenario(config, jobs=settings["jobs"])
    elapsed = time.monotonic() - started
    print(
        f"scheme={scheme.value} streams={config.num_streams} "
        f"hotspots={config.num_hotspots} runs={config.runs} ({elapsed:.1f}s)"
    )
    print(
        f"paused_frames mean={result.paused.mean:.3f} "
        f"ci95={result.paused.ci95_halfwidth:.3f}"
    )
    print(
        f"energy_j mean={result.energy_j.mean:.1f} "
        f"ci95={result.energy_j.ci95_halfwidth:.1f}"
    )
    if settings["timeline"]:
        _write_timeline(settings, config)
    if settings["out"]:
        echo = _echo_settings(settings, schemes=[scheme])
        fh, close = _open_out(settings["out"])
        try:
            emit_results(fh, settings["format"], echo, [(None, scheme, result)])
        finally:
            if close:
                fh.close()
    return 0


def _parse_schemes(settings: dict) -> list[SchemeKind]:
    tokens = [t.strip() for t in settings["schemes"].split(",") if t.strip()]
    if not tokens:
        raise ConfigError("schemes is empty")
    return [SchemeKind.from_token(t) for t in tokens]


def cmd_sweep(args: argparse.Namespace) -> int:
    settings = merge_settings(args)
    axis = settings["axis"]
    if axis is None:
        raise ConfigError("sweep needs an axis (config key axis= or flag --axis)")
    values = parse_axis_values(settings, axis)
    schemes = _parse_schemes(settings)
    field, _typ = AXIS_FIELDS[axis]

    configs = []
    for v in values:
        for scheme in schemes:
            base = build_scenario(settings, scheme)
            if axis == "streams":
                configs.append(replace(base, num_streams=int(v)))
            else:
                configs.append(replace(base, **{field: v}))
    results = sweep(configs, jobs=settings["jobs"], progress=_progress)

    rows = []
    for i, v in enumerate(values):
        for j, scheme in enumerate(schemes):
            rows.append((v, scheme, results[i * len(schemes) + j]))
    echo = _echo_settings(settings, schemes=schemes, axis=axis, axis_values=values)
    fh, close = _open_out(settings["out"])
    try:
        emit_results(fh, settings["format"], echo, rows)
    finally:
        if close:
            fh.close()
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    settings = merge_settings(args)
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    schemes = _parse_schemes(settings)
    written = []
    for axis, name in REPRODUCE_SWEEPS:
        values = parse_axis_values(settings, axis)
        field, _typ = AXIS_FIELDS[axis]
        configs = []
        for v in values:
            for scheme in schemes:
                base = build_scenario(settings, scheme)
                if axis == "streams":
                    configs.append(replace(base, num_streams=int(v)))
                else:
                    configs.append(replace(base, **{field: v}))
        print(f"sweep {name}: {len(configs)} scenarios", file=sys.stderr, flush=True)
        results = sweep(configs, jobs=settings["jobs"], progress=_progress)
        rows = []
        for i, v in enumerate(values):
            for j, scheme in enumerate(schemes):
                rows.append((v, scheme, results[i * len(schemes) + j]))
        echo = _echo_settings(settings, schemes=schemes, axis=axis, axis_values=values)
        ext = "csv" if settings["format"] == "csv" else "json"
        out_path = os.path.join(out_dir, f"{name}.{ext}")
        with open(out_path, "w", newline="") as fh:
            emit_results(fh, settings["format"], echo, rows)
        written.append(out_path)
        if not args.no_figures:
            from .plots import render_sweep_figures

            flat = [results[i * len(schemes) + j] for i in range(len(values)) for j in range(len(schemes))]
            written.extend(
                render_sweep_figures(
                    flat, axis, values, schemes, os.path.join(out_dir, name)
                )
            )
    for path in written:
        print(path)
    return 0


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--scheme", help="access scheme for single runs")
    parser.add_argument("--schemes", help="comma-separated schemes for sweeps")
    parser.add_argument("--streams", type=int, help="concurrent streams")
    parser.add_argument("--hotspots", type=int, help="hotspot count (2, 4 or 8)")
    parser.add_argument("--time-var", type=float, help="segment timing variability")
    parser.add_argument("--thr-var", type=float, help="throughput variability")
    parser.add_argument("--scale-m", type=float, help="cellular rate scale")
    parser.add_argument("--scale-w", type=float, help="WiFi radio rate scale")
    parser.add_argument("--scale-a", type=float, help="ADSL backhaul rate scale")
    parser.add_argument("--trace", help="frame trace file (fps header + sizes)")
    parser.add_argument("--synth", help="synthetic trace profile: hd or sd")
    parser.add_argument("--route", help="route CSV overriding the built-in layout")
    parser.add_argument("--runs", type=int, help="Monte Carlo repetitions")
    parser.add_argument("--seed", type=int, help="base random seed")
    parser.add_argument("--tick", type=float, help="simulation tick in seconds")
    parser.add_argument("--threshold-frames", type=int, help="startup buffer, frames")
    parser.add_argument("--warmup-s", type=float, help="WiFi warmup before hotspots")
    parser.add_argument("--ewma-weight", type=float, help="rate estimator weight")
    parser.add_argument("--energy-cellular-j-per-mb", type=float)
    parser.add_argument("--energy-cellular-idle-w", type=float)
    parser.add_argument("--energy-wifi-j-per-mb", type=float)
    parser.add_argument("--energy-wifi-idle-w", type=float)
    parser.add_argument("--axis", help=f"sweep axis: {', '.join(AXES)}")
    parser.add_argument("--axis-values", help="comma-separated sweep values")
    parser.add_argument("--out", help="output file (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--timeline", help="per-window timeline CSV (run only)")
    parser.add_argument("--jobs", type=int, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefetchsim",
        description=(
            "Trace-driven Monte Carlo simulator of vehicular video streaming "
            "over cellular and roadside WiFi, with hotspot prefetching"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and report its metrics")
    _add_shared_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter axis")
    _add_shared_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_repro = sub.add_parser(
        "reproduce", help="run the full predefined sweep suite with figures"
    )
    _add_shared_flags(p_repro)
    p_repro.add_argument(
        "--out-dir", default="prefetchsim-results", help="output directory"
    )
    p_repro.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering"
    )
    p_repro.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
