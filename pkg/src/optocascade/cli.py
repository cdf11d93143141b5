"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, RunConfig
from .integrator import StiffnessError
from .model import InvalidParameterError, is_strong_coupling, normal_mode_frequencies
from .moments import NoSteadyStateError, steady_state
from .oracle import TruncationError, run_oracle, source_cutoff
from .scenarios import FIGURES, TimeSeries, peak_census, preset, revival_count, run_scenario

OUTPUT_DIR_ENV = "OPTOCASCADE_OUTPUT_DIR"
CSV_HEADER = "t,n_a,n_b,re_cross"
LEAKAGE_THRESHOLD = 1e-5
SWEEPABLE = ("kappa", "gamma", "mu", "nbar", "omega_m", "delta", "g", "nbar_init")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (StiffnessError, NoSteadyStateError, TruncationError, np.linalg.LinAlgError, FloatingPointError)


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"optocascade: {msg}", file=sys.stderr)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def write_csv(path, times, n_a, n_b, cross) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in zip(times, n_a, n_b, cross):
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")


def write_sidecar(csv_path, record: dict) -> Path:
    path = Path(str(csv_path) + ".meta.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(record, sort_keys=True, indent=2, default=str) + "\n")
    return path


def _try_plot(path, title, curves) -> None:
    try:
        from .plotting import plot_series

        Path(path).parent.mkdir(parents=True, exist_ok=True)
        plot_series(path, title, curves)
    except Exception as exc:  # plots are a convenience; the CSV is authoritative
        _err(f"warning: plot {path} not written ({exc})")


def _resolve_config(args) -> RunConfig:
    cfg = cfgmod.from_preset(args.preset) if getattr(args, "preset", None) else cfgmod.default_config()
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = cfgmod.loads(text, base=cfg)
    pairs = cfgmod.parse_overrides(getattr(args, "overrides", []) or [])
    if getattr(args, "mode", None):
        pairs["mode"] = args.mode
    if getattr(args, "method", None):
        pairs["method"] = args.method
    return cfgmod.apply_overrides(cfg, pairs) if pairs else cfg


def _csv_path(cfg: RunConfig, explicit) -> Path:
    if explicit:
        return Path(explicit)
    if cfg.output.get("csv"):
        return Path(cfg.output["csv"])
    base = Path(cfg.output["dir"]) if cfg.output.get("dir") else output_dir()
    return base / f"{cfg.scenario.name}.csv"


def _oracle_series(cfg: RunConfig, times) -> tuple[TimeSeries, dict]:
    s = cfg.scenario
    # the source only decays, so its cutoff just has to hold the initial state
    trunc = replace(cfg.trunc, n_c_max=max(cfg.trunc.n_c_max, source_cutoff(s.source)))
    traj = run_oracle(s.params, s.source, trunc, times, t_relax=cfg.t_relax, nbar_init=s.nbar_init,
                      rel_tol=cfg.rtol, abs_tol=cfg.atol)
    leak = traj.leakage.max(axis=0)
    info = {
        "cutoffs": [trunc.n_a_max, trunc.n_b_max, trunc.n_c_max],
        "t_relax": cfg.t_relax,
        "max_leakage": {"a": float(leak[0]), "b": float(leak[1]), "c": float(leak[2])},
        "trace_drift": traj.trace_drift,
        "min_eigenvalue": traj.min_eigenvalue,
    }
    ts = TimeSeries(times=traj.times, n_a=traj.n_a, n_b=traj.n_b, cross=2 * traj.values["adc"].real)
    return ts, info


def _leakage_warning(info: dict, cfg: RunConfig) -> None:
    leak = info["max_leakage"]
    modes = ["a", "b"] + ([] if cfg.scenario.source.kind == "fock" else ["c"])
    worst = max(leak[m] for m in modes)
    if worst > LEAKAGE_THRESHOLD:
        _err(f"warning: truncation not certified, top-level population {worst:.3g} > {LEAKAGE_THRESHOLD:g}")


def _metadata(cfg: RunConfig, mode: str, extra: dict | None = None) -> dict:
    record = {"mode": mode, "config": cfgmod.dumps(cfg)}
    if extra:
        record.update(extra)
    return record


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args)
    out = _csv_path(cfg, args.out)
    plot = args.plot or cfg.output.get("plot")
    s = cfg.scenario
    moments = None
    if cfg.mode in ("moments", "both"):
        moments = run_scenario(s, rel_tol=cfg.rtol, abs_tol=cfg.atol, method=cfg.method, step=cfg.step)
        write_csv(out, moments.times, moments.n_a, moments.n_b, moments.cross)
        write_sidecar(out, _metadata(cfg, "moments", {"solver": moments.metadata["solver"]}))
        print(f"wrote {out}")
    if cfg.mode in ("oracle", "both"):
        times = np.linspace(0.0, s.t_end, s.samples)
        oracle, info = _oracle_series(cfg, times)
        oracle_out = out.with_name(out.stem + ".oracle.csv") if cfg.mode == "both" else out
        write_csv(oracle_out, oracle.times, oracle.n_a, oracle.n_b, oracle.cross)
        write_sidecar(oracle_out, _metadata(cfg, "oracle", {"oracle": info}))
        _leakage_warning(info, cfg)
        print(f"wrote {oracle_out}")
        if moments is not None:
            dev = float(np.max(np.abs(moments.n_a - oracle.n_a)))
            print(f"max|Δn_a| = {dev:.6e}")
    if plot:
        src = moments if moments is not None else oracle
        _try_plot(plot, s.name, [("n_a", src.times, src.n_a), ("n_b", src.times, src.n_b)])
    return EXIT_OK


def cmd_oracle(args) -> int:
    args.mode = "oracle"
    return cmd_simulate(args)


def _number(z: complex):
    return float(z.real) if z.imag == 0 else {"re": float(z.real), "im": float(z.imag)}


def cmd_modes(args) -> int:
    p = _resolve_config(args).scenario.params
    nm = normal_mode_frequencies(p)
    record = {
        "omega_plus": _number(nm.omega_plus),
        "omega_minus": _number(nm.omega_minus),
        "oscillatory": nm.oscillatory,
        "strong_coupling": is_strong_coupling(p),
    }
    print(json.dumps(record))
    return EXIT_OK


def cmd_steady_state(args) -> int:
    cfg = _resolve_config(args)
    p = cfg.scenario.params
    nbar = cfg.scenario.nbar_init if args.nbar is None else args.nbar
    corr = steady_state(p, nbar)
    labels = ("a", "ad", "b", "bd")
    record = {
        "nbar": nbar,
        "n_a": float(corr[1, 0].real),
        "n_b": float(corr[3, 2].real),
        "moments": {f"{labels[j]} {labels[k]}": _number(complex(corr[j, k])) for j in range(4) for k in range(4)},
    }
    print(json.dumps(record, indent=2 if args.pretty else None))
    return EXIT_OK


def parse_axis(spec: str) -> tuple[str, list[float]]:
    """``key=v1,v2,...``, ``key=lin:start:stop:n`` or ``key=log:start:stop:n``."""
    key, sep, grid = spec.partition("=")
    key = key.strip()
    if not sep or key not in SWEEPABLE:
        raise UsageError(f"malformed axis {spec!r}; expected key=values with key in {', '.join(SWEEPABLE)}")
    try:
        if grid.startswith(("lin:", "log:")):
            kind, start, stop, n = grid.split(":")
            n = int(n)
            if n < 1:
                raise ValueError("grid needs at least one point")
            if kind == "lin":
                values = np.linspace(float(start), float(stop), n).tolist()
            else:
                if float(start) <= 0 or float(stop) <= 0:
                    raise ValueError("log grid bounds must be positive")
                values = np.geomspace(float(start), float(stop), n).tolist()
        else:
            values = [float(v) for v in grid.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed axis {spec!r}: {exc}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise UsageError(f"malformed axis {spec!r}")
    return key, [float(v) for v in values]


def _sweep_point(config_text: str, key: str, value: float) -> dict:
    cfg = cfgmod.loads(config_text)
    cfg = cfgmod.apply_overrides(cfg, {key: repr(value)})
    ts = run_scenario(cfg.scenario, rel_tol=cfg.rtol, abs_tol=cfg.atol, method=cfg.method, step=cfg.step)
    peaks = peak_census(ts)
    return {
        key: value,
        "peak_n_a": float(np.max(ts.n_a)),
        "revivals": revival_count(ts),
        "t_first_peak": peaks[0][0] if peaks else float("nan"),
        "n_b0": float(ts.n_b[0]),
    }


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    key, values = parse_axis(args.axis)
    text = cfgmod.dumps(cfg)
    workers = args.workers or os.cpu_count() or 1
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(values))) as pool:
            rows = list(pool.map(_sweep_point, [text] * len(values), [key] * len(values), values))
    else:
        rows = [_sweep_point(text, key, v) for v in values]
    header = [key, "peak_n_a", "revivals", "t_first_peak", "n_b0"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[h]) if h == "revivals" else _fmt(row[h]) for h in header))
    body = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
        write_sidecar(args.out, _metadata(cfg, "sweep", {"axis": args.axis}))
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    if args.figure not in FIGURES:
        raise UsageError(f"unknown figure {args.figure!r}; choose from {', '.join(FIGURES)}")
    outdir = Path(args.outdir) if args.outdir else output_dir()
    curves = []
    for name in FIGURES[args.figure]:
        s = preset(name)
        ts = run_scenario(s, method=args.method or "adaptive")
        path = outdir / f"{name}.csv"
        write_csv(path, ts.times, ts.n_a, ts.n_b, ts.cross)
        write_sidecar(path, {"mode": "moments", "config": cfgmod.dumps(cfgmod.default_config(s))})
        peaks = peak_census(ts)
        print(f"{name}: {len(peaks)} maxima of n_a, peak {max(ts.n_a):.6g}, wrote {path}")
        curves.append((name, ts, s))
    lines = []
    for name, ts, s in curves:
        lines.append((f"{name} n_a", ts.times, ts.n_a))
        if args.figure == "fig2b":
            lines.append((f"{name} n_b", ts.times, ts.n_b))
    if not args.no_plot:
        _try_plot(outdir / f"{args.figure}.svg", args.figure, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="optocascade",
                                 description="Single-photon driven opto-mechanical cavity: moments and Fock oracle")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("--preset", help="start from a registered scenario")
        p.add_argument("--config", help="configuration file with [params] [source] [solver] [output]")
        p.add_argument("overrides", nargs="*", metavar="key=value", help="override any configuration key")
        if with_out:
            p.add_argument("--out", help="CSV output path")

    p = sub.add_parser("simulate", help="integrate a scenario and write t,n_a,n_b,re_cross")
    common(p)
    p.add_argument("--mode", choices=cfgmod.MODES)
    p.add_argument("--method", choices=cfgmod.METHODS)
    p.add_argument("--plot", help="SVG plot path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="run the truncated Fock-space master equation")
    common(p)
    p.add_argument("--plot", help="SVG plot path")
    p.add_argument("--method", choices=cfgmod.METHODS)
    p.set_defaults(func=cmd_oracle, mode=None)

    p = sub.add_parser("modes", help="normal-mode frequencies and coupling regime")
    common(p, with_out=False)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("steady-state", help="pre-injection steady-state moments")
    common(p, with_out=False)
    p.add_argument("--nbar", type=float, help="initial-condition occupation (default: nbar_init)")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_steady_state)

    p = sub.add_parser("sweep", help="scan one parameter and summarise each run")
    common(p)
    p.add_argument("--axis", required=True, help="key=v1,v2,... | key=lin:a:b:n | key=log:a:b:n")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")
    p.add_argument("--method", choices=cfgmod.METHODS)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="run the presets of one figure")
    p.add_argument("figure", help=f"one of {', '.join(FIGURES)}")
    p.add_argument("--outdir")
    p.add_argument("--method", choices=cfgmod.METHODS)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ConfigError, UsageError, InvalidParameterError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
