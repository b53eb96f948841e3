"""Batch command-line front end."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .angular import marginal_aoa_pdf
from .config import (PRESET_NAMES, ScenarioConfig, ScenarioValidationError, apply_overrides, load_preset,
                     parse_angle, read_config_file, tap_geometry, validate_scenario)
from .io import RunManifest, Stopwatch, emit_curve
from .quadrature import QuadratureError
from .series import CurveSeries

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route bad flags through our exit code
        raise UsageError(f"{self.prog}: {message}")


def parse_grid(text: str) -> np.ndarray:
    """``start:step:stop`` (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0 or parts[2] < parts[0]:
            raise UsageError(f"grid {text!r} must be start:step:stop with a positive step and stop >= start")
        start, step, stop = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(n)
    return np.array([float(x) for x in text.split(",") if x.strip()])


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--preset", choices=PRESET_NAMES, help="start from a built-in parameter set")
    g.add_argument("--config", type=Path, help="scenario file (see docs/config.md)")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key, e.g. vmf.tcyl.k=3 or gamma_R=30deg")
    g.add_argument("--gamma-r", help="relative moving direction (radians, or with deg suffix)")
    g.add_argument("--allow-tdl-violation", action="store_true",
                   help="accept radii that break tap separability")
    o = p.add_argument_group("output")
    o.add_argument("--out", type=Path, help="CSV path (default: <command>.csv)")
    o.add_argument("--gnuplot-stub", action="store_true", help="also write a gnuplot script next to the CSV")
    o.add_argument("--threads", type=int, help="worker threads (falls back to V2V_GBSM_THREADS)")


def _geometry(p: argparse.ArgumentParser) -> None:
    p.add_argument("--geometry", choices=("exact", "corrected", "as-printed"), default="exact",
                   help="path-length model")
    p.add_argument("--as-printed", action="store_true", help="shorthand for --geometry as-printed")
    p.add_argument("--tol", type=float, help="quadrature tolerance (default 1e-5, 1e-3 for freq-cf)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="v2v-gbsm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a scenario and report every violated constraint")
    _common(p)

    p = sub.add_parser("presets", help="list the built-in scenarios")
    _common(p)

    p = sub.add_parser("aoa-pdf", help="arrival-azimuth density of an ellipsoid population")
    _common(p)
    p.add_argument("--tap", type=int)
    p.add_argument("--beamwidth", help="transmit half-beamwidth (radians or deg suffix)")
    p.add_argument("--points", type=int, default=720)

    p = sub.add_parser("realize", help="sum-of-sinusoids tap coefficient time series")
    _common(p)
    _geometry(p)
    p.add_argument("--tap", type=int)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--n", type=int, default=1000, help="scatterers per population")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--dt", type=float, help="time step in seconds (default 1/(8 f_max))")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--no-random-phase", action="store_true")
    p.add_argument("--full-product", action="store_true", help="all N1*N2 double-bounce pairs")

    p = sub.add_parser("pdp", help="power-delay profile from one scatterer ensemble")
    _common(p)
    _geometry(p)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--resolution", type=float, help="bin width in seconds (default 1/bandwidth)")

    p = sub.add_parser("space-cf", help="space CF against spacing, or temporal ACF against lag")
    _common(p)
    _geometry(p)
    p.add_argument("--tap", type=int)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--tau", default="0", help="lag in seconds, or a lag grid when --spacing is omitted")
    p.add_argument("--spacing", help="spacing grid in wavelengths, e.g. 0:0.1:3")
    p.add_argument("--side", choices=("T", "R", "both"), default="T")
    p.add_argument("--component", default="total")

    p = sub.add_parser("freq-cf", help="frequency CF against frequency lag")
    _common(p)
    _geometry(p)
    p.add_argument("--tap", type=int)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--df", default="0:1e6:20e6", help="frequency-lag grid in Hz")
    p.add_argument("--component", default="total")

    p = sub.add_parser("doppler", help="Doppler power spectral density")
    _common(p)
    _geometry(p)
    p.add_argument("--tap", type=int)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--gammas", help="Doppler grid in Hz (default +-f_max in 201 points)")
    p.add_argument("--component", default="total")
    p.add_argument("--method", choices=("standard", "cf-chain"), default="standard",
                   help="ACF transform, or the characteristic-function chain")
    p.add_argument("--window", choices=("hann", "bartlett", "rect"), default="hann")

    p = sub.add_parser("mc-verify", help="Monte Carlo space CF against quadrature")
    _common(p)
    _geometry(p)
    p.add_argument("--tap", type=int)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--spacing", default="0,1,2")
    p.add_argument("--side", choices=("T", "R", "both"), default="both")
    p.add_argument("--realizations", type=int, default=500)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full-product", action="store_true")
    p.add_argument("--no-random-phase", action="store_true")
    return parser


def resolve_config(args) -> ScenarioConfig:
    if args.config is not None:
        base = load_preset(args.preset) if args.preset else None
        cfg = read_config_file(args.config, base)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        cfg = load_preset("tap1-highway")
    items = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        items[key.strip()] = value
    if getattr(args, "gamma_r", None) is not None:
        items["gamma_R"] = args.gamma_r
    if items:
        try:
            cfg = apply_overrides(cfg, items)
        except (KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"bad override: {exc}") from None
    return cfg


def _gnuplot(csv: Path, series: CurveSeries) -> Path:
    col = 4 if series.is_complex else 2
    script = csv.with_suffix(".gp")
    script.write_text(
        "set datafile separator ','\n"
        f"set xlabel '{series.x_name} [{series.x_unit}]'\n"
        f"plot '{csv.name}' using 1:{col} every ::1 with lines title '{series.y_name}'\n"
        "pause -1\n")
    return script


def _emit(args, series: CurveSeries, cfg: ScenarioConfig, seed, warnings, watch, extra=None) -> list[str]:
    out = args.out or Path(f"{args.command}.csv")
    series.metadata.setdefault("seed", "none" if seed is None else seed)
    paths = [str(emit_curve(series, out, extra))]
    if args.gnuplot_stub:
        paths.append(str(_gnuplot(out, series)))
    manifest = RunManifest(args.command, cfg.to_dict(), seed, cfg.digest(), paths, watch.elapsed,
                           warnings=list(warnings))
    paths.append(str(manifest.write(out.with_suffix(".manifest.json"))))
    print("\n".join(paths))
    return paths


def _mode(args) -> str:
    return "as-printed" if getattr(args, "as_printed", False) else args.geometry


def _tap(args, cfg) -> int:
    return args.tap if getattr(args, "tap", None) else cfg.default_tap


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "presets":
            for name in PRESET_NAMES:
                c = load_preset(name)
                print(f"{name}: R_t={c.R_t} R_r={c.R_r} v_R={c.v_R} f_max={c.f_max} Omega={c.ricean_K} "
                      f"energy_tap1={c.energy_tap1} energy_tap2={c.energy_tapl[0]} "
                      f"k=(tcyl {c.vmf['tcyl'].k}, rcyl {c.vmf['rcyl'].k}, ell {c.vmf['ell1'].k})")
            return EXIT_OK
        cfg = resolve_config(args)
        validated = validate_scenario(cfg, allow_tdl_violation=args.allow_tdl_violation)
        for w in validated.warnings:
            print(f"warning: {w}", file=sys.stderr)
        if args.command == "validate":
            print(f"valid: {cfg.name} (hash {cfg.digest()})")
            for l in range(1, cfg.n_taps + 1):
                g = tap_geometry(validated, l)
                print(f"  tap {l}: a={g.a_l} b={g.b_l:.6g} u={g.u_l:.6g} tau={g.tau_l * 1e9:.4f} ns")
            return EXIT_OK
        return _dispatch(args, validated)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ScenarioValidationError as exc:
        print("invalid scenario:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_INVALID
    except (KeyError, OSError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _dispatch(args, validated) -> int:
    from . import realization as rz
    from . import statistics as st

    cfg = validated.config
    warnings = validated.warnings
    with Stopwatch() as watch:
        extra = None
        seed = getattr(args, "seed", None)
        if args.command == "aoa-pdf":
            bw = parse_angle(args.beamwidth) if args.beamwidth else None
            series = marginal_aoa_pdf(cfg, _tap(args, cfg), bw, args.points)
        elif args.command == "realize":
            tap = _tap(args, cfg)
            dt = args.dt or 1.0 / (8.0 * cfg.f_max)
            times = args.t0 + dt * np.arange(args.samples)
            ens = rz.build_ensemble(cfg, args.n, seed, args.full_product, not args.no_random_phase)
            series = rz.tap_coefficient(cfg, ens, tap, args.p, args.q, times, _mode(args)).as_curve()
        elif args.command == "pdp":
            ens = rz.build_ensemble(cfg, args.n, seed)
            series = rz.power_delay_profile(cfg, ens, args.resolution or 1.0 / cfg.bandwidth, args.t,
                                            mode=_mode(args))
        elif args.command == "space-cf":
            tap = _tap(args, cfg)
            if args.spacing:
                series = st.space_cf_curve(cfg, parse_grid(args.spacing), tap, args.component, args.t,
                                           float(args.tau), args.side, _mode(args), args.tol or st.DEFAULT_TOL)
            else:
                series = st.temporal_acf(cfg, parse_grid(args.tau), tap, args.t, component=args.component,
                                         mode=_mode(args), tol=args.tol or st.DEFAULT_TOL)
        elif args.command == "freq-cf":
            series = st.frequency_cf(cfg, parse_grid(args.df), _tap(args, cfg), args.t, component=args.component,
                                     mode=_mode(args), tol=args.tol or st.FREQ_TOL)
        elif args.command == "doppler":
            gammas = parse_grid(args.gammas) if args.gammas else np.linspace(-cfg.f_max, cfg.f_max, 201)
            if args.method == "cf-chain":
                series = st.doppler_psd_cf_chain(cfg, gammas, _tap(args, cfg), mode=_mode(args))
            else:
                series = st.doppler_psd_standard(cfg, gammas, _tap(args, cfg), args.t, args.component,
                                                 window=args.window, mode=_mode(args))
        elif args.command == "mc-verify":
            tap = _tap(args, cfg)
            grid = parse_grid(args.spacing)
            series = st.monte_carlo_cf(cfg, grid, tap, args.t, args.realizations, args.n, seed, args.side,
                                       _mode(args), args.threads, args.full_product, not args.no_random_phase)
            analytic = st.space_cf_curve(cfg, grid, tap, "total", args.t, 0.0, args.side, _mode(args),
                                         args.tol or st.DEFAULT_TOL).values
            inside = np.abs(series.values - analytic) <= series.band
            extra = {"analytic_re": analytic.real, "analytic_im": analytic.imag, "within_band": inside}
            print(f"{int(inside.sum())}/{inside.size} spacings inside the 3-sigma band", file=sys.stderr)
        else:  # pragma: no cover - argparse restricts choices
            raise UsageError(f"unknown command {args.command}")
    _emit(args, series, cfg, seed, warnings, watch, extra)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
