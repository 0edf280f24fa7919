"""Command-line interface.

Subcommands::

    darkfluor steady --config run.cfg
    darkfluor scan   --config run.cfg --kind power|detuning|slope --out scan.csv
    darkfluor fit    spectrum.csv --config run.cfg --out report.csv [--curve model.csv]
    darkfluor synth  --config run.cfg --seed 7 --out spectrum.csv

Exit codes: 0 ok, 2 input error, 3 solver error, 4 fit did not converge.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .atom import TWO_PI, mhz_to_angular
from .config import ConfigError, RunConfig, load_config
from .csvio import CsvFormatError, format_value, read_spectrum, write_spectrum, write_table
from .fitting import SpectrumData, SpectrumModelError, fit_spectrum, model_spectrum, synthetic_spectrum
from .master import IntegrationError
from .scans import (
    _detuning,
    _zeeman,
    detuning_scan,
    find_dips,
    locate_maximum,
    power_scan,
    threshold_slope,
)
from .steady import SteadyStateError, omega2_max, steady_state

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_NOT_CONVERGED = 4

logger = logging.getLogger("darkfluor")


def _load(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "model", None):
        cfg = replace(cfg, model=args.model)
    return cfg


def _out(args, cfg):
    return args.out or cfg.out or "-"


def cmd_steady(args):
    from .master import liouvillian
    from .scans import fluorescence_projector

    cfg = _load(args)
    params = cfg.params()
    res = steady_state(liouvillian(params), fluorescence_projector(params))
    header = ["model", "p_e", "residual", "nullspace_dim", "degenerate"]
    row = [cfg.model, res.p_e, res.residual, res.nullspace_dim, res.degenerate]
    if args.populations or cfg.show_populations:
        pops = res.populations
        header += [f"pop_{i}" for i in range(len(pops))]
        row += list(pops)
    write_table(_out(args, cfg), header, [row])
    return EXIT_OK


def _scan_power(cfg, out):
    params = cfg.params()
    centre = omega2_max(_zeeman(params), _detuning(params), params.gamma_t) / TWO_PI**2 / 1e12
    if cfg.power_start_mhz2 is None and cfg.power_stop_mhz2 is None:
        scan = locate_maximum(params, points=cfg.power_points)
        axis = scan.axis / TWO_PI**2 / 1e12
    else:
        axis = cfg.power_grid_mhz2(centre)
        scan = power_scan(params, axis * 1e12 * TWO_PI**2, diagnostics=True)
    meta = {
        "model": scan.model,
        "argmax_omega2_mhz2": scan.argmax_axis / TWO_PI**2 / 1e12,
        "max_value": scan.max_value,
        "degenerate_points": int(np.sum(scan.degenerate)),
    }
    write_table(out, ["omega2_mhz2", "fluorescence"], zip(axis, scan.values), meta)


def _scan_detuning(cfg, out):
    if cfg.model != "eight":
        raise ConfigError("detuning scans need model = eight")
    params = cfg.eight_level()
    grid = cfg.detuning_grid_mhz()
    scan = detuning_scan(params, mhz_to_angular(grid), diagnostics=True)
    dips = find_dips(scan.values)
    meta = {
        "model": scan.model,
        "b_field_mg": cfg.field_mg,
        "dips_mhz": ";".join(format_value(float(grid[i])) for i in dips) or "none",
        "degenerate_points": int(np.sum(scan.degenerate)),
    }
    write_table(out, ["detuning_ir_mhz", "p_P"], zip(grid, scan.values), meta)


def _scan_slope(cfg, out):
    params = cfg.params()
    larmor_hz = np.asarray(cfg.larmor_list_khz, dtype=float) * 1e3
    res = threshold_slope(params, larmor_hz, points=cfg.power_points)
    meta = {
        "model": cfg.model,
        "slope_mhz": res.slope_mhz,
        "intercept_mhz2": res.intercept / 1e12,
        "r_squared": res.r_squared,
        "monotone": res.monotone,
    }
    rows = zip(larmor_hz / 1e3, res.omega2_max_points / TWO_PI**2 / 1e12)
    write_table(out, ["larmor_khz", "omega2_max_mhz2"], rows, meta)
    if out != "-":
        print(f"slope_mhz={format_value(res.slope_mhz)}")


def cmd_scan(args):
    cfg = _load(args)
    out = _out(args, cfg)
    {"power": _scan_power, "detuning": _scan_detuning, "slope": _scan_slope}[args.kind](cfg, out)
    return EXIT_OK


def cmd_fit(args):
    cfg = _load(args)
    data = read_spectrum(args.spectrum)
    result = fit_spectrum(
        data, cfg.fit_initial(), free=cfg.fit_free, template=cfg.template(), max_iter=cfg.fit_max_iter
    )
    meta = {
        "converged": result.converged,
        "iterations": result.iterations,
        "residual_norm": result.residual_norm,
        "jacobian_degenerate": result.jacobian_degenerate,
        "message": result.message,
    }
    rows = []
    for name, value in result.params.items():
        unc = result.uncertainties.get(name)
        rows.append([name, value, "fixed" if unc is None else unc])
    write_table(_out(args, cfg), ["parameter", "value", "uncertainty"], rows, meta)
    if args.curve:
        grid = np.linspace(data.detunings[0], data.detunings[-1], max(4 * len(data), 200))
        curve = model_spectrum(result.params, grid, cfg.template())
        write_table(args.curve, ["detuning_ir_mhz", "counts_model"], zip(grid, curve))
    if not result.converged:
        logger.error("fit did not converge: %s", result.message)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_synth(args):
    cfg = _load(args)
    params = cfg.fit_initial()
    grid = cfg.detuning_grid_mhz()
    data = synthetic_spectrum(params, grid, noise=cfg.noise, rng=args.seed, template=cfg.template())
    if cfg.noise > 0 and np.all(data.counts > 0):
        # the noise model is known, so ship it as per-point errors for weighted fits
        data = SpectrumData(data.detunings, data.counts, cfg.noise * data.counts)
    meta = {k: v for k, v in params.items()}
    meta["noise"] = cfg.noise
    meta["seed"] = args.seed
    write_spectrum(_out(args, cfg), data, meta)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="darkfluor", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--model", choices=["four", "eight"], help="override the configured model")
        p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("steady", help="steady-state fluorescence for one parameter set")
    common(p)
    p.add_argument("--populations", action="store_true", help="also print all level populations")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("scan", help="power, IR-detuning or threshold-slope scans")
    common(p)
    p.add_argument("--kind", choices=["power", "detuning", "slope"], required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("fit", help="fit an IR spectrum to the 8-level model")
    common(p)
    p.add_argument("spectrum", help="CSV with detuning_ir_mhz, counts[, count_errors]")
    p.add_argument("--curve", help="also write the fitted model curve to this CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="write a noisy synthetic spectrum")
    common(p)
    p.add_argument("--seed", type=int, default=0, help="noise seed (unsigned 64-bit)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ConfigError, CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SteadyStateError, SpectrumModelError, IntegrationError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
