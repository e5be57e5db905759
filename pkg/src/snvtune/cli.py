"""Command line entry point: ``snvtune sim|fit|report``.

Exit codes: 0 success, 2 usage, 3 configuration, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import records
from .config import CONFIG_ENV, load_config
from .errors import ConfigError, SnvTuneError, UsageError
from .report import emit_report, load_results
from .scenarios import SCENARIOS, ScenarioFailure, run_scenario
from .spectroscopy.fit import extract_delta_ac, fit_linear, fit_lorentzian, fit_sideband_comb

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3, 4
FIT_TYPES = ("lorentzian", "sideband", "delta-ac", "linear")


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ScenarioFailure):
        exc = exc.cause
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    return EXIT_NUMERICAL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="snvtune", description="Strain-tuned SnV device simulation and fitting.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("sim", help="run a scenario (or 'all')")
    sim.add_argument("scenario", choices=SCENARIOS + ("all",))
    sim.add_argument("--config", help=f"device config JSON (default: ${CONFIG_ENV} or the shipped fixture)")
    sim.add_argument("--out", default="out", help="output directory (default: ./out)")
    sim.add_argument("--seed", type=int, help="RNG seed (default: settings.seed from the config)")
    sim.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="dotted-path config override, repeatable")
    sim.add_argument("--jobs", type=int, default=1, help="parallel scenarios for 'all'")

    fit = sub.add_parser("fit", help="fit a measured spectrum or line")
    fit.add_argument("kind", choices=FIT_TYPES)
    fit.add_argument("--in", dest="input", required=True,
                     help="CSV: detuning_ghz,signal (or x,y[,sigma] for 'linear')")
    fit.add_argument("--omega-d", type=float, help="drive frequency in GHz (sideband)")
    fit.add_argument("--gamma-ref", type=float, help="undriven linewidth in GHz (delta-ac)")
    fit.add_argument("--out", help="write the fit as JSON here instead of stdout")

    rep = sub.add_parser("report", help="consolidate scenario summaries")
    rep.add_argument("--in", dest="input", required=True, help="directory holding scenario outputs")
    rep.add_argument("--acceptance", action="store_true", help="also run the acceptance criteria")
    rep.add_argument("--config", help="config for --acceptance")
    return p


def _run_one(args):
    name, config, seed, out = args
    return run_scenario(name, config, seed=seed, out_dir=out)


def cmd_sim(args) -> int:
    config = load_config(args.config, args.overrides)
    if args.scenario == "all":
        jobs = [(n, config, args.seed, Path(args.out) / n) for n in SCENARIOS]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_run_one, jobs))
        else:
            results = [_run_one(j) for j in jobs]
    else:
        results = [run_scenario(args.scenario, config, seed=args.seed, out_dir=args.out)]
    for r in results:
        status = "ok" if all(c["pass"] for c in r.checks) else "checks failed"
        print(f"{r.name}: {status} -> {r.out_dir}")
    return EXIT_OK


def _read_xy(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise UsageError(f"{path}: expected a header and data rows")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] not in (2, 3):
        raise UsageError(f"{path}: expected 2 or 3 columns")
    return data


def cmd_fit(args) -> int:
    if not Path(args.input).is_file():
        raise UsageError(f"no such file: {args.input}")
    if args.kind == "linear":
        data = _read_xy(args.input)
        res = fit_linear(data[:, 0], data[:, 1], data[:, 2] if data.shape[1] == 3 else None)
    else:
        try:
            spec = records.read_spectrum(args.input)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.kind == "lorentzian":
            res = fit_lorentzian(spec)
        elif args.kind == "sideband":
            if args.omega_d is None:
                raise UsageError("sideband fit needs --omega-d")
            res = fit_sideband_comb(spec, args.omega_d)
        else:
            res = extract_delta_ac(spec, args.gamma_ref)
    doc = {"fit": args.kind, "input": str(args.input), "result": res.to_dict()}
    if args.out:
        records.write_json(args.out, doc)
    else:
        sys.stdout.write(records.json_text(doc))
    return EXIT_OK


def cmd_report(args) -> int:
    results = load_results(args.input)
    if args.acceptance:
        from .acceptance import run_all

        results += run_all(load_config(args.config))
    report = emit_report(results, args.input)
    sys.stdout.write(report.table)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        handler = {"sim": cmd_sim, "fit": cmd_fit, "report": cmd_report}[args.command]
        return handler(args)
    except SnvTuneError as exc:
        print(f"snvtune: error: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"snvtune: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
