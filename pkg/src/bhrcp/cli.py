"""Command-line interface.

Subcommands
-----------
detect     full pipeline: two OHLC CSVs -> changepoint report
transform  stop after the standard-Gumbel transform, emit series CSV
chi        dependence diagnostics only
simulate   criticals | power | consistency, driven by a TOML config

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 a diagnostics
warning escalated by --strict.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .backend import BACKEND_NAME
from .dependence import (
    cross_madogram_chi,
    empirical_chi_lower,
    empirical_chi_upper,
    independence_bootstrap_test,
    lagged_chi,
)
from .errors import DataError, DiagnosticsWarning, NumericalError
from .ohlc import CsvSchema
from .pipeline import (
    PipelineConfig,
    run_pipeline,
    standardized_series,
    write_margins_csv,
    write_markdown,
    write_profiles_csv,
)
from .rng import RandomStream
from .simulate import (
    CriticalValueTable,
    SimulationConfig,
    simulate_consistency,
    simulate_critical_values,
    simulate_power,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_DIAGNOSTICS = 4

log = logging.getLogger("bhrcp")


def _load_schema(path: str | None) -> CsvSchema:
    if not path:
        return CsvSchema()
    with open(path) as fh:
        return CsvSchema.from_dict(json.load(fh))


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("x_csv", help="OHLC CSV for the first asset")
    p.add_argument("y_csv", help="OHLC CSV for the second asset")
    p.add_argument("--window", type=int, default=100, help="local PWM window size")
    p.add_argument("--tail", choices=["max", "min", "both"], default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schema", help="JSON file with CSV column mapping (applies to both inputs)")
    p.add_argument("--x-name", default="X")
    p.add_argument("--y-name", default="Y")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bhrcp", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"bhrcp {__version__} ({BACKEND_NAME})")
    parser.add_argument("--strict", action="store_true",
                        help="escalate diagnostics warnings to exit code 4")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="run the full detection pipeline")
    _add_data_args(p_detect)
    p_detect.add_argument("--bootstrap-b", type=int, default=2000,
                          help="bootstrap replicates for p-values (0 skips)")
    p_detect.add_argument("--alpha", type=float, default=0.05)
    p_detect.add_argument("--workers", type=int, default=None)
    p_detect.add_argument("--out", default="bhrcp-report", help="output directory")

    p_tr = sub.add_parser("transform", help="emit standardized series and stop")
    _add_data_args(p_tr)
    p_tr.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    p_chi = sub.add_parser("chi", help="dependence diagnostics only")
    _add_data_args(p_chi)
    p_chi.add_argument("--alpha", type=float, default=0.05)
    p_chi.add_argument("--levels", type=float, nargs="+", default=[0.9, 0.95, 0.98])
    p_chi.add_argument("--lags", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p_chi.add_argument("--bootstrap-b", type=int, default=1000)
    p_chi.add_argument("--out", default="-", help="output JSON path ('-' for stdout)")

    p_sim = sub.add_parser("simulate", help="Monte Carlo studies from a TOML config")
    p_sim.add_argument("kind", choices=["criticals", "power", "consistency"])
    p_sim.add_argument("--config", required=True, help="TOML config file")
    p_sim.add_argument("--out", default="-", help="output path stem ('-' for stdout)")
    p_sim.add_argument("--workers", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--table", help="critical-value table CSV (for power)")
    return parser


def _pipeline_config(args, bootstrap_b=0, alpha=0.05, workers=1) -> PipelineConfig:
    schema = _load_schema(args.schema)
    return PipelineConfig(
        x_csv=args.x_csv,
        y_csv=args.y_csv,
        x_name=args.x_name,
        y_name=args.y_name,
        window=args.window,
        tail=args.tail,
        bootstrap_b=bootstrap_b,
        seed=args.seed,
        alpha=alpha,
        workers=workers or 1,
        schema_x=schema,
        schema_y=schema,
    )


def _cmd_detect(args) -> int:
    cfg = _pipeline_config(args, bootstrap_b=args.bootstrap_b, alpha=args.alpha,
                           workers=args.workers or (os.cpu_count() or 1))
    report = run_pipeline(cfg)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(report.to_json())
    with open(os.path.join(args.out, "report.md"), "w") as fh:
        fh.write(write_markdown(report))
    with open(os.path.join(args.out, "profiles.csv"), "w", newline="") as fh:
        write_profiles_csv(report, fh)
    with open(os.path.join(args.out, "margins.csv"), "w", newline="") as fh:
        write_margins_csv(report, fh)
    print(write_markdown(report))
    log.info("report written to %s", args.out)
    return EXIT_OK


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _cmd_transform(args) -> int:
    cfg = _pipeline_config(args)
    _, standardized = standardized_series(cfg)
    fh, should_close = _open_out(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["tail", "date", "x", "y"])
        for tail, (dates, _profiles, pairs) in standardized.items():
            for d, xv, yv in zip(dates, pairs.x, pairs.y):
                w.writerow([tail, d.isoformat(), repr(float(xv)), repr(float(yv))])
    finally:
        if should_close:
            fh.close()
    return EXIT_OK


def _cmd_chi(args) -> int:
    cfg = _pipeline_config(args, alpha=args.alpha)
    _, standardized = standardized_series(cfg)
    stream = RandomStream(args.seed)
    out = {}
    for tail, (dates, _profiles, pairs) in standardized.items():
        indep = independence_bootstrap_test(pairs, args.bootstrap_b, args.alpha,
                                            stream.substream(0 if tail == "max" else 1))
        out[tail] = {
            "n_pairs": len(pairs),
            "cross_chi_madogram": cross_madogram_chi(pairs),
            "chi_upper": {repr(u): empirical_chi_upper(pairs, u).chi_hat for u in args.levels},
            "chi_lower": {repr(round(1 - u, 12)): empirical_chi_lower(pairs, 1 - u).chi_hat
                          for u in args.levels},
            "lagged_chi_x": {str(h): lagged_chi(pairs.x, h) for h in args.lags},
            "lagged_chi_y": {str(h): lagged_chi(pairs.y, h) for h in args.lags},
            "independence_test": {
                "observed_chi": indep.observed_chi,
                "critical_value": indep.critical_value,
                "reject": indep.reject,
                "alpha": indep.alpha,
                "n_boot": indep.n_boot,
            },
        }
    text = json.dumps(out, indent=2)
    if args.out == "-":
        print(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def _sim_config(section: dict, seed_override) -> SimulationConfig:
    seed = seed_override if seed_override is not None else section.get("seed", 0)
    return SimulationConfig(
        B=section.get("B", 10_000),
        seed=seed,
        T=section["T"],
        lambda1=section["lambda1"],
        lambdaT=section.get("lambdaT"),
        beta=section.get("beta", 0.5),
        alphas=tuple(section.get("alphas", [0.01, 0.05, 0.1])),
        deltas=tuple(section.get("deltas", [1, 2, 3])),
    )


def _cmd_simulate(args) -> int:
    with open(args.config, "rb") as fh:
        conf = tomllib.load(fh)
    runs = conf.get("run")
    if runs is None:
        raise DataError(f"{args.config}: expected one or more [[run]] sections")
    workers = args.workers

    if args.kind == "criticals":
        table = CriticalValueTable([])
        for section in runs:
            cfg = _sim_config(section, args.seed)
            table = table.extend(simulate_critical_values(cfg, workers=workers))
            log.info("criticals done for T=%d lambda=%g", cfg.T, cfg.lambda1)
        if args.out == "-":
            for e in table.entries:
                print(e)
        else:
            table.to_csv(args.out + ".csv")
            table.to_json(args.out + ".json")
            log.info("table written to %s.{csv,json}", args.out)
        return EXIT_OK

    if args.kind == "power":
        if not args.table:
            raise DataError("power simulation needs --table with critical values")
        table = CriticalValueTable.from_csv(args.table)
        rows = []
        for section in runs:
            cfg = _sim_config(section, args.seed)
            res = simulate_power(cfg, table, workers=workers)
            for method, by_alpha in res.powers.items():
                for alpha, power in by_alpha.items():
                    rows.append({
                        "method": method, "T": cfg.T, "lambda1": cfg.lambda1,
                        "lambdaT": cfg.lambdaT, "beta": cfg.beta, "alpha": alpha,
                        "power": power, "B": res.n_valid,
                    })
        return _emit_rows(rows, args.out)

    rows = []
    for section in runs:
        cfg = _sim_config(section, args.seed)
        res = simulate_consistency(cfg, workers=workers)
        for method in res.inclusion:
            row = {
                "method": method, "T": cfg.T, "lambda1": cfg.lambda1,
                "lambdaT": cfg.lambdaT, "beta": cfg.beta,
                "bias": res.bias[method], "mse": res.mse[method], "B": res.n_valid,
            }
            for d, p in res.inclusion[method].items():
                row[f"p_within_{d}"] = p
            rows.append(row)
    return _emit_rows(rows, args.out)


def _emit_rows(rows: list[dict], out: str) -> int:
    if out == "-":
        print(json.dumps(rows, indent=2))
        return EXIT_OK
    with open(out + ".json", "w") as fh:
        json.dump(rows, fh, indent=2)
    with open(out + ".csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    handlers = {
        "detect": _cmd_detect,
        "transform": _cmd_transform,
        "chi": _cmd_chi,
        "simulate": _cmd_simulate,
    }
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DiagnosticsWarning)
            code = handlers[args.command](args)
        diagnostics = [w for w in caught if issubclass(w.category, DiagnosticsWarning)]
        for w in diagnostics:
            log.warning("%s", w.message)
        if diagnostics and args.strict:
            return EXIT_DIAGNOSTICS
        return code
    except DataError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
