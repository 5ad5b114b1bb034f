"""Command-line front end.

Subcommands: ``simulate``, ``dgp-sample``, ``assign``, ``estimate``,
``bound``.  Exit codes: 0 on success, 2 for configuration problems, 3 for
malformed data files.  Every output file gets a sibling ``.manifest.json``
recording the config snapshot, seed, code version and timestamps.  Numeric
CSV values are written with full round-trip precision.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import assignment as asg
from . import estimators as est
from .bounds import bound_report
from .config import ConfigError, load_config
from .crossfit import crossfit_mhat, make_folds
from .harness import SimConfig, materialize_design, render_tables, run_table
from .population import make_dgp, sample_population

__all__ = ["main", "DataError"]


class DataError(Exception):
    """Malformed input data; carries the file path and row when known."""

    def __init__(self, message: str, path: str | None = None, row: int | None = None):
        prefix = ""
        if path is not None:
            prefix = f"{path}:row {row}: " if row is not None else f"{path}: "
        super().__init__(prefix + message)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError("file is empty", str(path)) from None
            rows = []
            for i, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DataError(
                        f"expected {len(header)} fields, found {len(row)}", str(path), i)
                rows.append(row)
    except OSError as exc:
        raise DataError(f"cannot read file: {exc}", str(path)) from None
    return header, rows


def _column(path, header, rows, name, kind=float) -> np.ndarray:
    try:
        idx = header.index(name)
    except ValueError:
        raise DataError(f"missing required column {name!r}", str(path)) from None
    out = np.empty(len(rows), dtype=float if kind is float else int)
    for i, row in enumerate(rows):
        try:
            out[i] = kind(row[idx])
        except ValueError:
            raise DataError(f"column {name!r} has non-numeric value {row[idx]!r}",
                            str(path), i + 2) from None
    return out


def _z_columns(path, header, rows, k: int | None = None) -> np.ndarray:
    names = [h for h in header if h.startswith("z") and h[1:].isdigit()]
    names.sort(key=lambda h: int(h[1:]))
    if not names:
        raise DataError("no covariate columns z1..zk found", str(path))
    if [int(h[1:]) for h in names] != list(range(1, len(names) + 1)):
        raise DataError(f"covariate columns must be z1..z{len(names)} without gaps", str(path))
    if k is not None and len(names) != k:
        raise DataError(f"expected {k} covariate columns for this DGP, found {len(names)}",
                        str(path))
    return np.column_stack([_column(path, header, rows, name) for name in names])


def _write_manifest(out_path, config_snapshot, seed, outputs, started) -> None:
    manifest = {
        "tool": "carate",
        "code_version": __version__,
        "config": config_snapshot,
        "master_seed": seed,
        "started": started,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "outputs": [str(p) for p in outputs],
    }
    Path(f"{out_path}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _config_snapshot(config: SimConfig) -> dict:
    return dataclasses.asdict(config)


def _single_dgp(config: SimConfig, command: str) -> str:
    if len(config.dgps) != 1:
        raise ConfigError(f"'{command}' needs a config with exactly one dgp, got {config.dgps}")
    return config.dgps[0]


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if overrides:
        config = dataclasses.replace(config, **overrides)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")

    if args.full:
        print("warning: --full runs the complete 4-table grid at 5000 replications; "
              "expect hours of runtime", file=sys.stderr)
        base = dataclasses.replace(
            config, dgps=("dgp1", "dgp2", "dgp3", "dgp4"),
            n_grid=(500, 1000, 2000, 4000, 8000), reps=5000, breakpoints=None)
        rows = []
        for num_strata in (5, 20):
            for mode in ("constant", "varying"):
                rows.extend(run_table(dataclasses.replace(
                    base, num_strata=num_strata, proportions=mode)))
    else:
        rows = run_table(config)

    out = Path(args.out)
    header = ["dgp", "n", "num_strata", "proportions", "mechanism", "folds", "estimator",
              "reps_used", "degenerate_count", "mse_root_n", "bias_root_n",
              "mc_se_mse", "mc_se_bias", "unreliable", "v_star", "v_sat"]
    _write_csv(out, header, [
        [r.dgp, r.n, r.num_strata, r.proportions, r.mechanism, r.folds, r.estimator,
         r.reps_used, r.degenerate_count, r.mse_root_n, r.bias_root_n,
         r.mc_se_mse, r.mc_se_bias, r.unreliable, r.v_star, r.v_sat]
        for r in rows
    ])
    tables_path = out.with_name(out.stem + "_tables.txt")
    tables_path.write_text(render_tables(rows))
    _write_manifest(out, _config_snapshot(config), config.seed, [out, tables_path], started)
    return 0


def _cmd_dgp_sample(args) -> int:
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    spec = make_dgp(args.dgp)
    sample = sample_population(spec, args.n, args.seed)
    header = ["y0", "y1"] + [f"z{j + 1}" for j in range(spec.dim_k)]
    rows = [[sample.y0[i], sample.y1[i], *sample.z[i]] for i in range(sample.n)]
    _write_csv(args.out, header, rows)
    _write_manifest(args.out, {"dgp": args.dgp, "n": args.n}, args.seed, [args.out], started)
    return 0


def _cmd_assign(args) -> int:
    config = load_config(args.config)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    design = materialize_design(config, _single_dgp(config, "assign"))
    header, rows = _read_csv(args.infile)
    z = _z_columns(args.infile, header, rows)
    try:
        labels = design.strata.classify(z)
    except ValueError as exc:
        raise DataError(str(exc), str(args.infile)) from None
    a = asg.assign(config.mechanism, labels, design.pi, args.seed)

    out_header = list(header) + ["stratum", "a"]
    extra = [labels, a]
    if "y0" in header and "y1" in header:
        y0 = _column(args.infile, header, rows, "y0")
        y1 = _column(args.infile, header, rows, "y1")
        out_header.append("y")
        extra.append(np.where(a == 1, y1, y0))
    out_rows = []
    for i, row in enumerate(rows):
        values = list(row) + [col[i] for col in extra]
        out_rows.append(values)
    _write_csv(args.out, out_header, out_rows)
    _write_manifest(args.out, _config_snapshot(config), args.seed, [args.out], started)
    return 0


def _cmd_estimate(args) -> int:
    config = load_config(args.config)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    design = materialize_design(config, _single_dgp(config, "estimate"))
    header, rows = _read_csv(args.infile)
    z = _z_columns(args.infile, header, rows, k=design.spec.dim_k)
    y = _column(args.infile, header, rows, "y")
    a = _column(args.infile, header, rows, "a", kind=int)
    if "stratum" in header:
        labels = _column(args.infile, header, rows, "stratum", kind=int).astype(int)
    else:
        try:
            labels = design.strata.classify(z)
        except ValueError as exc:
            raise DataError(str(exc), str(args.infile)) from None
    try:
        frame = asg.ExperimentFrame(z=z, labels=labels, assignments=a.astype(int), observed_y=y)
    except ValueError as exc:
        raise DataError(str(exc), str(args.infile)) from None

    plan = make_folds(frame.labels, frame.assignments, config.folds, args.fold_seed)
    fits = crossfit_mhat(frame, plan, design.kernel)
    records = [
        est.est_aipw_infeasible(frame, design.spec, design.pi),
        est.est_aipw_feasible(frame, fits, design.pi, config.propensity_mode),
        est.est_sat(frame),
        est.est_imp(frame, fits),
    ]
    _write_csv(args.out, ["estimator", "n", "value", "flags"],
               [[r.estimator, r.n, r.value, ";".join(r.flags)] for r in records])
    _write_manifest(args.out, _config_snapshot(config), args.fold_seed, [args.out], started)
    return 0


def _cmd_bound(args) -> int:
    config = load_config(args.config)
    started = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    draws = args.draws if args.draws is not None else config.bound_draws
    seed = args.seed if args.seed is not None else config.seed
    out_rows = []
    for dgp in config.dgps:
        design = materialize_design(config, dgp)
        report = bound_report(design.spec, design.strata, design.pi, draws, seed)
        out_rows.append([dgp, report.v_star, report.mc_se_vstar,
                         report.v_sat, report.mc_se_vsat, report.mc_draws])
    _write_csv(args.out, ["dgp", "v_star", "mc_se_vstar", "v_sat", "mc_se_vsat", "draws"],
               out_rows)
    _write_manifest(args.out, _config_snapshot(config), seed, [args.out], started)
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carate",
        description="Simulation and estimation toolkit for ATE estimation "
                    "under covariate-adaptive randomization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the Monte Carlo grid from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="results.csv")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--full", action="store_true",
                   help="complete 4-table grid at 5000 replications (slow)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("dgp-sample", help="draw potential outcomes and covariates to CSV")
    p.add_argument("--dgp", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="sample.csv")
    p.set_defaults(func=_cmd_dgp_sample)

    p = sub.add_parser("assign", help="append stratum and assignment columns to a covariate CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="assigned.csv")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_assign)

    p = sub.add_parser("estimate", help="compute all estimators on a realized frame CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default="estimates.csv")
    p.add_argument("--fold-seed", type=int, default=0)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bound", help="evaluate the variance-bound oracles")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="bounds.csv")
    p.add_argument("--draws", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_bound)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
