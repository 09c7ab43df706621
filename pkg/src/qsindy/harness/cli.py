"""Command-line entry point: ``qsindy <command> [options]``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from . import experiments as ex
from .config import ConfigError, load_config
from .svg import SchemaError, plot_csv

log = logging.getLogger("qsindy")

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


def write_csv(path: Path, rows: list[dict], columns: list[str] | None = None) -> Path:
    columns = columns or list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
    return path


def _fmt(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def _write_meta(out: Path, cfg, command: str) -> None:
    meta = {
        "command": command,
        "config": cfg.to_dict(),
        "base_seed": cfg.base_seed,
        "versions": {"qsindy": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, default=list) + "\n")


def _out_dir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sweep(cfg) -> int:
    out = _out_dir(cfg)
    records = ex.run_sweep(cfg)
    write_csv(out / "sweep.csv", ex.record_rows(records), ex.RECORD_COLUMNS)
    write_csv(out / "sweep_timing.csv",
              [{"system": r.system, "method": r.method, "sigma": r.sigma, "trial": r.trial,
                "wall_time_ms": r.wall_time_ms} for r in records])
    summary = ex.summarize(records)
    write_csv(out / "sweep_summary.csv", summary)
    for row in summary:
        print(f"{row['system']:<15} {row['method']:<8} sigma={row['sigma']:<6g} "
              f"mean TPR={row['mean_tpr']:.2f}  [{row['min_tpr']:.2f}, {row['max_tpr']:.2f}]")
    _write_meta(out, cfg, "sweep")
    return EXIT_OK


def cmd_rbf_grid(cfg) -> int:
    out = _out_dir(cfg)
    rows, vanilla = ex.run_rbf_grid(cfg)
    write_csv(out / "rbf_grid.csv", rows)
    print(f"vanilla mean TPR at sigma={cfg.rbf_sigma}: {vanilla:.2f}")
    for r in rows:
        print(f"gamma x{r['gamma_multiplier']:<5g} landmarks={r['landmarks']:<3d} mean TPR={r['mean_tpr']:.2f}")
    _write_meta(out, cfg, "rbf-grid")
    return EXIT_OK


def cmd_diagnose(cfg) -> int:
    out = _out_dir(cfg)
    res = ex.run_diagnostic_study(cfg)
    write_csv(out / "table2.csv", res["table2"],
              ["system", "feature_map", "frac_var_in_p", "r2_q", "severity", "reference_sigma"])
    write_csv(out / "table1.csv", res["table1"])
    (out / "correlations.json").write_text(json.dumps(res["correlations"], indent=2) + "\n")
    for r in res["table2"]:
        print(f"{r['system']:<15} {r['feature_map']:<9} frac={r['frac_var_in_p']:.3f} "
              f"R2_Q={r['r2_q']:.3f} severity={r['severity']:+.2f}")
    for name, c in res["correlations"].items():
        print(f"pearson({name}, severity): r={c['r']:.3f} p={c['p']:.3f}")
    for r in res["table1"]:
        print(f"k={r['k']} splits={r['splits']} MAE frac={r['frac_var_mae']:.3f} R2_Q={r['r2_q_mae']:.3f}")
    _write_meta(out, cfg, "diagnose")
    return EXIT_OK


def cmd_hw_noise(cfg) -> int:
    out = _out_dir(cfg)
    rows = ex.run_hw_noise(cfg)
    write_csv(out / "hw_noise.csv", rows)
    by = {}
    for r in rows:
        by.setdefault((r["p"], r["method"]), []).append(r["tpr"])
    for (p, m), v in by.items():
        print(f"p={p:<6g} {m:<8} mean TPR={np.mean(v):.2f}")
    _write_meta(out, cfg, "hw-noise")
    return EXIT_OK


def cmd_burgers(cfg) -> int:
    out = _out_dir(cfg)
    res = ex.run_burgers(cfg)
    (out / "burgers.json").write_text(json.dumps(res, indent=2) + "\n")
    print(f"R2_Q = {res['r2_q']:.3f}, frac_var_in_P = {res['frac_var_in_p']:.3f}")
    for name, m in res["methods"].items():
        terms = " ".join(f"{v:+.4f} {k}" for k, v in m["coefficients"].items())
        print(f"{name:<8} TPR={m['tpr']:.2f}  u_t = {terms}")
    _write_meta(out, cfg, "burgers")
    return EXIT_OK


def cmd_verify(cfg) -> int:
    out = _out_dir(cfg)
    reports = ex.run_verify(cfg)
    (out / "verify.json").write_text(json.dumps(reports, indent=2) + "\n")
    ok = True
    for r in reports:
        status = "PASS" if r["passed"] else "FAIL"
        ok &= r["passed"]
        print(f"{status} {r['system']:<15} {r['feature_map']:<9} bias rel err={r['max_relative_error']:.2e} "
              f"orth dev={r['orth_deviation']:.2e} stlsq dev={r['stlsq_deviation']:.2e}")
    _write_meta(out, cfg, "verify")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "sweep": cmd_sweep,
    "rbf-grid": cmd_rbf_grid,
    "diagnose": cmd_diagnose,
    "hw-noise": cmd_hw_noise,
    "burgers": cmd_burgers,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsindy", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--out", dest="output_dir", help="output directory")
        p.add_argument("--seed", dest="base_seed", type=int)
        p.add_argument("--trials", dest="n_trials", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--systems", type=lambda s: s.split(","), help="comma-separated")
        p.add_argument("--methods", type=lambda s: s.split(","), help="comma-separated")
        p.add_argument("--feature-map", dest="feature_map")
        p.add_argument("--noise-levels", dest="noise_levels",
                       type=lambda s: [float(v) for v in s.split(",")])
        p.add_argument("--depolarizing-p", dest="depolarizing_p", type=float)
        if name == "verify":
            p.add_argument("--corrupt-q", dest="corrupt_q", type=float,
                           help="perturb one projected entry (negative control)")
    p = sub.add_parser("plot")
    p.add_argument("csv", help="result CSV from sweep, rbf-grid or hw-noise")
    p.add_argument("--out", help="directory for SVG files (default: next to the CSV)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "plot":
        try:
            for path in plot_csv(args.csv, args.out):
                print(path)
        except (SchemaError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return EXIT_OK
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        cfg = load_config(args.config, **overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
