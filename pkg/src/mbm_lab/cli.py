"""Command-line interface.

``mbm-lab <subcommand> --config <path> [--seed N] [--out DIR] [--replicas N]``

Subcommands:

* ``simulate``  — generate the configured path ensemble; one CSV per replica
  (columns t, value) with a JSON metadata sidecar and an ensemble manifest.
* ``localtime`` — generate paths, build local-time fields, and store the
  final-time level profiles (columns x, local_time) plus mass-conservation
  diagnostics.
* ``verify``    — run the configured statistics (optionally one, via
  ``--statistic``) and write curves + a versioned JSON report; the exit code
  aggregates verdicts (0 pass, 2 statistical failure, 1 execution error).
* ``constants`` — evaluate the closed-form constant tables (small-ball
  constants, ordered-simplex integrals) and write/print them.
* ``report``    — render matplotlib PNG figures for every curve stored by a
  previous run, alongside the delimited output.

Flags override config keys (flags win); only the output directory has an
environment default (``MBM_LAB_OUT``).  Every run requires an explicit seed,
either in the config or via ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .config import (
    ExperimentConfig,
    StatisticSpec,
    apply_overrides,
    parse_config,
)
from .errors import ConfigError, MbmLabError
from .harness import (
    EXIT_ERROR,
    EXIT_FAIL,
    EXIT_PASS,
    mc_ensemble,
    run_experiment,
)
from .localtime import local_time_field
from .report import (
    REPORT_VERSION,
    render_report_figures,
    write_csv,
    write_json,
    write_report,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbm-lab",
        description="Simulation and statistical verification laboratory for "
                    "multifractional Brownian motion and its local times.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("simulate", "generate a path ensemble and store it as CSV + metadata"),
        ("localtime", "build local-time fields and store level profiles"),
        ("verify", "run configured statistics and write a verdict report"),
        ("constants", "evaluate closed-form constant tables"),
        ("report", "render figures for stored curves"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=(name != "report"),
                       help="path to the JSON experiment config")
        p.add_argument("--seed", type=int, default=None,
                       help="master seed (overrides the config)")
        p.add_argument("--out", default=None,
                       help="output directory (overrides the config)")
        p.add_argument("--replicas", type=int, default=None,
                       help="ensemble size (overrides the config)")
        if name == "verify":
            p.add_argument("--statistic", default=None,
                           help="run only this statistic from the config")
    return parser


def _load_config(args) -> ExperimentConfig:
    with open(args.config, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("$", f"invalid JSON: {exc}")]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([("$", f"top level must be an object, "
                                 f"got {type(raw).__name__}")])
    raw = apply_overrides(raw, seed=args.seed, out=args.out, replicas=args.replicas)
    return parse_config(raw)


def _print_config_error(exc: ConfigError) -> None:
    print("configuration rejected:", file=sys.stderr)
    for path, message in exc.violations:
        print(f"  {path}: {message}", file=sys.stderr)


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    t_start = time.perf_counter()
    ens = mc_ensemble(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    times = cfg.grid.times()
    files = []
    for i, path in enumerate(ens.replicas):
        stem = f"replica-{i:04d}"
        write_csv(os.path.join(cfg.out_dir, f"{stem}.csv"),
                  ["t", "value"], zip(times.tolist(), path.values.tolist()))
        write_json(os.path.join(cfg.out_dir, f"{stem}.meta.json"),
                   {"grid": {"t0": cfg.grid.t0, "dt": cfg.grid.dt, "n": cfg.grid.n},
                    "meta": path.meta})
        files.append(f"{stem}.csv")
    write_json(os.path.join(cfg.out_dir, "ensemble.json"), {
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "files": files,
        "failed_replicas": ens.config.get("failed_replicas", []),
        "timing": {"elapsed_seconds": round(time.perf_counter() - t_start, 3)},
    })
    print(f"wrote {len(files)} replica paths to {cfg.out_dir}")
    return EXIT_PASS


def _cmd_localtime(args) -> int:
    cfg = _load_config(args)
    t_start = time.perf_counter()
    ens = mc_ensemble(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    files = []
    worst_mass = 0.0
    for i, path in enumerate(ens.replicas):
        fld = local_time_field(path)
        stem = f"localtime-{i:04d}"
        profile = fld.table[-1]
        write_csv(os.path.join(cfg.out_dir, f"{stem}.csv"),
                  ["x", "local_time"],
                  zip(fld.x_grid.centers().tolist(), profile.tolist()))
        mass = float(profile.sum() * fld.x_grid.dx)
        expected = cfg.grid.horizon
        worst_mass = max(worst_mass, abs(mass - expected))
        files.append(f"{stem}.csv")
    write_json(os.path.join(cfg.out_dir, "localtime.json"), {
        "version": REPORT_VERSION,
        "config": cfg.to_dict(),
        "files": files,
        "max_mass_error": worst_mass,
        "timing": {"elapsed_seconds": round(time.perf_counter() - t_start, 3)},
    })
    print(f"wrote {len(files)} local-time profiles to {cfg.out_dir} "
          f"(max mass error {worst_mass:.3e})")
    return EXIT_PASS


def _cmd_verify(args) -> int:
    cfg = _load_config(args)
    t_start = time.perf_counter()
    report = run_experiment(cfg, only=args.statistic)
    path = write_report(report, cfg.out_dir, time.perf_counter() - t_start)
    for res in report.results:
        line = f"[{res.verdict.upper():5s}] {res.name}"
        if res.verdict == "error" and res.error:
            line += f" ({res.error.strip().splitlines()[-1]})"
        print(line)
    print(f"report: {path}")
    return report.exit_code


def _cmd_constants(args) -> int:
    cfg = _load_config(args)
    from .harness import run_statistic
    specs = [s for s in cfg.statistics if s.name in ("v-constants",
                                                     "dirichlet-quadrature")]
    if not specs:
        specs = [StatisticSpec("v-constants", {}),
                 StatisticSpec("dirichlet-quadrature", {})]
    os.makedirs(cfg.out_dir, exist_ok=True)
    summaries = []
    code = EXIT_PASS
    for spec in specs:
        res = run_statistic(cfg, spec)
        for cname, (kind, header, rows) in res.curves.items():
            out_csv = os.path.join(cfg.out_dir, f"{cname}.csv")
            write_csv(out_csv, header, rows)
            for row in rows:
                print("  ".join(str(v) for v in row))
        summaries.append({"name": res.name, "verdict": res.verdict,
                          "summary": res.summary, "error": res.error})
        if res.verdict == "error":
            code = EXIT_ERROR
        elif res.verdict == "fail" and code == EXIT_PASS:
            code = EXIT_FAIL
    write_json(os.path.join(cfg.out_dir, "constants.json"),
               {"version": REPORT_VERSION, "results": summaries})
    return code


def _cmd_report(args) -> int:
    out_dir = args.out
    if out_dir is None and args.config is not None:
        cfg = _load_config(args)
        out_dir = cfg.out_dir
    if out_dir is None:
        print("report: need --out (or --config whose out_dir is set)", file=sys.stderr)
        return EXIT_ERROR
    rendered = render_report_figures(out_dir)
    if not rendered:
        print(f"no stored curves found under {out_dir}", file=sys.stderr)
        return EXIT_ERROR
    for png in rendered:
        print(png)
    return EXIT_PASS


_COMMANDS = {
    "simulate": _cmd_simulate,
    "localtime": _cmd_localtime,
    "verify": _cmd_verify,
    "constants": _cmd_constants,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    np.seterr(all="ignore")
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        _print_config_error(exc)
        return EXIT_ERROR
    except MbmLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
