"""
Experiment CLI.

Subcommands run the shipped presets (`converge`, `longtime`, `saturate`,
`twin-decay`) or evaluate the parameter conditions for given flow scales
(`conditions`). Every run subcommand accepts `--config <yaml>` whose keys
mirror the ExperimentConfig field names, plus common overrides.

Exit codes: 0 success, 1 config error, 2 runtime/numerical failure, 3 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys

import yaml

from .conditions import FlowScales, chi_condition_2d, chi_condition_3d, h_condition, re_scalings
from .harness import (
    ConfigError,
    ExperimentConfig,
    PRESET_NAMES,
    TwinRun,
    build_condition_report,
    emit_convergence_csv,
    emit_csv,
    emit_report,
    fit_decay_rate,
    preset_config,
    run_convergence,
    summarize,
)


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file; keys mirror ExperimentConfig")
    p.add_argument("--dt", type=float, help="time step override")
    p.add_argument("--chi0", type=float, help="controller chi0 override")
    p.add_argument("--controller", choices=("constant", "algo1", "algo2"),
                   help="controller kind override")
    p.add_argument("--observer-k", type=int, dest="observer_k",
                   help="Fourier observer cutoff override")
    p.add_argument("--nu", type=float, help="viscosity override")
    p.add_argument("--seed", type=int, help="v0 perturbation seed override")
    p.add_argument("--out", help="output CSV path override")


def _deep_update(base: dict, extra: dict) -> dict:
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val
    return base


def _load_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config file {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config file {path!r}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must contain a mapping")
    return data


def _resolve_config(preset: str, args: argparse.Namespace) -> dict:
    conf = preset_config(preset)
    if args.config:
        _deep_update(conf, _load_config_file(args.config))
    if args.dt is not None:
        conf["dt"] = args.dt
    if args.nu is not None:
        conf["nu"] = args.nu
    if args.chi0 is not None:
        conf.setdefault("controller", {})["chi0"] = args.chi0
    if args.controller is not None:
        conf.setdefault("controller", {})["kind"] = args.controller
    if args.observer_k is not None:
        conf["observer"] = {"kind": "fourier", "cutoff": args.observer_k}
    if args.seed is not None:
        conf.setdefault("v0", {})["seed"] = args.seed
    if args.out is not None:
        conf["output_path"] = args.out
    return conf


def _run_experiment(conf: dict) -> tuple[int, list]:
    cfg = ExperimentConfig.from_dict(conf)
    run = TwinRun(cfg)
    records = list(run.records())
    csv_path = cfg.output_path or "run.csv"
    emit_csv(records, csv_path)
    report = build_condition_report(run, records)
    summary = summarize(records)
    report_path = csv_path + ".report.json"
    emit_report(cfg, report, summary, report_path)
    print(f"wrote {csv_path} ({len(records)} rows) and {report_path}")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0, records


def _cmd_run(preset: str, args: argparse.Namespace) -> int:
    conf = _resolve_config(preset, args)
    conf.pop("dt_list", None)
    code, records = _run_experiment(conf)
    if preset == "twin-decay":
        # Decay check: fitted rate of log ||e|| against the chi0 target.
        try:
            rate = fit_decay_rate(records)
            print(f"fitted error decay rate: {rate:.4g}")
        except ValueError as exc:
            print(f"decay fit unavailable: {exc}")
    return code


def _cmd_converge(args: argparse.Namespace) -> int:
    conf = _resolve_config("converge", args)
    dt_list = conf.pop("dt_list")
    out = conf.pop("output_path", None) or "converge.csv"
    cfg = ExperimentConfig.from_dict({**conf, "output_path": out})
    rows = run_convergence(cfg, dt_list)
    emit_convergence_csv(rows, out)
    print(f"wrote {out}")
    print(f"{'dt':>12} {'final_err':>14} {'rate':>8} {'chi_max':>10}")
    for r in rows:
        rate = "-" if r.rate is None else f"{r.rate:.2f}"
        print(f"{r.dt:>12g} {r.final_err:>14.6e} {rate:>8} {r.chi_max_observed:>10g}")
    return 0


def _cmd_conditions(args: argparse.Namespace) -> int:
    conf: dict = {}
    if args.config:
        conf = _load_config_file(args.config)
    if args.nu is not None:
        conf["nu"] = args.nu
    if args.chi0 is not None:
        conf["chi0"] = args.chi0
    required = [k for k in ("L", "U", "nu") if k not in conf]
    if required:
        raise ConfigError(f"conditions needs config keys {required} (plus optional "
                          "kf, dim, chi, chi0, c1, H, avg_grad_sq, avg_grad_4)")
    scales = FlowScales(L=float(conf["L"]), U=float(conf["U"]), nu=float(conf["nu"]),
                        kf=float(conf["kf"]) if "kf" in conf else None)
    dim = int(conf.get("dim", 2))
    out: dict = {"re": scales.re, "tstar": scales.tstar,
                 "recommendations": re_scalings(scales, dim)}
    chi = conf.get("chi")
    chi0 = float(conf.get("chi0", 1.0))
    if chi is not None:
        chi = float(chi)
        if "H" in conf:
            ok, slack = h_condition(scales.nu, float(conf.get("c1", 1.0)), float(conf["H"]), chi)
            out["h_condition"] = {"ok": ok, "slack": slack}
        if "avg_grad_sq" in conf:
            ok, slack = chi_condition_2d(chi, scales.nu, float(conf["avg_grad_sq"]), chi0)
            out["chi_condition_2d"] = {"ok": ok, "slack": slack}
        if "avg_grad_4" in conf:
            ok, slack = chi_condition_3d(chi, scales.nu, float(conf["avg_grad_4"]), chi0)
            out["chi_condition_3d"] = {"ok": ok, "slack": slack}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adanudge",
        description="Twin experiments for nudging-based data assimilation "
                    "with self-adaptive chi selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PRESET_NAMES:
        p = sub.add_parser(name, help=f"run the {name!r} preset")
        _add_run_options(p)
    p = sub.add_parser("conditions", help="evaluate parameter conditions for given scales")
    p.add_argument("--config", help="YAML file with L, U, nu and optional "
                                    "kf, dim, chi, chi0, c1, H, avg_grad_sq, avg_grad_4")
    p.add_argument("--nu", type=float, help="viscosity override")
    p.add_argument("--chi0", type=float, help="chi0 override")
    # accepted for interface uniformity with the run subcommands; unused here
    p.add_argument("--dt", type=float, help=argparse.SUPPRESS)
    p.add_argument("--controller", help=argparse.SUPPRESS)
    p.add_argument("--observer-k", type=int, dest="observer_k", help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    p.add_argument("--out", help="ignored; conditions prints to stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse usage problems are config errors by our contract
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "converge":
            return _cmd_converge(args)
        if args.command == "conditions":
            return _cmd_conditions(args)
        return _cmd_run(args.command, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # numerical / runtime failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
