"""Command-line entry point: simulate, analyze, run, figure, oracle."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .analysis import EmptyLogError
from .config import KINDS, ConfigError, parse_quantity
from .eventlog import read_event_log, write_event_log
from .experiments import (FIGURES, HEADLINE, analyze, figure, preset, run, run_bell, simulate,
                          write_report)
from .optics import CNOT, CONTROL_RAILS, TARGET_RAILS, cnot_network, post_selected_operator, random_unitary
from .temporal import default_envelope, permanent_oracle, two_photon_density

OUT_ENV = "CAVITYCHIP_OUT"


def _duration(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        try:
            return parse_quantity(text, "ns")
        except ConfigError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (YAML)")
    common.add_argument("--kind", choices=KINDS, help="use a preset instead of --config")
    common.add_argument("--noise", choices=("ideal", "calibrated"), default="calibrated",
                        help="noise profile of the preset (default: calibrated)")
    common.add_argument("--seed", type=_seed, help="override the config seed")
    common.add_argument("--duration", type=_duration, help="simulated time, ns or '<value> <unit>'")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default: ${OUT_ENV} or ./out)")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="write only this format (default: both)")

    p = argparse.ArgumentParser(prog="cavitychip", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write event logs")
    a = sub.add_parser("analyze", parents=[common], help="event logs -> metrics")
    a.add_argument("events", nargs="+", type=Path)
    sub.add_parser("run", parents=[common], help="simulate and analyze")
    f = sub.add_parser("figure", parents=[common], help="reproduce one figure's data")
    f.add_argument("name", choices=sorted(FIGURES))
    o = sub.add_parser("oracle", parents=[common], help="permanent cross-checks")
    o.add_argument("--trials", type=int, default=100)
    return p


def _config(args, default_kind: str | None = None) -> cfgmod.ExperimentConfig:
    if args.config is not None:
        cfg = cfgmod.load(args.config)
    elif args.kind or default_kind:
        cfg = preset(args.kind or default_kind, args.noise)
    else:
        raise ConfigError("need --config or --kind")
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.duration is not None:
        changes["duration"] = args.duration
    return replace(cfg, **changes) if changes else cfg


def _out(args) -> Path:
    if args.out is not None:
        return args.out
    return Path(os.environ.get(OUT_ENV, "out"))


def _formats(args) -> tuple[str, ...]:
    return (args.format,) if args.format else ("json", "csv")


def _print_metrics(report, only=None) -> None:
    for name in sorted(report.metrics):
        if only and name not in only:
            continue
        m = report.metrics[name]
        iv = "" if m.interval is None else f" [{m.interval[0]:.4f}, {m.interval[1]:.4f}]"
        print(f"{name} = {m.value:.4f}{iv} (n={m.n})")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out(args) / f"{cfg.kind}-seed{cfg.seed}"
    for setting, lg in simulate(cfg).items():
        path = write_event_log(out / f"events-{setting}.csv", lg)
        print(f"{path} ({len(lg)} events)")
    cfgmod.save(out / "config.yaml", cfg)
    return 0


def cmd_analyze(args) -> int:
    logs = {}
    for path in args.events:
        lg = read_event_log(path)
        logs[lg.meta.get("setting", path.stem)] = lg
    if all(len(v) == 0 for v in logs.values()):
        raise EmptyLogError("empty event log")
    kind = next((lg.meta["kind"] for lg in logs.values() if "kind" in lg.meta), None)
    cfg = _config(args, kind)
    report = analyze(cfg, logs)
    write_report(report, _out(args) / f"{cfg.kind}-seed{cfg.seed}", "analysis", _formats(args))
    _print_metrics(report)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    report = run_bell(cfg) if cfg.kind.startswith("bell") else run(cfg)
    write_report(report, _out(args) / f"{cfg.kind}-seed{cfg.seed}", "report", _formats(args))
    _print_metrics(report)
    return 0


def cmd_figure(args) -> int:
    cfg = cfgmod.load(args.config) if args.config else None
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    report = figure(args.name, seed, args.duration, cfg)
    paths = write_report(report, _out(args) / f"fig{args.name}-seed{seed}", f"fig{args.name}", _formats(args))
    for p in paths:
        print(p)
    _print_metrics(report, {HEADLINE[args.name]})
    return 0


def oracle_check(trials: int = 100, seed: int = 0) -> dict:
    """Largest deviation between integrated densities and the permanent, plus the CNOT check."""
    rng = np.random.default_rng(seed)
    pk = default_envelope(400.0)
    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(4, 7))
        U = random_unitary(m, rng)
        k, l = sorted(rng.choice(m, 2, replace=False))
        d = two_photon_density(U, (int(k), int(l)), (pk, pk))
        n = [0] * m
        n[k] = n[l] = 1
        for (i, j), tot in d.totals().items():
            occ = [0] * m
            occ[i] += 1
            occ[j] += 1
            worst = max(worst, abs(tot - permanent_oracle(U, n, occ)))
    op = post_selected_operator(cnot_network(), CONTROL_RAILS, TARGET_RAILS)
    cnot_err = float(np.max(np.abs(op.matrix - CNOT / 3)))
    return {"trials": trials, "seed": seed, "max_density_vs_permanent": worst,
            "cnot_max_error": cnot_err,
            "cnot_success_probabilities": op.success_probabilities().tolist()}


def cmd_oracle(args) -> int:
    res = oracle_check(args.trials, args.seed or 0)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "oracle.json").write_text(json.dumps(res, sort_keys=True, indent=2) + "\n")
    print(f"max |density - permanent| = {res['max_density_vs_permanent']:.3e} over {res['trials']} unitaries")
    print(f"max |O - CNOT/3| = {res['cnot_max_error']:.3e}")
    return 0 if res["max_density_vs_permanent"] < 1e-8 and res["cnot_max_error"] < 1e-12 else 1


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "run": cmd_run, "figure": cmd_figure,
            "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except EmptyLogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, KeyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
