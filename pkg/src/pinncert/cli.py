"""Command-line entry point.

Subcommands: ``train``, ``verify``, ``sweep``, ``fd`` and ``list-examples``.
Every flag overrides the matching key of the ``--config`` file.  Exit codes:
0 success, 1 invalid input or failed run, 2 certificate failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .certify import (CertificateError, SweepConfig, records_to_csv, reference_for, report,
                      sweep)
from .config import Config, ConfigError, load_config
from .expr import ExprError
from .net import Network, init
from .oracle import FdError, fd_solve
from .problem import DESCRIPTIONS, REGISTRY, InvalidProblemError, registry_names, validate
from .sample import draw
from .svg import line_chart
from .train import LossSpec, TrainingDivergedError, train
from .trial import KINDS, AnalyticTrial, TrialFunction

EXIT_OK, EXIT_INVALID, EXIT_CERT = 0, 1, 2

log = logging.getLogger("pinncert")


def parse_values(text: str) -> list[float]:
    """``a:b:Nlog``, ``a:b:N`` / ``a:b:Nlin`` or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must look like start:stop:count[log|lin], got {text!r}")
        spec = parts[2].strip().lower()
        mode = "lin"
        for suffix in ("log", "lin"):
            if spec.endswith(suffix):
                mode, spec = suffix, spec[: -len(suffix)]
        lo, hi, count = float(parts[0]), float(parts[1]), int(spec)
        if count < 1:
            raise ValueError("range count must be positive")
        if mode == "log":
            if lo <= 0 or hi <= 0:
                raise ValueError("log range needs positive endpoints")
            return [float(v) for v in np.geomspace(lo, hi, count)]
        return [float(v) for v in np.linspace(lo, hi, count)]
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError("empty value list")
    return values


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("problem")
    g.add_argument("--config", help="config file with [problem], [params], [trial], ... sections")
    g.add_argument("--example", help="registry example name")
    g.add_argument("--eps", type=float)
    g.add_argument("--k", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--set", action="append", default=[], metavar="NAME=VALUE",
                   help="set a problem parameter (repeatable)")
    g = p.add_argument_group("trial and training")
    g.add_argument("--kind", choices=KINDS)
    g.add_argument("--hidden-layers", type=int)
    g.add_argument("--width", type=int)
    g.add_argument("--epochs", type=int)
    g.add_argument("--steps-per-epoch", type=int)
    g.add_argument("--n", type=int, help="collocation points")
    g.add_argument("--resample", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--seed", type=int)
    g.add_argument("--lr", type=float)
    g = p.add_argument_group("output")
    g.add_argument("--out", help="output directory (default: $PINNCERT_OUTPUT_DIR or ./pinncert-out)")
    g.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pinncert",
                                     description="A-posteriori error certificates for PINN solutions of 1D BVPs.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", help="train a network, write history CSV and checkpoint")
    _common(p)
    p = sub.add_parser("verify", help="certify a trial function and write report.json")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--checkpoint", help="network checkpoint written by train")
    src.add_argument("--untrained", action="store_true", help="use a freshly initialised network")
    src.add_argument("--analytic", action="store_true", help="use the closed-form solution")
    p = sub.add_parser("sweep", help="train and certify across parameter values")
    _common(p)
    p.add_argument("--param", help="parameter to vary (eps or a problem parameter)")
    p.add_argument("--values", help="e.g. 1:100:12log, 0:1:5 or 1,0.5,0.1")
    p.add_argument("--jobs", type=int, default=1)
    p = sub.add_parser("fd", help="solve with finite differences and dump the mesh values")
    _common(p)
    p.add_argument("--m", type=int, default=1024, help="initial number of mesh cells")
    sub.add_parser("list-examples", help="print the example registry")
    return parser


def resolve_config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    if args.example:
        eps = cfg.problem.get("eps")
        cfg.problem = {"example": args.example}
        if eps is not None:
            cfg.problem["eps"] = eps
    if args.eps is not None:
        cfg.problem["eps"] = args.eps
    if args.k is not None:
        cfg.params["k"] = args.k
    if args.lam is not None:
        cfg.params["lambda"] = args.lam
    for item in args.set:
        name, sep, value = item.partition("=")
        try:
            if not sep:
                raise ValueError
            cfg.params[name.strip()] = float(value)
        except ValueError:
            raise ConfigError([f"--set expects NAME=VALUE, got {item!r}"]) from None
    for attr, section, key in (("kind", "trial", "kind"), ("hidden_layers", "trial", "hidden_layers"),
                               ("width", "trial", "width"), ("epochs", "train", "epochs"),
                               ("steps_per_epoch", "train", "steps_per_epoch"), ("n", "train", "n"),
                               ("resample", "train", "resample"), ("seed", "train", "seed"),
                               ("lr", "train", "lr"), ("out", "output", "directory"),
                               ("svg", "output", "emit_svg")):
        value = getattr(args, attr, None)
        if value is not None:
            cfg.set(section, key, value)
    if not cfg.problem:
        raise ConfigError(["no problem given: use --example or a config with a [problem] section"])
    return cfg


def _outdir(cfg: Config) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    def clean(v):
        if isinstance(v, np.generic):
            v = v.item()
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {str(k): clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v
    path.write_text(json.dumps(clean(data), indent=2, sort_keys=True) + "\n")


def cmd_list_examples(args) -> int:
    for name in registry_names():
        defaults = REGISTRY[name][1]
        params = ", ".join(f"{k}={v:g}" for k, v in sorted(defaults.items())) or "-"
        print(f"{name:<10} {params:<24} {DESCRIPTIONS[name]}")
    return EXIT_OK


def cmd_fd(args, cfg: Config) -> int:
    prob = cfg.build_problem()
    sol = fd_solve(prob, args.m)
    path = _outdir(cfg) / "fd.csv"
    sol.dump_csv(path)
    print(f"fd: m={sol.m} scheme={sol.scheme} peclet={sol.peclet:.4g} -> {path}")
    return EXIT_OK


def cmd_train(args, cfg: Config) -> int:
    prob = cfg.build_problem()
    validate(prob)
    net = init(cfg.train.seed, cfg.hidden_layers, cfg.width)
    trial = TrialFunction.for_problem(cfg.kind, net, prob)
    spec = LossSpec(cfg.kind, cfg.n, cfg.resample, cfg.boundary_weight)
    ref = prob.exact
    res = train(prob, trial, spec, cfg.train, reference=ref)
    out = _outdir(cfg)
    with (out / "history.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "error"])
        for e, value in enumerate(res.history):
            w.writerow([e, repr(value), repr(res.errors[e]) if res.errors is not None else ""])
    res.trial.network.save(out / "checkpoint.bin")
    print(f"train: {cfg.kind} loss {res.initial_loss:.4e} -> {res.final_loss:.4e}"
          + (f", error {res.errors[-1]:.4e}" if res.errors else "")
          + f" -> {out / 'history.csv'}, {out / 'checkpoint.bin'}")
    return EXIT_OK


def cmd_verify(args, cfg: Config) -> int:
    prob = cfg.build_problem()
    v = validate(prob)
    if not v.families:
        raise InvalidProblemError(f"no certificate family applies: min c = {v.min_c:.6g} < 0")
    if args.analytic:
        if prob.exact is None:
            raise ConfigError(["--analytic needs a problem with a closed-form solution"])
        trial = AnalyticTrial(prob.exact)
    else:
        if args.checkpoint:
            net = Network.load(args.checkpoint)
        elif args.untrained:
            net = init(cfg.train.seed, cfg.hidden_layers, cfg.width)
        else:
            raise ConfigError(["verify needs one of --checkpoint, --untrained or --analytic"])
        trial = TrialFunction.for_problem(cfg.kind, net, prob)
    s = draw(cfg.train.seed, cfg.n, (prob.x1, prob.x2))
    rep = report(prob, trial, s, reference=reference_for(prob), validation=v)
    out = _outdir(cfg)
    _write_json(out / "report.json", rep.to_dict())
    print(f"verify: {rep.kind} n={rep.n} seed={rep.seed} error={rep.error:.4e} loss={rep.loss:.4e} "
          f"ratio={rep.ratio:.4e} integral_ratio={rep.integral_ratio:.4e}")
    for fam, ok in rep.passed.items():
        print(f"  {fam:<9} bound={rep.bounds[fam]:.4e} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if rep.ok else EXIT_CERT


def cmd_sweep(args, cfg: Config) -> int:
    param = args.param or cfg.sweep_parameter
    values_text = args.values or cfg.sweep_values
    missing = [name for name, val in (("sweep.parameter", param), ("sweep.values", values_text)) if not val]
    if missing:
        raise ConfigError([f"missing required key {m}" for m in missing])
    try:
        values = parse_values(values_text)
    except ValueError as exc:
        raise ConfigError([f"sweep.values: {exc}"]) from exc
    prob = cfg.build_problem()
    scfg = SweepConfig(cfg.train, cfg.n, cfg.resample, cfg.hidden_layers, cfg.width)
    records = sweep(prob, param, values, scfg, jobs=max(1, args.jobs))
    out = _outdir(cfg)
    with (out / "sweep.csv").open("w", newline="") as fh:
        records_to_csv(records, fh)
    msg = f"sweep: {len(records)} rows -> {out / 'sweep.csv'}"
    if cfg.emit_svg:
        xs = [r.param_value for r in records]
        positive = all(x > 0 for x in xs)
        log_x = positive and len(xs) > 1 and max(xs) / min(xs) >= 10
        series = {"loss": [r.loss for r in records], "error": [r.error for r in records],
                  "ratio": [r.ratio for r in records], "bound (plain)": [r.bound_plain for r in records]}
        (out / "sweep.svg").write_text(line_chart(xs, series, title=f"{prob.name or 'problem'}: {param} sweep",
                                                  xlabel=param, log_x=log_x))
        msg += f", {out / 'sweep.svg'}"
    print(msg)
    failed = [r for r in records if r.failure]
    for r in failed:
        print(f"  {param}={r.param_value:g}: {r.failure}", file=sys.stderr)
    uncertified = [r for r in records if not r.failure and not all(r.passed.values())]
    for r in uncertified:
        print(f"  {param}={r.param_value:g}: certificate failed {r.passed}", file=sys.stderr)
    if failed:
        return EXIT_INVALID
    return EXIT_CERT if uncertified else EXIT_OK


COMMANDS = {"train": cmd_train, "verify": cmd_verify, "sweep": cmd_sweep, "fd": cmd_fd}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-examples":
        return cmd_list_examples(args)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        for line in exc.problems:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidProblemError, ExprError, CertificateError, FdError, TrainingDivergedError,
            OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


__all__ = ["run", "main", "parse_values", "build_parser", "resolve_config"]
