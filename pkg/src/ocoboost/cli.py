"""Command-line entry point: ``ocoboost {run,batch,sweep,audit,verify,project}``.

Reports go to ``--out`` (or stdout) as JSON.  Any failure prints a JSON
object ``{"error": {"code": ..., "message": ...}}`` to stderr and exits
with a nonzero status.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from typing import List, Optional

import numpy as np

from . import verify
from .errors import BoostError, InvalidConfigError
from .harness import (
    ALGORITHMS,
    DEFAULT_GAMMA_GRID,
    SYNTH_KINDS,
    ExperimentConfig,
    build_class,
    emit_report,
    gamma_sweep,
    load_csv,
    report_json,
    run_experiment,
    synth_stream,
)
from .simplex import project_simplex
from .weak import CONDITIONS, RewaLearner, StumpLearner, audit_condition

EXIT_ERROR = 2
EXIT_CHECK_FAILED = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("usage", message)


def _fail(code: str, message: str):
    json.dump({"error": {"code": code, "message": message}}, sys.stderr)
    sys.stderr.write("\n")
    sys.exit(EXIT_ERROR)


def _floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _data_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", metavar="PATH", help="CSV file, label in the last column by default")
    src.add_argument("--synth", choices=SYNTH_KINDS, help="generated stream")
    p.add_argument("--label-col", type=int, default=-1, help="0-based label column (negative counts from the end)")
    p.add_argument("--header", action="store_true", help="skip the first CSV row")
    p.add_argument("--k", type=int, default=3, help="classes of a generated stream")
    p.add_argument("--d", type=int, default=2, help="features of a generated stream")
    p.add_argument("--noise", type=float, default=0.2, help="label-noise rate")
    p.add_argument("--length", type=int, default=1000, help="length of a generated stream")
    p.add_argument("--seed", type=int, default=0)


def _experiment_args(p: argparse.ArgumentParser, algo: str) -> None:
    _data_args(p)
    p.add_argument("--algo", choices=ALGORITHMS, default=algo)
    p.add_argument("--n-learners", type=int, default=100)
    p.add_argument("--rounds", type=int, help="stream prefix (online) or boosting rounds (batch)")
    p.add_argument("--gamma", type=float, help="single advantage value")
    p.add_argument("--gamma-grid", type=_floats, help="comma-separated advantage grid")
    p.add_argument("--relabel", choices=("random", "fractional"), default="fractional")
    p.add_argument("--weak", choices=("stump", "rewa"), default="stump")
    p.add_argument("--rewa-class", default="stumps-binary",
                   choices=("stumps-binary", "stumps-kwise", "weight-matrix"))
    p.add_argument("--delta", type=float, default=0.1, help="grid step for stumps and classes")
    p.add_argument("--m0", type=int, help="batch sample size per round")
    p.add_argument("--shuffles", type=int, default=5)
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--trace", action="store_true", help="include per-round predictions")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ocoboost", description="Multiclass boosting via online convex optimization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _experiment_args(sub.add_parser("run", help="online experiment"), "online-agnostic")
    _experiment_args(sub.add_parser("batch", help="statistical boosting experiment"), "batch-agnostic")
    _experiment_args(sub.add_parser("sweep", help="best single gamma with the per-gamma table"),
                     "online-agnostic")

    audit = sub.add_parser("audit", help="measure a weak-learning condition")
    _data_args(audit)
    audit.add_argument("--weak", choices=("stump", "rewa"), default="rewa")
    audit.add_argument("--rewa-class", default="stumps-binary",
                       choices=("stumps-binary", "stumps-kwise", "weight-matrix"))
    audit.add_argument("--delta", type=float, default=0.25)
    audit.add_argument("--eta", type=float, default=1.0)
    audit.add_argument("--gamma", type=float, default=0.5)
    audit.add_argument("--condition", choices=CONDITIONS, default="def1")
    audit.add_argument("--trials", type=int, default=1)
    audit.add_argument("--out", metavar="PATH")

    ver = sub.add_parser("verify", help="run every numerical lemma check")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--trials", type=int, default=10_000)
    ver.add_argument("--mc-trials", type=int, default=100_000)
    ver.add_argument("--out", metavar="PATH")

    proj = sub.add_parser("project", help="project a vector onto the simplex")
    proj.add_argument("vector", type=_floats, help="comma-separated coordinates")
    proj.add_argument("--gamma", type=float, help="divide by gamma before projecting")
    return parser


def _load(args):
    if args.dataset:
        return load_csv(args.dataset, has_header=args.header, label_col=args.label_col)
    return synth_stream(args.synth, k=args.k, d=args.d, T=args.length, seed=args.seed,
                        rate=args.noise)


def _config(args) -> ExperimentConfig:
    if args.gamma is not None and args.gamma_grid is not None:
        raise InvalidConfigError("give either --gamma or --gamma-grid, not both")
    grid = (args.gamma,) if args.gamma is not None else tuple(args.gamma_grid or DEFAULT_GAMMA_GRID)
    return ExperimentConfig(
        algorithm=args.algo, n_learners=args.n_learners, rounds=args.rounds, gamma_grid=grid,
        relabel=args.relabel, weak_learner=args.weak, rewa_class=args.rewa_class,
        delta=args.delta, shuffles=args.shuffles, seed=args.seed, m0=args.m0,
    )


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _cmd_experiment(args) -> int:
    data = _load(args)
    cfg = _config(args)
    if args.command == "batch" and not args.algo.startswith("batch"):
        raise InvalidConfigError("the batch command needs a batch-* algorithm")
    report = gamma_sweep(data, cfg) if args.command == "sweep" else run_experiment(data, cfg)
    if args.out:
        emit_report(report, args.out, trace=args.trace)
    else:
        sys.stdout.write(report_json(report, trace=args.trace))
    return 0


def _cmd_audit(args) -> int:
    data = _load(args)
    cfg = ExperimentConfig(rewa_class=args.rewa_class, delta=args.delta)
    hclass = build_class(cfg, data.d, data.k)
    if args.weak == "rewa":
        def factory(rng):
            return RewaLearner(hclass, args.eta, rng)
    else:
        def factory(rng):
            return StumpLearner(data.d, data.k, args.delta)
    report = audit_condition(factory, data.X, data.y, hclass, args.gamma, args.condition,
                             trials=args.trials, rng=np.random.default_rng(args.seed))
    _write(_dump(asdict(report)), args.out)
    return 0


def _cmd_verify(args) -> int:
    results = verify.run_all(args.seed, args.trials, args.mc_trials)
    summary = {"passed": all(r.passed for r in results), "checks": [r.to_dict() for r in results]}
    _write(_dump(summary), args.out)
    return 0 if summary["passed"] else EXIT_CHECK_FAILED


def _cmd_project(args) -> int:
    v = np.asarray(args.vector, dtype=float)
    if v.size == 0:
        raise InvalidConfigError("empty vector")
    if args.gamma is not None:
        if not 0 < args.gamma <= 1:
            raise InvalidConfigError("gamma must lie in (0, 1]")
        v = v / args.gamma
    sys.stdout.write(_dump({"projection": project_simplex(v).tolist()}))
    return 0


COMMANDS = {"run": _cmd_experiment, "batch": _cmd_experiment, "sweep": _cmd_experiment,
            "audit": _cmd_audit, "verify": _cmd_verify, "project": _cmd_project}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except BoostError as exc:
        _fail(exc.code, str(exc))
    except OSError as exc:
        _fail("io", str(exc))


if __name__ == "__main__":
    sys.exit(main())
