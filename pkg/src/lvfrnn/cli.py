"""Command-line entry point: ``lvfrnn verify|spectrum|train|init``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import checks
from .config import ConfigError, RunConfig
from .errors import ConvergenceError, NonFiniteError, SingularSystemError, SpectrumError
from .geometry import VectorField, build_dv, project_divergence_free
from .sampler import (SamplerConfig, field_from_stochastic, make_rng, max_marginal_error,
                      sample_doubly_stochastic_info)
from .serialize import matrix_to_dict, write_atomic
from .train import train_copy
from .transition import build_transition, spectrum

log = logging.getLogger("lvfrnn")


def cmd_verify(args) -> int:
    results = checks.run_checks(kappas=tuple(args.kappa), trials=args.trials, seed=args.seed)
    for r in results:
        where = f"kappa={r.kappa}" if r.kappa else "fixture"
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} [{where}] residual={r.residual:.3e}")
    ok = all(r.passed for r in results)
    report = {
        "passed": ok,
        "kappas": list(args.kappa),
        "trials": args.trials,
        "seed": args.seed,
        "checks": [r.to_dict() for r in results],
    }
    if args.report:
        write_atomic(args.report, json.dumps(report, indent=2) + "\n")
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return 0 if ok else 1


def _stem(path):
    root, ext = os.path.splitext(path)
    return root if ext.lower() == ".csv" else path


def cmd_spectrum(args) -> int:
    rng = make_rng(args.seed)
    v = rng.uniform(0.0, 1.0, size=(args.kappa, args.kappa))
    np.fill_diagonal(v, 0.0)
    field = VectorField(v)
    if args.divfree:
        field = project_divergence_free(field)
    d = build_dv(field)
    try:
        c = build_transition(d, args.tau, args.integrator)
        rep_d = spectrum(d)
        rep_c = spectrum(c)
    except (SingularSystemError, SpectrumError) as exc:
        log.error("%s", exc)
        return 1
    summary = {
        "kappa": args.kappa,
        "seed": args.seed,
        "divfree": args.divfree,
        "tau": args.tau,
        "integrator": args.integrator,
        "max_abs_real_dv": rep_d.max_abs_real_part,
        "dv": rep_d.to_dict(),
        "cv": rep_c.to_dict(),
    }
    try:
        if args.out:
            stem = _stem(args.out)
            write_atomic(stem + ".csv", rep_d.to_csv())
            write_atomic(stem + ".cv.csv", rep_c.to_csv())
            write_atomic(stem + ".json", json.dumps(summary, indent=2) + "\n")
        else:
            sys.stdout.write(rep_d.to_csv())
    except OSError as exc:
        log.error("cannot write spectrum: %s", exc)
        return 1
    print(f"max|Re lambda(D_V)| = {rep_d.max_abs_real_part:.3e}  "
          f"normality defect(D_V) = {rep_d.normality_defect:.3e}  "
          f"orthogonality defect(C_V) = {rep_c.orthogonality_defect:.3e}",
          file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    try:
        cfg = RunConfig.load(args.config)
    except ConfigError as exc:
        print(f"{args.config}:{exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    def show(row):
        print(f"step {row.step:6d}  train_ce {row.train_ce:.5f}  eval_ce {row.eval_ce:.5f}  "
              f"recall {row.recall_acc:.4f}  |div V| {row.div_norm:.3e}  lr {row.lr:.2e}",
              flush=True)

    try:
        result = train_copy(cfg, resume=args.resume, on_metrics=show)
    except (NonFiniteError, SingularSystemError, ConvergenceError) as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return 1
    print(f"final eval CE {result.final_eval_ce:.5f} (baseline {result.baseline:.5f}), "
          f"recall accuracy {result.final_recall_acc:.4f}")
    return 0


def cmd_init(args) -> int:
    cfg = SamplerConfig(args.kappa, args.epsilon, args.max_iters, args.seed)
    try:
        res = sample_doubly_stochastic_info(cfg)
    except ConvergenceError as exc:
        print(f"{exc}", file=sys.stderr)
        return 1
    m = field_from_stochastic(res.matrix).entries if args.field else res.matrix
    text = json.dumps(matrix_to_dict(m)) + "\n"
    try:
        if args.out:
            write_atomic(args.out, text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"cannot write matrix: {exc}", file=sys.stderr)
        return 1
    info = {"iterations": res.iterations, "residual": res.residual,
            "max_marginal_error": max_marginal_error(res.matrix), "seed": res.seed,
            "redraws": res.redraws}
    print(json.dumps(info), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lvfrnn", description="Latent vector field RNN toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the invariant and fixture checks")
    v.add_argument("--kappa", type=int, nargs="+", default=[2, 3, 8, 64])
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--report", help="write a JSON report here")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("spectrum", help="eigenvalues and defects of a sampled D_V and C_V")
    s.add_argument("--kappa", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--divfree", action="store_true", help="project V to zero divergence")
    s.add_argument("--tau", type=float, default=1.0)
    s.add_argument("--integrator", choices=["euler", "midpoint"], default="euler")
    s.add_argument("--out", help="CSV path; companion .cv.csv and .json files are written too")
    s.set_defaults(func=cmd_spectrum)

    t = sub.add_parser("train", help="train on the copy task")
    t.add_argument("--config", required=True)
    t.add_argument("--resume", help="checkpoint to resume from")
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("init", help="sample a doubly stochastic matrix")
    i.add_argument("--kappa", type=int, required=True)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--epsilon", type=float, default=1e-8)
    i.add_argument("--max-iters", type=int, default=1000)
    i.add_argument("--field", action="store_true", help="emit the zero-diagonal vector field")
    i.add_argument("--out")
    i.set_defaults(func=cmd_init)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
