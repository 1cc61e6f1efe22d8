"""Copy-task training loop with evaluation, metrics CSV and resumable checkpoints."""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import cell as cells
from .copytask import CopyTaskSpec, baseline_loss, cross_entropy, generate_copy_batch, \
    recall_accuracy
from .config import RunConfig
from .errors import NonFiniteError
from .geometry import div, project_divergence_free
from .optim import OptimState, adam_step, observe_eval
from .sampler import RNG_ALGORITHM, SamplerConfig, make_rng, sample_doubly_stochastic_info
from .serialize import array_from_json, array_to_json, write_atomic

log = logging.getLogger(__name__)

METRICS_HEADER = "step,train_ce,recall_acc,div_norm,wall_ms"
CHECKPOINT_NAME = "checkpoint.json"
METRICS_NAME = "metrics.csv"
SUMMARY_NAME = "summary.json"

# stream ids mixed into the seed for independent random streams
_PARAM_STREAM = 1
_TRAIN_STREAM = 2
_EVAL_STREAM = 3


@dataclass
class Metrics:
    step: int
    train_ce: float
    recall_acc: float
    div_norm: float
    wall_ms: float
    eval_ce: float
    lr: float

    def csv_row(self) -> str:
        return (f"{self.step},{self.train_ce:.17g},{self.recall_acc:.17g},"
                f"{self.div_norm:.17g},{self.wall_ms:.17g}")


@dataclass
class TrainResult:
    metrics: list = field(default_factory=list)
    final_eval_ce: float = math.nan
    final_recall_acc: float = math.nan
    baseline: float = math.nan
    params: object = None
    steps: int = 0


def init_params(cfg: RunConfig):
    m = cfg.model
    vocab = cfg.task.L + 2
    rng = make_rng(cfg.init.seed, _PARAM_STREAM)
    if m.cell == "rnn":
        return cells.init_vanilla_params(m.kappa, vocab, vocab, rng, nonlinearity=m.nonlinearity)
    res = sample_doubly_stochastic_info(
        SamplerConfig(m.kappa, cfg.init.epsilon, cfg.init.max_iters, cfg.init.seed))
    if res.redraws:
        log.info("Sinkhorn init redrew %d time(s); used seed %d", res.redraws, res.seed)
    params = cells.init_lvf_params(m.kappa, vocab, vocab, rng, V=res.matrix, tau=m.tau,
                                   integrator=m.integrator, nonlinearity=m.nonlinearity)
    if m.hard_divfree:
        params.V[:] = project_divergence_free(params.V).entries
    return params


def _passes(cfg: RunConfig, params):
    if isinstance(params, cells.VanillaCellParams):
        return cells.vanilla_forward, cells.vanilla_backward
    return cells.forward, cells.backward


def _div_norm(params) -> float:
    if isinstance(params, cells.LvfCellParams):
        return float(np.linalg.norm(div(params.V)))
    return 0.0


def evaluate(cfg: RunConfig, params, batch=None):
    """Cross entropy and recall accuracy on the held-out batch."""
    if batch is None:
        batch = eval_batch(cfg)
    fwd, _ = _passes(cfg, params)
    _, logits = fwd(params, batch.one_hot_inputs())
    return cross_entropy(logits, batch.targets), recall_accuracy(logits, batch.targets,
                                                                  cfg.task.K)


def eval_batch(cfg: RunConfig):
    t = cfg.task
    return generate_copy_batch(CopyTaskSpec(t.T, t.K, t.L, t.eval_batch, cfg.init.seed),
                               _EVAL_STREAM)


def train_batch(cfg: RunConfig, step: int):
    t = cfg.task
    return generate_copy_batch(CopyTaskSpec(t.T, t.K, t.L, t.batch, cfg.init.seed),
                               _TRAIN_STREAM, step)


def save_checkpoint(path, cfg: RunConfig, params, opt: OptimState, step: int):
    doc = {
        "step": step,
        "rng": {"algorithm": RNG_ALGORITHM, "seed": cfg.init.seed},
        "config": cfg.to_dict(),
        "cell": "rnn" if isinstance(params, cells.VanillaCellParams) else "lvf",
        "params": {k: array_to_json(a) for k, a in params.arrays().items()},
        "optim": opt.to_dict(),
    }
    write_atomic(path, json.dumps(doc))


def load_checkpoint(path, cfg: RunConfig):
    """Restore ``(params, optimizer state, step)`` from a checkpoint written for ``cfg``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc["rng"]["algorithm"] != RNG_ALGORITHM:
        raise ValueError(f"checkpoint RNG {doc['rng']['algorithm']!r} is not {RNG_ALGORITHM!r}")
    params = init_params(cfg)
    for k, a in doc["params"].items():
        arr = params.arrays()[k]
        arr[...] = array_from_json(a)
    return params, OptimState.from_dict(doc["optim"]), int(doc["step"])


def _metrics_lines(path, upto_step):
    if not os.path.exists(path):
        return [METRICS_HEADER]
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    keep = [METRICS_HEADER]
    for line in lines[1:]:
        if line and int(line.split(",", 1)[0]) <= upto_step:
            keep.append(line)
    return keep


def train_copy(cfg: RunConfig, resume=None, on_metrics=None) -> TrainResult:
    """Train on freshly generated copy batches.

    Every ``eval_every`` steps (and after the last step) a metrics row is appended to
    ``<out_dir>/metrics.csv``; checkpoints go to ``<out_dir>/checkpoint.json``. A
    non-finite loss or gradient raises :class:`NonFiniteError` and leaves the last
    good checkpoint in place.
    """
    cfg.validate()
    out_dir = cfg.io.out_dir
    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, CHECKPOINT_NAME)
    metrics_path = os.path.join(out_dir, METRICS_NAME)

    if resume:
        params, opt, start = load_checkpoint(resume, cfg)
        lines = _metrics_lines(metrics_path, start)
    else:
        params = init_params(cfg)
        o = cfg.optim
        opt = OptimState(lr=o.lr, decay=o.decay, clip=o.clip, patience=o.patience)
        start = 0
        lines = [METRICS_HEADER]
    with open(metrics_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    fwd, bwd = _passes(cfg, params)
    held_out = eval_batch(cfg)
    lam = cfg.model.lam if isinstance(params, cells.LvfCellParams) else 0.0
    project = cfg.model.hard_divfree and isinstance(params, cells.LvfCellParams)
    result = TrainResult(baseline=baseline_loss(CopyTaskSpec(cfg.task.T, cfg.task.K,
                                                             cfg.task.L)), params=params)
    t0 = time.perf_counter()
    total = cfg.optim.steps
    ce = math.nan
    for step in range(start, total):
        batch = train_batch(cfg, step)
        try:
            trace, logits = fwd(params, batch.one_hot_inputs())
            ce, dlogits = cross_entropy(logits, batch.targets, with_grad=True)
            if not math.isfinite(ce):
                raise NonFiniteError(f"non-finite training loss at step {step + 1}", step + 1)
            grads, _ = bwd(params, trace, dlogits, lam)
            adam_step(opt, params.arrays(), grads.as_dict())
        except NonFiniteError as exc:
            log.error("aborting: %s; last good checkpoint kept at %s", exc, ckpt_path)
            exc.step = step + 1
            raise
        if project:
            params.V[:] = project_divergence_free(params.V).entries
        done = step + 1
        if done % cfg.optim.eval_every == 0 or done == total:
            eval_ce, acc = evaluate(cfg, params, held_out)
            observe_eval(opt, eval_ce)
            wall = (time.perf_counter() - t0) * 1000.0 if cfg.io.wall_clock else 0.0
            row = Metrics(done, ce, acc, _div_norm(params), wall, eval_ce, opt.lr)
            result.metrics.append(row)
            with open(metrics_path, "a", encoding="utf-8") as fh:
                fh.write(row.csv_row() + "\n")
            if on_metrics is not None:
                on_metrics(row)
        if cfg.io.checkpoint_every and (done % cfg.io.checkpoint_every == 0 or done == total):
            save_checkpoint(ckpt_path, cfg, params, opt, done)

    result.steps = total
    result.final_eval_ce, result.final_recall_acc = evaluate(cfg, params, held_out)
    summary = {
        "steps": total,
        "final_eval_ce": result.final_eval_ce,
        "final_recall_acc": result.final_recall_acc,
        "baseline_loss": result.baseline,
        "div_norm": _div_norm(params),
    }
    write_atomic(os.path.join(out_dir, SUMMARY_NAME), json.dumps(summary, indent=2) + "\n")
    return result
