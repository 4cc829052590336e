"""Full-batch training runs and parallel sweeps."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checkpoint, kernels
from .config import FORMAT_VERSION, RunConfig
from .dataset import build
from .metrics import GrokReport, TraceRow, TrainingTrace, detect_grokking, layer_entropy
from .network import (NumericOverflowError, OptimizerState, accuracy_from_logits,
                      adamw_step, cross_entropy, forward, init_model, loss_and_grad)

log = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"


@dataclass
class RunSummary:
    config_digest: str
    seed: int
    status: str
    grok: GrokReport | None
    final_entropies: list[float]
    final: dict
    epochs_completed: int
    wall_clock_s: float
    checkpoints: list[str] = field(default_factory=list)
    failed_epoch: int | None = None
    error: str | None = None
    seed_source: str = "config"

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "status": self.status,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "seed_source": self.seed_source,
            "grok": None if self.grok is None else self.grok.to_dict(),
            "final": self.final,
            "final_entropies": self.final_entropies,
            "epochs_completed": self.epochs_completed,
            "failed_epoch": self.failed_epoch,
            "error": self.error,
            "checkpoints": self.checkpoints,
            "wall_clock_s": self.wall_clock_s,
            "kernel_backend": kernels.BACKEND,
        }


def trace_header(n_layers: int) -> list[str]:
    return (["epoch", "train_loss", "test_loss", "train_acc", "test_acc"]
            + [f"entropy_layer_{k}" for k in range(1, n_layers + 1)])


def format_trace(trace: TrainingTrace, n_layers: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(n_layers))
    for r in trace:
        writer.writerow([r.epoch, *(repr(float(v)) for v in
                                    (r.train_loss, r.test_loss, r.train_acc, r.test_acc, *r.entropies))])
    return buf.getvalue()


def read_trace(path) -> TrainingTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = trace_header(len(header) - 5)
        if header != expected:
            raise ValueError(f"{path}: unexpected trace columns {header}")
        trace = TrainingTrace()
        for line in reader:
            vals = [float(v) for v in line[1:]]
            trace.append(TraceRow(int(line[0]), *vals[:4], entropies=vals[4:]))
    return trace


def _evaluate(model, train, test, train_logits, train_loss, epoch):
    test_logits = forward(model, test, epoch)
    return TraceRow(
        epoch=epoch,
        train_loss=train_loss,
        test_loss=cross_entropy(test_logits, test.labels),
        train_acc=accuracy_from_logits(train_logits, train.labels),
        test_acc=accuracy_from_logits(test_logits, test.labels),
        entropies=[layer_entropy(w) for w in model.weights],
    )


def run_training(config: RunConfig, seed_source: str = "config") -> tuple[TrainingTrace, RunSummary]:
    """Train one model full-batch; log every ``log_every`` epochs plus epoch 0 and the last.

    Trace row ``e`` describes the weights after ``e`` optimizer steps. When
    ``config.output_dir`` is set, writes ``trace.csv``, ``summary.json`` and
    ``checkpoints/epoch_XXXXXX.json`` there.
    """
    started = time.perf_counter()
    out = Path(config.output_dir) if config.output_dir else None
    train, test = build(config.dataset, require_both=True)
    model = init_model(config.arch, config.init_seed)
    opt = OptimizerState.for_model(model, **config.optimizer)
    trace = TrainingTrace()
    saved: list[str] = []
    failed_epoch = error = None
    epoch = 0

    def save_checkpoint(e):
        if out is not None:
            rel = f"checkpoints/epoch_{e:06d}.json"
            checkpoint.save(out / rel, model, seed=config.seed, epoch=e)
            saved.append(rel)

    try:
        for epoch in range(config.epochs + 1):
            loss, grads, logits = loss_and_grad(model, train, epoch=epoch)
            if epoch % config.log_every == 0 or epoch == config.epochs:
                trace.append(_evaluate(model, train, test, logits, loss, epoch))
            if epoch == config.epochs or (config.checkpoint_every
                                          and epoch % config.checkpoint_every == 0):
                save_checkpoint(epoch)
            if epoch == config.epochs:
                break
            adamw_step(opt, model, grads)
    except NumericOverflowError as exc:
        failed_epoch, error = epoch, str(exc)
        log.warning("run %s aborted: %s", config.digest()[:12], exc)

    last = trace.rows[-1] if len(trace) else None
    summary = RunSummary(
        config_digest=config.digest(),
        seed=config.seed,
        status="failed" if error else "ok",
        grok=detect_grokking(trace, config.acc_threshold) if len(trace) else None,
        final_entropies=list(last.entropies) if last else [],
        final={} if last is None else {
            "epoch": last.epoch, "train_loss": last.train_loss, "test_loss": last.test_loss,
            "train_acc": last.train_acc, "test_acc": last.test_acc},
        epochs_completed=epoch if error else config.epochs,
        wall_clock_s=round(time.perf_counter() - started, 3),
        checkpoints=saved,
        failed_epoch=failed_epoch,
        error=error,
        seed_source=seed_source,
    )
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / TRACE_FILE).write_text(format_trace(trace, len(config.arch.shapes)))
        (out / SUMMARY_FILE).write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    return trace, summary


def _failure(config: RunConfig, exc: Exception) -> RunSummary:
    return RunSummary(config.digest(), config.seed, "failed", None, [], {}, 0, 0.0,
                      error=f"{type(exc).__name__}: {exc}")


def _run_isolated(config: RunConfig) -> RunSummary:
    try:
        return run_training(config)[1]
    except Exception as exc:  # a broken run must not stop the sweep
        log.exception("run %s failed", config.digest()[:12])
        return _failure(config, exc)


def run_sweep(configs, workers: int = 1) -> list[RunSummary]:
    """Run every config once; summaries come back in input order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    configs = list(configs)
    if not configs:
        return []
    if workers == 1:
        return [_run_isolated(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_isolated, configs))


def sweep_outputs(configs, out_dir) -> list[RunConfig]:
    """Give each config its own ``run_XXXX`` directory under ``out_dir``."""
    out_dir = Path(out_dir)
    return [c.with_output(out_dir / f"run_{k:04d}") for k, c in enumerate(configs)]


def final_weights(config: RunConfig) -> list[np.ndarray]:
    """Load the last checkpoint written by a finished run."""
    path = Path(config.output_dir) / f"checkpoints/epoch_{config.epochs:06d}.json"
    return checkpoint.load(path)[0].weights
