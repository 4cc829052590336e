"""``groklab`` command line: train, sweep, analyze, factor, verify-analytic, plot."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import analysis, checkpoint, plotting
from .analytic import build_analytic_weights, sample_phases, verify_analytic
from .checkpoint import CheckpointError
from .config import FORMAT_VERSION, ConfigError, load_run_config, load_sweep
from .experiment import read_trace, run_sweep, run_training, sweep_outputs
from .metrics import circular_autocorrelation, dft_power_spectrum
from .pca import pca, projection_pairs, scan_factorization, scan_pairs

SEED_ENV = "GROKLAB_SEED"
PLOT_KINDS = ("accuracy_curves", "entropy_curves", "pca_scatter", "spectrum", "autocorrelation")


class UsageError(Exception):
    """Bad input files or arguments; exit status 2."""


def _emit(doc: dict):
    print(json.dumps({"format_version": FORMAT_VERSION, **doc}, indent=2, allow_nan=False))


def _env_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        seed = int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV}={raw!r} is not an integer")
    if not 0 <= seed < 2**64:
        raise UsageError(f"{SEED_ENV} must be a 64-bit unsigned integer")
    return seed


def _load_checkpoint(path):
    try:
        return checkpoint.load(path)
    except FileNotFoundError:
        raise UsageError(f"checkpoint not found: {path}")
    except CheckpointError as exc:
        raise UsageError(str(exc))


def cmd_train(args) -> int:
    try:
        config = load_run_config(args.config)
    except FileNotFoundError:
        raise UsageError(f"config not found: {args.config}")
    seed = _env_seed()
    source = "config"
    if seed is not None:
        config, source = config.with_seed(seed), f"env:{SEED_ENV}"
    config = config.with_output(args.out)
    _, summary = run_training(config, seed_source=source)
    _emit({"command": "train", "summary": summary.to_dict()})
    return 0 if summary.ok else 1


def cmd_sweep(args) -> int:
    try:
        configs = load_sweep(args.config, root_seed=_env_seed())
    except FileNotFoundError:
        raise UsageError(f"config not found: {args.config}")
    configs = sweep_outputs(configs, args.out)
    summaries = run_sweep(configs, workers=args.workers)
    doc = {"command": "sweep", "runs": [
        {"output_dir": c.output_dir, **s.to_dict()} for c, s in zip(configs, summaries)]}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_summary.json").write_text(json.dumps(
        {"format_version": FORMAT_VERSION, **doc}, indent=2) + "\n")
    _emit({"command": "sweep", "runs": len(summaries),
           "failed": sum(not s.ok for s in summaries),
           "summary_file": str(out / "sweep_summary.json")})
    return 0 if all(s.ok for s in summaries) else 1


def cmd_analyze(args) -> int:
    selected = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in selected if m not in analysis.METRICS]
    if unknown or not selected:
        raise UsageError(f"unknown metric(s) {unknown}; choose from {','.join(analysis.METRICS)}")
    model, meta = _load_checkpoint(args.checkpoint)
    report = analysis.analyze_weights(model.weights, selected, args.threshold, args.csv_dir)
    _emit({"command": "analyze", "checkpoint": str(args.checkpoint), "epoch": meta["epoch"],
           "modulus": model.arch.modulus, "metrics": report})
    return 0


def _pair_svg(pair, p):
    a, b = pair.components
    return plotting.labeled_scatter(pair.points, pair.labels.tolist(),
                                    f"P={p}: PC{a} vs PC{b}", f"PC{a}", f"PC{b}")


def cmd_factor(args) -> int:
    model, meta = _load_checkpoint(args.checkpoint)
    p = model.arch.modulus
    result = pca(model.weights[-1])
    if 2 * args.pairs > result.n_components:
        raise UsageError(f"--pairs {args.pairs} needs {2 * args.pairs} components; "
                         f"checkpoint supports {result.n_components // 2} pairs")
    scans = scan_pairs(result, p, args.pairs, args.link_factor)
    best = scan_factorization(result, p, args.pairs, args.link_factor)
    svg_dir = Path(args.svg_dir)
    svg_dir.mkdir(parents=True, exist_ok=True)
    svgs = []
    for pair in projection_pairs(result, args.pairs):
        path = svg_dir / f"pca_pair_{pair.pair_index}.svg"
        path.write_text(_pair_svg(pair, p))
        svgs.append(str(path))
    _emit({
        "command": "factor",
        "checkpoint": str(args.checkpoint),
        "epoch": meta["epoch"],
        "modulus": p,
        "result": "absent" if best is None else best.to_dict(),
        "pairs": [s.to_dict() for s in scans],
        "explained_variance": result.explained_variance[: 2 * args.pairs].tolist(),
        "svg_files": svgs,
    })
    return 0


def cmd_verify_analytic(args) -> int:
    if args.p < 2 or args.n < 1:
        raise UsageError("--p must be >= 2 and --n >= 1")
    report = verify_analytic(args.p, args.n, args.seed)
    if args.checkpoint_out:
        phases = sample_phases(args.p, args.n, args.seed) if args.seed is not None else None
        weights = build_analytic_weights(args.p, args.n, phases)
        checkpoint.save(args.checkpoint_out, weights.to_model(), seed=args.seed, epoch=0)
    _emit({"command": "verify-analytic", "seed": args.seed, **report.to_dict()})
    return 0


def cmd_plot(args) -> int:
    if args.kind in ("accuracy_curves", "entropy_curves"):
        if not args.trace:
            raise UsageError(f"--kind {args.kind} needs --trace")
        try:
            trace = read_trace(args.trace)
        except (OSError, ValueError, IndexError, StopIteration) as exc:
            raise UsageError(f"unreadable trace {args.trace}: {exc}")
        if len(trace) == 0:
            raise UsageError(f"trace {args.trace} has no rows")
        svg = (plotting.accuracy_curves(trace) if args.kind == "accuracy_curves"
               else plotting.entropy_curves(trace))
    else:
        if not args.checkpoint:
            raise UsageError(f"--kind {args.kind} needs --checkpoint")
        model, _ = _load_checkpoint(args.checkpoint)
        last = model.weights[-1]
        p = model.arch.modulus
        if args.kind == "pca_scatter":
            result = pca(last)
            if 2 * args.pair + 2 > result.n_components:
                raise UsageError(f"--pair {args.pair} out of range")
            svg = _pair_svg(projection_pairs(result, args.pair + 1)[args.pair], p)
        else:
            if not 0 <= args.column < last.shape[1]:
                raise UsageError(f"--column must lie in [0, {last.shape[1]})")
            seq = last[:, args.column]
            if args.kind == "spectrum":
                svg = plotting.bar_chart(dft_power_spectrum(seq),
                                         f"DFT power, hidden unit {args.column}", "bin", "power")
            else:
                try:
                    corr = circular_autocorrelation(seq)
                except ValueError as exc:
                    raise UsageError(str(exc))
                xs = list(range(len(corr)))
                svg = plotting.line_chart(
                    [plotting.Series("autocorrelation", xs, corr)],
                    f"Circular autocorrelation, hidden unit {args.column}", "lag", "Corr(k)/Corr(0)")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg)
    _emit({"command": "plot", "kind": args.kind, "output": str(out)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groklab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model from a run config")
    p.add_argument("--config", required=True, help="run config JSON file")
    p.add_argument("--out", required=True, help="output directory for trace, summary, checkpoints")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run every config of a sweep grid")
    p.add_argument("--config", required=True, help="sweep config JSON file")
    p.add_argument("--out", required=True, help="output directory; one run_XXXX per config")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="weight metrics of a checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint JSON file")
    p.add_argument("--metrics", required=True,
                   help="comma list of entropy,autocorr,dft,deadweight")
    p.add_argument("--threshold", type=float, default=1e-41,
                   help="dead-weight magnitude threshold (default 1e-41)")
    p.add_argument("--csv-dir", help="also write per-column autocorr/dft sequences as CSV here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("factor", help="PCA cluster factorization of the output layer")
    p.add_argument("--checkpoint", required=True, help="checkpoint JSON file")
    p.add_argument("--pairs", type=int, default=3, help="projection pairs to scan (default 3)")
    p.add_argument("--link-factor", type=float, default=2.0,
                   help="single-linkage cut as a multiple of the median NN distance (default 2)")
    p.add_argument("--svg-dir", default=".", help="directory for pca_pair_<m>.svg (default .)")
    p.set_defaults(func=cmd_factor)

    p = sub.add_parser("verify-analytic", help="check the closed-form cosine solution")
    p.add_argument("--p", type=int, required=True, help="modulus")
    p.add_argument("--n", type=int, required=True, help="hidden width")
    p.add_argument("--seed", type=int, default=None, help="phase seed (omit for zero phases)")
    p.add_argument("--checkpoint-out", help="also save the analytic weights as a checkpoint")
    p.set_defaults(func=cmd_verify_analytic)

    p = sub.add_parser("plot", help="render an SVG figure")
    p.add_argument("--kind", required=True, choices=PLOT_KINDS, help="figure type")
    p.add_argument("--trace", help="trace.csv (accuracy_curves, entropy_curves)")
    p.add_argument("--checkpoint", help="checkpoint (pca_scatter, spectrum, autocorrelation)")
    p.add_argument("--pair", type=int, default=0, help="projection pair for pca_scatter")
    p.add_argument("--column", type=int, default=0, help="hidden unit for spectrum/autocorrelation")
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print("invalid config:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"groklab {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
