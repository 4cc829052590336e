"""Checkpoint-level reports combining the weight metrics."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from . import metrics
from .metrics import DegenerateInputError

METRICS = ("entropy", "autocorr", "dft", "deadweight")


def _sign_changes(x) -> int:
    s = np.sign(x)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _write_long_csv(path: Path, sequences: dict[int, np.ndarray]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "index", "value"])
        for col, seq in sequences.items():
            for k, v in enumerate(seq):
                w.writerow([col, k, repr(float(v))])


def entropy_report(weights) -> list[dict]:
    out = []
    for k, w in enumerate(weights, start=1):
        out.append({
            "layer": k,
            "entropy": metrics.layer_entropy(w),
            "entropy_per_neuron": metrics.layer_entropy(w, mode="neuron"),
            "max_entropy": math.log(w.size),
        })
    return out


def autocorr_report(last_layer, csv_path: Path | None = None) -> dict:
    per_column, sequences, skipped = [], {}, []
    for col, seq in enumerate(metrics.column_sequences(last_layer)):
        try:
            corr = metrics.circular_autocorrelation(seq)
        except DegenerateInputError:
            skipped.append(col)
            continue
        sequences[col] = corr
        half = corr[: len(corr) // 2 + 1]
        per_column.append({"column": col, "lag1": float(corr[1]), "min": float(corr.min()),
                           "sign_changes_half": _sign_changes(half)})
    if csv_path is not None:
        _write_long_csv(csv_path, sequences)
    report = {"columns": per_column, "constant_columns": skipped}
    if per_column:
        report["summary"] = {
            "lag1": metrics.summarize([c["lag1"] for c in per_column]),
            "sign_changes_half": metrics.summarize([c["sign_changes_half"] for c in per_column]),
        }
    return report


def dft_report(last_layer, csv_path: Path | None = None, strong_ratio: float = 5.0) -> dict:
    per_column, sequences = [], {}
    for col, seq in enumerate(metrics.column_sequences(last_layer)):
        power = metrics.dft_power_spectrum(seq)
        sequences[col] = power
        try:
            peak = metrics.peak_frequency_ratio(power)
        except DegenerateInputError:
            continue
        per_column.append({"column": col, "peak_bin": peak.peak_bin, "ratio": peak.ratio})
    if csv_path is not None:
        _write_long_csv(csv_path, sequences)
    ratios = [c["ratio"] for c in per_column]
    bins = sorted({c["peak_bin"] for c in per_column})
    return {
        "columns": per_column,
        "summary": {
            "ratio": metrics.summarize(ratios) if ratios else None,
            "columns_with_ratio_ge": {"threshold": strong_ratio,
                                      "count": sum(r >= strong_ratio for r in ratios)},
            "peak_bins": bins,
        },
    }


def deadweight_report(weights, threshold: float) -> list[dict]:
    return [{"layer": k, "threshold": threshold,
             "fraction": metrics.dead_weight_fraction(w, threshold)}
            for k, w in enumerate(weights, start=1)]


def analyze_weights(weights, selected, threshold: float = 1e-41, csv_dir=None) -> dict:
    unknown = [m for m in selected if m not in METRICS]
    if unknown:
        raise ValueError(f"unknown metric(s) {unknown}; choose from {list(METRICS)}")
    csv_dir = Path(csv_dir) if csv_dir else None
    report = {}
    for name in selected:
        if name == "entropy":
            report["entropy"] = entropy_report(weights)
        elif name == "autocorr":
            report["autocorr"] = autocorr_report(weights[-1], csv_dir and csv_dir / "autocorr.csv")
        elif name == "dft":
            report["dft"] = dft_report(weights[-1], csv_dir and csv_dir / "dft.csv")
        elif name == "deadweight":
            report["deadweight"] = deadweight_report(weights, threshold)
    return report
