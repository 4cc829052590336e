"""Diagnostics over weights and training traces."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

RATIO_CAP = 1e6


class DegenerateInputError(ValueError):
    pass


def layer_entropy(weights, mode: str = "flat") -> float:
    """Shannon entropy (nats) of the normalized absolute weights of one layer.

    ``mode="flat"`` treats every connection as one outcome. ``mode="neuron"``
    uses the L2 norm of each row (one value per receiving neuron) instead.
    """
    w = np.asarray(weights, dtype=np.float64)
    if mode == "flat":
        mags = np.abs(w).ravel()
    elif mode == "neuron":
        mags = np.linalg.norm(np.atleast_2d(w), axis=1)
    else:
        raise ValueError(f"unknown entropy mode {mode!r}")
    total = mags.sum()
    if not total > 0:
        raise DegenerateInputError("degenerate weights: all entries are zero")
    probs = mags[mags > 0] / total
    return float(-np.sum(probs * np.log(probs)))


def circular_autocorrelation(x) -> np.ndarray:
    """``Corr(k) = sum_l x(l) x(l - k)`` with periodic indices, mean removed, ``Corr(0) = 1``."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError("need at least two samples")
    x = x - x.mean()
    if not np.any(x):
        raise DegenerateInputError("constant sequence has no autocorrelation")
    corr = np.array([np.dot(x, np.roll(x, k)) for k in range(n)])
    return corr / corr[0]


def dft_power_spectrum(x) -> np.ndarray:
    """``|X_k|^2`` for bins 0..N-1 of the length-N DFT."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) < 2:
        raise ValueError("need at least two samples")
    return np.abs(np.fft.fft(x)) ** 2


@dataclass(frozen=True)
class PeakReport:
    peak_bin: int
    ratio: float


def peak_frequency_ratio(spectrum, exclude_dc: bool = True) -> PeakReport:
    """Strongest frequency versus the average of the others.

    Bins ``k`` and ``N-k`` carry the same frequency of a real signal, so they
    are folded together before comparing. The ratio is capped at 1e6.
    """
    spectrum = np.asarray(spectrum, dtype=np.float64)
    n = len(spectrum)
    if n < 3:
        raise ValueError("spectrum needs at least three bins")
    half = n // 2
    folded = np.array([spectrum[k] + (spectrum[n - k] if n - k != k else 0.0)
                       for k in range(1, half + 1)])
    bins = np.arange(1, half + 1)
    if not exclude_dc:
        folded = np.concatenate([[spectrum[0]], folded])
        bins = np.concatenate([[0], bins])
    if not np.any(folded > 0):
        raise DegenerateInputError("spectrum has no power")
    top = int(np.argmax(folded))
    rest = np.delete(folded, top)
    mean_rest = rest.mean() if len(rest) else 0.0
    ratio = RATIO_CAP if mean_rest <= folded[top] / RATIO_CAP else folded[top] / mean_rest
    return PeakReport(int(bins[top]), float(min(ratio, RATIO_CAP)))


def dead_weight_fraction(weights, threshold: float = 1e-41) -> float:
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    w = np.asarray(weights, dtype=np.float64)
    return float(np.mean(np.abs(w) < threshold))


@dataclass
class TraceRow:
    epoch: int
    train_loss: float
    test_loss: float
    train_acc: float
    test_acc: float
    entropies: list[float] = field(default_factory=list)


class TrainingTrace:
    """Per-epoch records; epochs must be strictly increasing."""

    def __init__(self, rows=None):
        self.rows: list[TraceRow] = []
        for row in rows or ():
            self.append(row)

    def append(self, row: TraceRow):
        if self.rows and row.epoch <= self.rows[-1].epoch:
            raise ValueError(f"epoch {row.epoch} does not follow {self.rows[-1].epoch}")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=np.float64)

    def entropy(self, layer: int) -> np.ndarray:
        """Entropy series of a 0-based layer index; ``-1`` is the last layer."""
        return np.array([r.entropies[layer] for r in self.rows], dtype=np.float64)

    @property
    def epochs(self) -> np.ndarray:
        return np.array([r.epoch for r in self.rows], dtype=np.int64)

    @property
    def n_layers(self) -> int:
        return len(self.rows[0].entropies) if self.rows else 0


@dataclass(frozen=True)
class GrokReport:
    t_train: int | None
    t_test: int | None
    max_test_acc: float
    threshold: float

    @property
    def delay(self) -> int | None:
        if self.t_train is None or self.t_test is None:
            return None
        return self.t_test - self.t_train

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delay"] = self.delay
        return d


def _first_crossing(epochs, values, threshold):
    hits = np.flatnonzero(values >= threshold)
    return int(epochs[hits[0]]) if len(hits) else None


def detect_grokking(trace: TrainingTrace, acc_threshold: float = 0.99) -> GrokReport:
    if len(trace) == 0:
        raise ValueError("empty trace")
    if not 0.0 < acc_threshold <= 1.0:
        raise ValueError("acc_threshold must lie in (0, 1]")
    epochs = trace.epochs
    test = trace.column("test_acc")
    return GrokReport(
        t_train=_first_crossing(epochs, trace.column("train_acc"), acc_threshold),
        t_test=_first_crossing(epochs, test, acc_threshold),
        max_test_acc=float(test.max()),
        threshold=acc_threshold,
    )


def moving_average(values, window: int = 51) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the ends."""
    values = np.asarray(values, dtype=np.float64)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(values)])
    out = np.empty_like(values)
    n = len(values)
    for k in range(n):
        r = min(half, k, n - 1 - k)
        out[k] = (csum[k + r + 1] - csum[k - r]) / (2 * r + 1)
    return out


@dataclass(frozen=True)
class EntropyPhases:
    """Smoothed entropy change over the three phases of a grokking run."""

    early_change: float      # epoch 0 -> t_train
    grokking_change: float   # t_train -> t_test
    late_change: float       # epoch of max test accuracy -> end
    t_train: int | None
    t_test: int | None
    t_peak: int

    @property
    def pattern(self) -> str:
        sign = {True: "+", False: "-"}
        return "".join(sign[c > 0] for c in (self.early_change, self.grokking_change, self.late_change))

    @property
    def decrease_increase_decrease(self) -> bool:
        return self.early_change < 0 < self.grokking_change and self.late_change < 0


def entropy_phases(trace: TrainingTrace, layer: int = -1, window: int = 51,
                   acc_threshold: float = 0.99) -> EntropyPhases | None:
    """Split the smoothed entropy curve at t_train, t_test and the test-accuracy peak.

    Returns ``None`` when the run never crosses the threshold on both sets.
    """
    report = detect_grokking(trace, acc_threshold)
    if report.t_train is None or report.t_test is None:
        return None
    epochs = trace.epochs
    smooth = moving_average(trace.entropy(layer), window)
    test = trace.column("test_acc")
    at = {int(e): k for k, e in enumerate(epochs)}
    k_train, k_test = at[report.t_train], at[report.t_test]
    k_peak = int(np.argmax(test))
    return EntropyPhases(
        early_change=float(smooth[k_train] - smooth[0]),
        grokking_change=float(smooth[k_test] - smooth[k_train]),
        late_change=float(smooth[-1] - smooth[k_peak]),
        t_train=report.t_train,
        t_test=report.t_test,
        t_peak=int(epochs[k_peak]),
    )


def column_sequences(last_layer) -> list[np.ndarray]:
    """One length-P sequence per hidden unit: the column of the output matrix."""
    w = np.asarray(last_layer, dtype=np.float64)
    return [w[:, c].copy() for c in range(w.shape[1])]


def summarize(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    return {"count": int(v.size), "mean": float(v.mean()), "min": float(v.min()),
            "max": float(v.max()), "median": float(np.median(v))}
