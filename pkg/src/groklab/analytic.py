"""Closed-form cosine weights that solve modular addition, checked by enumeration.

Hidden row ``r`` carries a frequency ``k`` and phases ``(phi1, phi2, phi3)``::

    W1[r, n1]     = cos(2 pi k n1 / p + phi1)
    W1[r, p + n2] = cos(2 pi k n2 / p + phi2)
    W2[q, r]      = cos(-2 pi k q / p - phi3),   phi3 = phi1 + phi2

With a squaring activation the output contributions add coherently only at
``q = (n + m) mod p``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .network import ActivationSpec, ArchSpec, ModelState


@dataclass(frozen=True)
class PhaseAssignment:
    first: np.ndarray
    second: np.ndarray
    output: np.ndarray

    @classmethod
    def constrained(cls, first, second) -> PhaseAssignment:
        first = np.asarray(first, dtype=np.float64)
        second = np.asarray(second, dtype=np.float64)
        return cls(first, second, first + second)

    @classmethod
    def zeros(cls, n: int) -> PhaseAssignment:
        return cls.constrained(np.zeros(n), np.zeros(n))

    def __len__(self):
        return len(self.first)

    def satisfies_constraint(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.output, self.first + self.second, rtol=0.0, atol=atol))


@dataclass(frozen=True)
class AnalyticWeights:
    p: int
    first: np.ndarray    # N x 2p
    second: np.ndarray   # p x N
    frequencies: np.ndarray
    phases: PhaseAssignment

    @property
    def width(self) -> int:
        return self.first.shape[0]

    def to_model(self) -> ModelState:
        arch = ArchSpec(self.p, (self.width,), (ActivationSpec.square(),))
        return ModelState(arch, [self.first.copy(), self.second.copy()])


@dataclass(frozen=True)
class AnalyticReport:
    p: int
    width: int
    all_correct: bool
    misclassified: int
    margin: float
    cross_term_residual: float
    inputs_checked: int

    def to_dict(self) -> dict:
        return asdict(self)


def sample_phases(p: int, n: int, seed: int) -> PhaseAssignment:
    """Input phases uniform on [0, 2 pi); the output phase is their sum."""
    if n < 1:
        raise ValueError("need at least one hidden row")
    rng = np.random.default_rng(seed)
    first = rng.uniform(0.0, 2.0 * math.pi, n)
    second = rng.uniform(0.0, 2.0 * math.pi, n)
    return PhaseAssignment.constrained(first, second)


def default_frequency_plan(p: int, n: int) -> np.ndarray:
    """Rows cycle through k = 1 .. p-1, so every nonzero class is covered once n >= p - 1."""
    return 1 + np.arange(n) % (p - 1)


def build_analytic_weights(p: int, n: int, phases: PhaseAssignment | None = None,
                           freq_plan=None) -> AnalyticWeights:
    if n < 1:
        raise ValueError("need at least one hidden row")
    if p < 2:
        raise ValueError("modulus must be >= 2")
    phases = PhaseAssignment.zeros(n) if phases is None else phases
    if len(phases) != n:
        raise ValueError(f"{len(phases)} phase triples for {n} rows")
    freqs = default_frequency_plan(p, n) if freq_plan is None else np.asarray(freq_plan, dtype=np.int64)
    if freqs.shape != (n,) or np.any(freqs < 1) or np.any(freqs > p - 1):
        raise ValueError("freq_plan must assign each row a frequency in 1..p-1")

    residues = np.arange(p)
    angle = 2.0 * math.pi * np.outer(freqs, residues) / p          # N x p
    first = np.hstack([np.cos(angle + phases.first[:, None]),
                       np.cos(angle + phases.second[:, None])])
    second = np.cos(-angle.T - phases.output[None, :])              # p x N
    return AnalyticWeights(p, first, second, freqs, phases)


def analytic_hidden(weights: AnalyticWeights, n: int, m: int) -> np.ndarray:
    """Unnormalized first-layer outputs for inputs (n, m)."""
    p = weights.p
    if not (0 <= n < p and 0 <= m < p):
        raise ValueError(f"inputs ({n}, {m}) out of range for p={p}")
    return weights.first[:, n] + weights.first[:, p + m]


def analytic_output(weights: AnalyticWeights, n: int, m: int) -> np.ndarray:
    """Network output over q = 0..p-1, through the exact squared pipeline."""
    h = analytic_hidden(weights, n, m)
    return weights.second @ (h * h) / (2 * weights.p * weights.width)


def all_outputs(weights: AnalyticWeights) -> np.ndarray:
    """Outputs for every (n, m), row index ``n * p + m``; shape ``(p*p, p)``."""
    p = weights.p
    n, m = np.divmod(np.arange(p * p), p)
    h = weights.first[:, n] + weights.first[:, p + m]               # N x p^2
    return (weights.second @ (h * h)).T / (2 * p * weights.width)


def interference_approximation(p: int, freqs, n: int, m: int) -> np.ndarray:
    """The coherent part ``1/2 sum_k cos(2 pi k (n + m - q) / p)``, unnormalized."""
    q = np.arange(p)
    freqs = np.asarray(freqs)
    return 0.5 * np.cos(2.0 * math.pi * np.outer(n + m - q, freqs) / p).sum(axis=1)


def verify_analytic(p: int, n: int, seed: int | None = None,
                    phases: PhaseAssignment | None = None, freq_plan=None) -> AnalyticReport:
    """Classify every one of the p^2 inputs with the closed-form weights.

    ``seed=None`` and no explicit ``phases`` means all-zero phases. The margin
    is the smallest gap between the correct class and the best other class,
    negative when some input is misclassified.
    """
    if phases is None:
        phases = PhaseAssignment.zeros(n) if seed is None else sample_phases(p, n, seed)
    weights = build_analytic_weights(p, n, phases, freq_plan)
    out = all_outputs(weights)
    rows = np.arange(p * p)
    target = (rows // p + rows % p) % p
    correct_val = out[rows, target]
    others = out.copy()
    others[rows, target] = -np.inf
    margin = float(np.min(correct_val - others.max(axis=1)))
    misclassified = int(np.count_nonzero(np.argmax(out, axis=1) != target))

    scale = 2 * p * weights.width
    residual = 0.0
    for r in rows:
        approx = interference_approximation(p, weights.frequencies, r // p, r % p)
        residual = max(residual, float(np.max(np.abs(out[r] * scale - approx))))
    return AnalyticReport(p, n, misclassified == 0, misclassified, margin, residual, p * p)
