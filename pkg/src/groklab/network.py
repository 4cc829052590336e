"""Bias-free MLP for modular addition with analytic backprop and AdamW.

Forward map for the two-layer case::

    logits = W2 @ phi(W1 @ x) / (D * N)

with ``D = 2P`` inputs and ``N`` hidden units. A middle layer, when present,
divides its pre-activation by ``sqrt(fan_in)``; the ``1/(D*N)`` factor is only
applied at the output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataset import EncodedDataset

ACTIVATION_KINDS = ("polynomial", "cubic", "abs_cubic", "signed_square")
_KIND_CODE = {name: code for code, name in enumerate(ACTIVATION_KINDS)}


class NumericOverflowError(FloatingPointError):
    def __init__(self, message: str, epoch: int | None = None):
        self.epoch = epoch
        where = f" at epoch {epoch}" if epoch is not None else ""
        super().__init__(f"numeric overflow{where}: {message}")


@dataclass(frozen=True)
class ActivationSpec:
    """``polynomial`` is ``b*x + a*x**2``; the other kinds ignore ``b`` and ``a``."""

    kind: str = "polynomial"
    b: float = 0.0
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in _KIND_CODE:
            raise ValueError(f"unknown activation kind {self.kind!r}; expected one of {ACTIVATION_KINDS}")
        if self.kind != "polynomial":
            object.__setattr__(self, "b", 0.0)
            object.__setattr__(self, "a", 0.0)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "a", float(self.a))

    @classmethod
    def polynomial(cls, b: float, a: float) -> ActivationSpec:
        return cls("polynomial", b, a)

    @classmethod
    def square(cls) -> ActivationSpec:
        return cls("polynomial", 0.0, 1.0)

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    def __call__(self, x):
        h, _ = kernels.activate(_as_2d(x), self.code, self.b, self.a, False)
        return _restore(h, x)

    def derivative(self, x):
        _, d = kernels.activate(_as_2d(x), self.code, self.b, self.a, True)
        return _restore(d, x)

    @property
    def label(self) -> str:
        if self.kind == "cubic":
            return "x^3"
        if self.kind == "abs_cubic":
            return "|x^3|"
        if self.kind == "signed_square":
            return "x^2 sign(x)"
        terms = []
        if self.b:
            terms.append("x" if self.b == 1 else f"{self.b:g}x")
        if self.a:
            terms.append("x^2" if self.a == 1 else f"{self.a:g}x^2")
        return " + ".join(terms) or "0"

    def to_dict(self) -> dict:
        if self.kind == "polynomial":
            return {"kind": self.kind, "b": self.b, "a": self.a}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> ActivationSpec:
        extra = set(d) - {"kind", "b", "a"}
        if extra:
            raise ValueError(f"unknown activation keys: {sorted(extra)}")
        return cls(d.get("kind", "polynomial"), d.get("b", 0.0), d.get("a", 1.0))


def _as_2d(x):
    return np.ascontiguousarray(np.atleast_2d(np.asarray(x, dtype=np.float64)))


def _restore(out, like):
    shape = np.shape(like)
    return float(out[0, 0]) if shape == () else out.reshape(shape)


@dataclass(frozen=True)
class ArchSpec:
    modulus: int
    hidden_dims: tuple[int, ...] = (256,)
    activations: tuple[ActivationSpec, ...] = (ActivationSpec(),)

    def __post_init__(self):
        hidden = tuple(int(h) for h in self.hidden_dims)
        if not 1 <= len(hidden) <= 2 or min(hidden) < 1:
            raise ValueError("hidden_dims must hold one or two positive widths")
        acts = tuple(self.activations)
        if len(acts) == 1 and len(hidden) > 1:
            acts = acts * len(hidden)
        if len(acts) != len(hidden):
            raise ValueError("need one activation per hidden layer (or a single shared one)")
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")
        object.__setattr__(self, "hidden_dims", hidden)
        object.__setattr__(self, "activations", acts)

    @property
    def input_dim(self) -> int:
        return 2 * self.modulus

    @property
    def output_dim(self) -> int:
        return self.modulus

    @property
    def shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return [(dims[k + 1], dims[k]) for k in range(len(dims) - 1)]

    @property
    def output_scale(self) -> float:
        return 1.0 / (self.input_dim * self.hidden_dims[-1])

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "input_dim": self.input_dim,
            "hidden_dims": list(self.hidden_dims),
            "output_dim": self.output_dim,
        }


@dataclass
class ModelState:
    arch: ArchSpec
    weights: list[np.ndarray]

    def __post_init__(self):
        if [w.shape for w in self.weights] != self.arch.shapes:
            raise ValueError(f"weight shapes {[w.shape for w in self.weights]} "
                             f"do not match architecture {self.arch.shapes}")

    def copy(self) -> ModelState:
        return ModelState(self.arch, [w.copy() for w in self.weights])


def init_model(arch: ArchSpec, seed: int) -> ModelState:
    """I.i.d. standard normal entries; scale comes from the output normalization."""
    rng = np.random.default_rng(seed)
    return ModelState(arch, [rng.standard_normal(shape) for shape in arch.shapes])


def _forward(model: ModelState, X, with_grad: bool, epoch=None):
    arch, W = model.arch, model.weights
    act = arch.activations[0]
    if isinstance(X, EncodedDataset):
        wt = np.ascontiguousarray(W[0].T)
        h, d = kernels.onehot_hidden(wt, X.i, X.j, arch.modulus, act.code, act.b, act.a, with_grad)
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != arch.input_dim:
            raise ValueError(f"expected inputs with {arch.input_dim} columns, got shape {X.shape}")
        z = np.ascontiguousarray(X @ W[0].T)
        h, d = kernels.activate(z, act.code, act.b, act.a, with_grad)
    hiddens, slopes = [h], [d]
    for layer in range(1, len(W) - 1):
        act = arch.activations[layer]
        z = np.ascontiguousarray(hiddens[-1] @ W[layer].T) / math.sqrt(W[layer].shape[1])
        h, d = kernels.activate(z, act.code, act.b, act.a, with_grad)
        hiddens.append(h)
        slopes.append(d)
    logits = (hiddens[-1] @ W[-1].T) * arch.output_scale
    if not np.all(np.isfinite(logits)):
        raise NumericOverflowError("non-finite logits", epoch)
    return logits, hiddens, slopes


def forward(model: ModelState, X, epoch: int | None = None) -> np.ndarray:
    """Logits, shape ``(samples, P)``. ``X`` is a dense input matrix or an EncodedDataset."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _forward(model, X, False, epoch)[0]


def _labels(X, labels):
    if labels is None:
        if not isinstance(X, EncodedDataset):
            raise ValueError("labels are required with a dense input matrix")
        return X.labels
    return np.asarray(labels, dtype=np.int64)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    return float(np.mean(lse - shifted[np.arange(len(labels)), labels]))


def loss_and_grad(model: ModelState, X, labels=None, epoch: int | None = None):
    """Mean softmax cross-entropy and its exact gradient for every weight matrix.

    Also returns the logits, which the training loop reuses for accuracy.
    """
    labels = _labels(X, labels)
    arch, W = model.arch, model.weights
    with np.errstate(over="ignore", invalid="ignore"):
        logits, hiddens, slopes = _forward(model, X, True, epoch)
        n = len(labels)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        total = expd.sum(axis=1, keepdims=True)
        rows = np.arange(n)
        loss = float(np.mean(np.log(total[:, 0]) - shifted[rows, labels]))
        if not math.isfinite(loss):
            raise NumericOverflowError("non-finite loss", epoch)

        g = expd / total
        g[rows, labels] -= 1.0
        g *= arch.output_scale / n

        grads = [None] * len(W)
        grads[-1] = g.T @ hiddens[-1]
        upstream = g @ W[-1]
        for layer in range(len(W) - 2, 0, -1):
            gz = upstream * slopes[layer]
            gz /= math.sqrt(W[layer].shape[1])
            grads[layer] = gz.T @ hiddens[layer - 1]
            upstream = gz @ W[layer]
        gz = np.ascontiguousarray(upstream * slopes[0])
        if isinstance(X, EncodedDataset):
            grads[0] = np.ascontiguousarray(kernels.onehot_scatter(gz, X.i, X.j, arch.modulus).T)
        else:
            grads[0] = gz.T @ np.asarray(X, dtype=np.float64)
    return loss, grads, logits


def accuracy(model: ModelState, X, labels=None) -> float:
    labels = _labels(X, labels)
    if len(labels) == 0:
        raise ValueError("accuracy of an empty batch is undefined")
    return accuracy_from_logits(forward(model, X), labels)


def accuracy_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    # np.argmax returns the first maximum: ties go to the lowest class index
    return float(np.mean(np.argmax(logits, axis=1) == labels))


@dataclass
class OptimizerState:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-8
    weight_decay: float = 0.05
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_model(cls, model: ModelState, **hyper) -> OptimizerState:
        opt = cls(**hyper)
        opt.m = [np.zeros_like(w) for w in model.weights]
        opt.v = [np.zeros_like(w) for w in model.weights]
        return opt

    def hyperparameters(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
                "eps": self.eps, "weight_decay": self.weight_decay}


def adamw_step(opt: OptimizerState, model: ModelState, grads) -> tuple[ModelState, OptimizerState]:
    """One Adam step with decoupled weight decay; updates ``model`` and ``opt`` in place."""
    if not opt.m:
        opt.m = [np.zeros_like(w) for w in model.weights]
        opt.v = [np.zeros_like(w) for w in model.weights]
    opt.step += 1
    t = opt.step
    c1 = 1.0 - opt.beta1 ** t
    c2 = 1.0 - opt.beta2 ** t
    for w, g, m, v in zip(model.weights, grads, opt.m, opt.v):
        if opt.weight_decay:
            w -= (opt.lr * opt.weight_decay) * w
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * (g * g)
        w -= opt.lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)
    return model, opt
