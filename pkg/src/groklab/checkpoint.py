"""Versioned JSON checkpoints.

Floats are written with Python's shortest round-trip repr, so loading a
checkpoint reproduces every weight bit-for-bit.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .network import ActivationSpec, ArchSpec, ModelState

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def to_document(model: ModelState, seed: int | None = None, epoch: int | None = None) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "arch": model.arch.to_dict(),
        "activation": [a.to_dict() for a in model.arch.activations],
        "seed": seed,
        "epoch": epoch,
        "weights": [
            {"shape": list(w.shape), "data": w.ravel(order="C").tolist()}
            for w in model.weights
        ],
    }


def from_document(doc: dict) -> tuple[ModelState, dict]:
    """Rebuild the model; the second item carries ``seed`` and ``epoch``."""
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {doc.get('format_version')!r}")
    try:
        arch = ArchSpec(
            modulus=int(doc["arch"]["modulus"]),
            hidden_dims=tuple(doc["arch"]["hidden_dims"]),
            activations=tuple(ActivationSpec.from_dict(a) for a in doc["activation"]),
        )
        weights = [
            np.asarray(layer["data"], dtype=np.float64).reshape(layer["shape"])
            for layer in doc["weights"]
        ]
        model = ModelState(arch, weights)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    return model, {"seed": doc.get("seed"), "epoch": doc.get("epoch")}


def dumps(model: ModelState, seed: int | None = None, epoch: int | None = None) -> str:
    return json.dumps(to_document(model, seed, epoch), allow_nan=False, separators=(",", ":"))


def save(path, model: ModelState, seed: int | None = None, epoch: int | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(model, seed, epoch) + "\n")
    return path


def load(path) -> tuple[ModelState, dict]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON ({exc})") from exc
    return from_document(doc)
