"""Run and sweep configuration files (JSON, fixed schema, unknown keys rejected)."""
from __future__ import annotations

import copy
import hashlib
import itertools
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema

from .dataset import DatasetSpec, SymmetryFilter
from .network import ActivationSpec, ArchSpec

FORMAT_VERSION = 1
MASK64 = (1 << 64) - 1

DEFAULT_OPTIMIZER = {"lr": 1e-2, "beta1": 0.9, "beta2": 0.98, "eps": 1e-8, "weight_decay": 0.05}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("; ".join(self.problems))


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(root: int, index: int) -> int:
    """64-bit child seed: ``splitmix64(splitmix64(root) + index)``."""
    return splitmix64((splitmix64(root & MASK64) + index) & MASK64)


_ACTIVATION = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["polynomial", "cubic", "abs_cubic", "signed_square"]},
        "b": {"type": "number"},
        "a": {"type": "number"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_RUN_BODY = {
    "dataset": {
        "type": "object",
        "properties": {
            "modulus": {"type": "integer", "minimum": 2},
            "train_frac": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "filter": {
                "type": "object",
                "properties": {
                    "require_j_ge_i": {"type": "boolean"},
                    "require_i_gt_j": {"type": "boolean"},
                    "excluded_differences": {"type": "array", "items": {"type": "integer"}},
                },
                "additionalProperties": False,
            },
        },
        "required": ["modulus", "train_frac"],
        "additionalProperties": False,
    },
    "model": {
        "type": "object",
        "properties": {
            "hidden_dims": {"type": "array", "items": {"type": "integer", "minimum": 1},
                            "minItems": 1, "maxItems": 2},
            "activation": {"oneOf": [_ACTIVATION, {"type": "array", "items": _ACTIVATION,
                                                   "minItems": 1, "maxItems": 2}]},
        },
        "required": ["hidden_dims"],
        "additionalProperties": False,
    },
    "optimizer": {
        "type": "object",
        "properties": {
            "lr": {"type": "number", "exclusiveMinimum": 0},
            "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "eps": {"type": "number", "exclusiveMinimum": 0},
            "weight_decay": {"type": "number", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "epochs": {"type": "integer", "minimum": 1},
    "log_every": {"type": "integer", "minimum": 1},
    "checkpoint_every": {"type": "integer", "minimum": 0},
    "acc_threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    "seed": {"type": "integer", "minimum": 0, "maximum": MASK64},
    "output_dir": {"type": ["string", "null"]},
}

RUN_SCHEMA = {
    "type": "object",
    "properties": {"format_version": {"const": FORMAT_VERSION}, **_RUN_BODY},
    "required": ["format_version", "dataset", "model", "epochs"],
    "additionalProperties": False,
}

SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "root_seed": {"type": "integer", "minimum": 0, "maximum": MASK64},
        "base": {"type": "object"},
        "grid": {"type": "object", "additionalProperties": {"type": "array", "minItems": 1}},
        "repeats": {"type": "integer", "minimum": 1},
    },
    "required": ["format_version", "base"],
    "additionalProperties": False,
}


def _validate(doc, schema):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError([f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
                           for e in errors])


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec
    arch: ArchSpec
    optimizer: dict = field(default_factory=lambda: dict(DEFAULT_OPTIMIZER))
    epochs: int = 20000
    log_every: int = 10
    checkpoint_every: int = 0
    acc_threshold: float = 0.99
    seed: int = 0
    output_dir: str | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.log_every < 1 or self.checkpoint_every < 0:
            raise ConfigError("epochs and log_every must be >= 1, checkpoint_every >= 0")
        if not 0 < self.acc_threshold <= 1:
            raise ConfigError("acc_threshold must lie in (0, 1]")

    @property
    def init_seed(self) -> int:
        return derive_seed(self.seed, 1)

    def to_dict(self, with_output: bool = True) -> dict:
        acts = [a.to_dict() for a in self.arch.activations]
        d = {
            "format_version": FORMAT_VERSION,
            "dataset": {
                "modulus": self.dataset.modulus,
                "train_frac": self.dataset.train_frac,
                "filter": self.dataset.filter.to_dict(),
            },
            "model": {
                "hidden_dims": list(self.arch.hidden_dims),
                "activation": acts if len(set(map(json.dumps, acts))) > 1 else acts[0],
            },
            "optimizer": dict(self.optimizer),
            "epochs": self.epochs,
            "log_every": self.log_every,
            "checkpoint_every": self.checkpoint_every,
            "acc_threshold": self.acc_threshold,
            "seed": self.seed,
        }
        if with_output:
            d["output_dir"] = self.output_dir
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, output directory excluded."""
        text = json.dumps(self.to_dict(with_output=False), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_seed(self, seed: int) -> RunConfig:
        return replace(self, seed=seed,
                       dataset=replace(self.dataset, seed=derive_seed(seed, 0)))

    def with_output(self, output_dir) -> RunConfig:
        return replace(self, output_dir=None if output_dir is None else str(output_dir))


def run_config_from_dict(doc: dict) -> RunConfig:
    _validate(doc, RUN_SCHEMA)
    ds, md = doc["dataset"], doc["model"]
    seed = int(doc.get("seed", 0))
    acts = md.get("activation", {"kind": "polynomial", "b": 0.0, "a": 1.0})
    acts = acts if isinstance(acts, list) else [acts]
    try:
        dataset = DatasetSpec(ds["modulus"], float(ds["train_frac"]),
                              SymmetryFilter.from_dict(ds.get("filter", {})),
                              derive_seed(seed, 0))
        arch = ArchSpec(ds["modulus"], tuple(md["hidden_dims"]),
                        tuple(ActivationSpec.from_dict(a) for a in acts))
        return RunConfig(
            dataset=dataset,
            arch=arch,
            optimizer={**DEFAULT_OPTIMIZER, **doc.get("optimizer", {})},
            epochs=doc["epochs"],
            log_every=doc.get("log_every", 10),
            checkpoint_every=doc.get("checkpoint_every", 0),
            acc_threshold=doc.get("acc_threshold", 0.99),
            seed=seed,
            output_dir=doc.get("output_dir"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc


def load_run_config(path) -> RunConfig:
    return run_config_from_dict(_read_json(path))


def _set_path(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def expand_sweep(doc: dict, root_seed: int | None = None) -> list[RunConfig]:
    """Grid product (keys in file order) times ``repeats``; run ``k`` gets ``derive_seed(root, k)``."""
    _validate(doc, SWEEP_SCHEMA)
    root = doc.get("root_seed", 0) if root_seed is None else root_seed
    grid = doc.get("grid", {})
    keys = list(grid)
    configs = []
    index = 0
    for values in itertools.product(*(grid[k] for k in keys)):
        for _ in range(doc.get("repeats", 1)):
            run = copy.deepcopy(doc["base"])
            run.setdefault("format_version", FORMAT_VERSION)
            for key, value in zip(keys, values):
                _set_path(run, key, copy.deepcopy(value))
            run["seed"] = derive_seed(root, index)
            try:
                configs.append(run_config_from_dict(run))
            except ConfigError as exc:
                raise ConfigError([f"sweep run {index}: {p}" for p in exc.problems]) from exc
            index += 1
    return configs


def load_sweep(path, root_seed: int | None = None) -> list[RunConfig]:
    return expand_sweep(_read_json(path), root_seed)
