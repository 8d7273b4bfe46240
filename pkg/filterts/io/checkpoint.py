"""Checkpoint container.

A checkpoint is one JSON document::

    {
      "format_version": 1,
      "model_config": {...},
      "instance_norm_eps": 1e-05,
      "bank": {... filter bank record, see filterts.io.bank ...},
      "parameters": {"<name>": {"shape": [..], "real": [..], "imag": [..]}, ...},
      "optimizer": {"step": t, "m": {<name>: array}, "v": {<name>: array}} | null,
      "meta": {...}
    }

Arrays are flattened row-major. Floats are written with Python's shortest round-trip
repr, so loading restores every parameter bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from filterts.errors import ContractError
from filterts.io.bank import bank_from_dict, bank_to_dict
from filterts.layers.sgfilter import FilterBank
from filterts.model import FilterTS, ModelConfig
from filterts.train.optim import AdamState

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    bank: FilterBank
    parameters: dict[str, np.ndarray]
    optimizer: AdamState | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def capture(cls, model: FilterTS, optimizer: AdamState | None = None, **meta) -> Checkpoint:
        state = None
        if optimizer is not None:
            state = AdamState(
                step=optimizer.step,
                m={k: v.copy() for k, v in optimizer.m.items()},
                v={k: v.copy() for k, v in optimizer.v.items()},
            )
        return cls(model.config, model.bank, model.state_dict(), state, dict(meta))

    def build_model(self) -> FilterTS:
        model = FilterTS(self.config, self.bank)
        model.load_state_dict(self.parameters)
        return model


def encode_array(a: np.ndarray) -> dict:
    a = np.asarray(a)
    return {
        "shape": list(a.shape),
        "real": np.real(a).astype(np.float64).ravel().tolist(),
        "imag": np.imag(a).astype(np.float64).ravel().tolist(),
    }


def decode_array(raw: dict, real: bool = False) -> np.ndarray:
    shape = tuple(raw["shape"])
    re = np.asarray(raw["real"], dtype=np.float64).reshape(shape)
    if real:
        return re
    return re + 1j * np.asarray(raw["imag"], dtype=np.float64).reshape(shape)


def checkpoint_to_dict(ckpt: Checkpoint) -> dict:
    optimizer = None
    if ckpt.optimizer is not None:
        optimizer = {
            "step": ckpt.optimizer.step,
            "m": {k: encode_array(v) for k, v in ckpt.optimizer.m.items()},
            "v": {k: encode_array(v) for k, v in ckpt.optimizer.v.items()},
        }
    return {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "model_config": ckpt.config.to_dict(),
        "instance_norm_eps": ckpt.config.eps,
        "bank": bank_to_dict(ckpt.bank),
        "parameters": {k: encode_array(v) for k, v in ckpt.parameters.items()},
        "optimizer": optimizer,
        "meta": ckpt.meta,
    }


def checkpoint_from_dict(raw: dict) -> Checkpoint:
    version = raw.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ContractError(f"unsupported checkpoint format version {version!r}")
    parameters = {name: decode_array(arr) for name, arr in raw["parameters"].items()}
    optimizer = None
    if raw.get("optimizer") is not None:
        optimizer = AdamState(
            step=int(raw["optimizer"]["step"]),
            m={k: decode_array(v) for k, v in raw["optimizer"]["m"].items()},
            v={k: decode_array(v) for k, v in raw["optimizer"]["v"].items()},
        )
    return Checkpoint(
        config=ModelConfig.from_dict(raw["model_config"]),
        bank=bank_from_dict(raw["bank"]),
        parameters=parameters,
        optimizer=optimizer,
        meta=raw.get("meta") or {},
    )


def save_checkpoint(ckpt: Checkpoint, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    print(f"💾 Saving checkpoint → {path}")
    path.write_text(json.dumps(checkpoint_to_dict(ckpt), allow_nan=False))
    return path


def load_checkpoint(path: Path | str) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return checkpoint_from_dict(json.loads(path.read_text()))
