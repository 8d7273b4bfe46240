"""Filter bank files: JSON, versioned, masks rebuilt from the centres on load."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from filterts.errors import ContractError
from filterts.layers.sgfilter import FilterBank, SplitFingerprint

BANK_FORMAT_VERSION = 1


def bank_to_dict(bank: FilterBank) -> dict:
    return {
        "format_version": BANK_FORMAT_VERSION,
        "n_vars": bank.n_vars,
        "n_filters": bank.n_filters,
        "d_model": bank.d_model,
        "delta_f": bank.delta_f,
        "window_len": bank.window_len,
        "centers": bank.centers.tolist(),
        "center_magnitudes": bank.center_magnitudes.tolist(),
        "fingerprint": {
            "length": bank.fingerprint.length,
            "n_vars": bank.fingerprint.n_vars,
            "sha256": bank.fingerprint.sha256,
        },
    }


def bank_from_dict(raw: dict) -> FilterBank:
    version = raw.get("format_version")
    if version != BANK_FORMAT_VERSION:
        raise ContractError(f"unsupported filter bank format version {version!r}")
    centers = np.asarray(raw["centers"], dtype=np.int64).reshape(raw["n_vars"], raw["n_filters"])
    return FilterBank(
        centers=centers,
        center_magnitudes=np.asarray(raw["center_magnitudes"], dtype=np.float64).reshape(centers.shape),
        d_model=int(raw["d_model"]),
        delta_f=int(raw["delta_f"]),
        window_len=int(raw["window_len"]),
        fingerprint=SplitFingerprint(**raw["fingerprint"]),
    )


def save_bank(bank: FilterBank, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(bank_to_dict(bank), indent=2) + "\n")
    return path


def load_bank(path: Path | str) -> FilterBank:
    return bank_from_dict(json.loads(Path(path).read_text()))
