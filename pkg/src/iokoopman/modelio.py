"""Versioned JSON model files.

Floats are written with ``repr`` precision by the json module, so matrices
survive a save/load cycle bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .embedding import NormStats
from .errors import ParseError, VersionMismatch
from .lifting import LiftingConfig, Variant
from .realization import KoopmanModel

FORMAT = "iokoopman-model"
VERSION = 1
SAME_AS_PSI = "same_as_psi"


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def model_to_dict(model: KoopmanModel, provenance: dict | None = None) -> dict:
    if model.phi_cfg is None:
        phi = None
    elif model.phi_cfg is model.psi_cfg:
        phi = SAME_AS_PSI
    else:
        phi = model.phi_cfg.to_dict()
    return {
        "format": FORMAT,
        "version": VERSION,
        "variant": model.variant.value,
        "n_d": model.n_d,
        "dims": {"n_h": model.n_h, "m": model.m, "l": model.l},
        "A": model.A.tolist(),
        "B0": model.B0.tolist(),
        "B": None if model.B is None else model.B.tolist(),
        "C": model.C.tolist(),
        "psi_cfg": model.psi_cfg.to_dict(),
        "phi_cfg": phi,
        "norm_stats": None if model.norm_stats is None else model.norm_stats.to_dict(),
        "metadata": model.metadata,
        "provenance": provenance or {},
    }


def _matrix(d: dict, key: str, rows: int) -> np.ndarray:
    arr = np.asarray(d[key], dtype=float)
    if arr.size == 0:
        # json cannot encode a (rows, 0) shape
        arr = np.zeros((rows, 0))
    if arr.ndim != 2:
        raise ParseError(f"{key} is not a matrix")
    return arr


def model_from_dict(d: dict) -> KoopmanModel:
    if d.get("format") != FORMAT:
        raise ParseError(f"not a model file (format={d.get('format')!r})")
    version = d.get("version")
    if version != VERSION:
        raise VersionMismatch(f"model file version {version!r}, this build reads {VERSION}")
    try:
        A = _matrix(d, "A", 0)
        rows = A.shape[0]
        psi = LiftingConfig.from_dict(d["psi_cfg"])
        phi_raw = d["phi_cfg"]
        phi = psi if phi_raw == SAME_AS_PSI else (
            None if phi_raw is None else LiftingConfig.from_dict(phi_raw))
        dims = d["dims"]
        stats = None if d["norm_stats"] is None else NormStats.from_dict(d["norm_stats"])
        return KoopmanModel(
            Variant(d["variant"]), A, _matrix(d, "B0", rows),
            None if d["B"] is None else _matrix(d, "B", rows), _matrix(d, "C", 0),
            psi, phi, int(d["n_d"]), int(dims["n_h"]), int(dims["m"]), int(dims["l"]),
            stats, dict(d.get("metadata", {})))
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def save_model(model: KoopmanModel, path, provenance: dict | None = None) -> None:
    text = json.dumps(model_to_dict(model, provenance), indent=1)
    Path(path).write_text(text + "\n")


def load_model(path) -> KoopmanModel:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
    if not isinstance(d, dict):
        raise ParseError(f"{path}: top level must be an object", line=1)
    return model_from_dict(d)


def load_provenance(path) -> dict:
    return json.loads(Path(path).read_text()).get("provenance", {})
