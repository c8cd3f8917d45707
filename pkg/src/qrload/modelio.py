"""Versioned on-disk model files (JSON, written atomically).

One file per zone holds the basis spec with its hash, the trend fit
(coefficients, residuals, moving-average path, window K), and the full
quantile coefficient block. All floats round-trip exactly, so reloading a
model reproduces forecasts bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict

import numpy as np

from . import __version__
from .errors import MissingArtifact
from .features import BasisSpec
from .ingest import format_timestamp, parse_timestamp
from .pipeline import ZoneModel
from .quantreg import QuantileModelSet
from .trend import TrendFit

MODEL_FORMAT_VERSION = 1
COLUMN_LAYOUT_VERSION = 1


def basis_hash(spec: BasisSpec) -> str:
    payload = json.dumps(asdict(spec), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(model: ZoneModel, path, config_hash: str = "") -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "column_layout_version": COLUMN_LAYOUT_VERSION,
        "tool_version": __version__,
        "config_hash": config_hash,
        "zone": model.zone,
        "t_last": format_timestamp(model.t_last),
        "train_start": format_timestamp(model.train_start),
        "epoch": format_timestamp(model.epoch),
        "basis": asdict(model.spec),
        "basis_hash": basis_hash(model.spec),
        "trend": {
            "K": model.trend.K,
            "beta": model.trend.beta.tolist(),
            "residuals": model.trend.residuals.tolist(),
            "trend_path": model.trend.trend_path.tolist(),
        },
        "quantile_models": {
            "taus": list(model.qmodels.taus),
            "hours": list(range(model.qmodels.coef.shape[0])),
            "epoch_weekday": model.qmodels.epoch_weekday,
            "coef": model.qmodels.coef.tolist(),
            "objective": model.qmodels.objective.tolist(),
        },
    }
    atomic_write_text(path, json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")


def load_model(path) -> ZoneModel:
    if not os.path.exists(path):
        raise MissingArtifact(f"model file {path} not found (run `qrload fit` first)")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise MissingArtifact(
            f"{path}: unsupported model format {doc.get('format_version')}")
    spec = BasisSpec(**doc["basis"])
    tr = doc["trend"]
    trend = TrendFit(beta=np.array(tr["beta"]), residuals=np.array(tr["residuals"]),
                     trend_path=np.array(tr["trend_path"]), K=int(tr["K"]))
    qm = doc["quantile_models"]
    qmodels = QuantileModelSet(zone=doc["zone"], spec=spec,
                               epoch_weekday=int(qm["epoch_weekday"]),
                               taus=tuple(qm["taus"]),
                               coef=np.array(qm["coef"]),
                               objective=np.array(qm["objective"]))
    return ZoneModel(zone=doc["zone"], spec=spec, trend=trend, qmodels=qmodels,
                     t_last=parse_timestamp(doc["t_last"]),
                     epoch=parse_timestamp(doc["epoch"]),
                     train_start=parse_timestamp(doc["train_start"]))
