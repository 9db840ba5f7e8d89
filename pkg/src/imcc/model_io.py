"""Model file persistence.

A single JSON envelope makes predictions self-contained:
{format_version, kind, kernel, d, q, n, norm:{center,scale}, bias,
weights (linear) or coefficients + train_features (kernel)}. The stored
train_features are the normalized training rows; norm stats therefore apply
to test inputs only. Floats are written as decimal with 17 significant
digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .datasets import NormStats
from .errors import ParseError, ValidationError
from .solver import KernelModel, KernelSpec, LinearModel

FORMAT_VERSION = 1


def _encode(value):
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not np.isfinite(v):
            raise ValidationError("cannot serialize non-finite number")
        return f"{v:.17g}"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        items = value.tolist() if isinstance(value, np.ndarray) else value
        return "[" + ",".join(_encode(v) for v in items) + "]"
    if isinstance(value, dict):
        parts = (f"{json.dumps(str(k))}:{_encode(v)}" for k, v in value.items())
        return "{" + ",".join(parts) + "}"
    raise ValidationError(f"cannot serialize {type(value).__name__}")


def dumps_json(obj) -> str:
    """JSON text with floats at 17 significant digits."""
    return _encode(obj)


def _model_dict(model):
    if isinstance(model, LinearModel):
        d, q = model.weights.shape
        return {
            "format_version": FORMAT_VERSION,
            "kind": "linear",
            "kernel": None,
            "d": d,
            "q": q,
            "n": None,
            "norm": {
                "center": model.norm_stats.center,
                "scale": model.norm_stats.scale,
            },
            "bias": model.bias,
            "weights": model.weights,
        }
    if isinstance(model, KernelModel):
        n, q = model.coefficients.shape
        kernel = {"kind": model.spec.kind}
        if model.spec.kind == "gaussian":
            kernel["sigma"] = model.spec.sigma
        return {
            "format_version": FORMAT_VERSION,
            "kind": "kernel",
            "kernel": kernel,
            "d": model.train_features.shape[1],
            "q": q,
            "n": n,
            "norm": {
                "center": model.norm_stats.center,
                "scale": model.norm_stats.scale,
            },
            "bias": model.bias,
            "coefficients": model.coefficients,
            "train_features": model.train_features,
        }
    raise ValidationError(f"unknown model type {type(model).__name__}")


def save_model(model, path):
    Path(path).write_text(dumps_json(_model_dict(model)) + "\n", encoding="utf-8")


def load_model(path):
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path) from None
    if not isinstance(doc, dict):
        raise ParseError("model file must hold a JSON object", path)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(
            f"unsupported format_version {doc.get('format_version')!r}", path
        )
    try:
        norm = NormStats(
            np.asarray(doc["norm"]["center"], dtype=np.float64),
            np.asarray(doc["norm"]["scale"], dtype=np.float64),
        )
        bias = np.asarray(doc["bias"], dtype=np.float64)
        if doc["kind"] == "linear":
            weights = np.asarray(doc["weights"], dtype=np.float64)
            if weights.shape != (doc["d"], doc["q"]):
                raise ValidationError("weights shape disagrees with d, q")
            return LinearModel(weights, bias, norm)
        if doc["kind"] == "kernel":
            kernel = doc["kernel"]
            spec = KernelSpec(kernel["kind"], kernel.get("sigma"))
            coef = np.asarray(doc["coefficients"], dtype=np.float64)
            train = np.asarray(doc["train_features"], dtype=np.float64)
            if coef.shape != (doc["n"], doc["q"]) or train.shape != (
                doc["n"],
                doc["d"],
            ):
                raise ValidationError("array shapes disagree with n, d, q")
            return KernelModel(coef, bias, spec, train, norm)
        raise ParseError(f"unknown model kind {doc['kind']!r}", path)
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}", path) from None
