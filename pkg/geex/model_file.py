from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from geex.analytic_model import (
    ConstantModel,
    DummyFeatureModel,
    LinearModel,
    LogisticModel,
    WeightedSumModel,
)
from geex.constants import Capability
from geex.dense_net import DenseNet, Layer
from geex.errors import BadArch, GeexError, ParseError, VersionMismatch
from geex.grid import Grid
from geex.query_model import BlackBox, QueryModel

FORMAT_VERSION = 1


def save_model(m: QueryModel, path) -> None:
    """
    Writes a model as versioned JSON text with explicit shapes and row-major weights.
    Notes:
        Floats are written with their shortest round-tripping representation, so a
        loaded model answers every query bit-for-bit like the saved one.
    """
    capability = m.capability
    if isinstance(m, BlackBox):
        m = m.inner
    document = {
        "format_version": FORMAT_VERSION,
        "input_shape": list(m.input_shape),
        "num_classes": m.num_classes,
        "capability": capability,
        "input_range": [_bound(v) for v in m.input_range],
        "model": _encode(m),
    }
    Path(path).write_text(json.dumps(document, indent=1) + "\n")


def load_model(path) -> QueryModel:
    """
    Reads a model written by `save_model`.
    Raises:
        ParseError: If the file is missing, is not valid JSON or lacks a field; the
            message names the file and the line, column or field at fault.
        VersionMismatch: If the file declares another format version.
        BadArch: If layer dimensions do not chain; the message names the layer index.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as error:
        raise ParseError(f"{path}: cannot read model file ({error.strerror})") from error
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise ParseError(f"{path}:{error.lineno}:{error.colno}: {error.msg}") from error
    if not isinstance(document, dict):
        raise ParseError(f"{path}: a model file holds a JSON object")

    version = _field(document, "format_version", path)
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: format_version {version} is not supported (expected {FORMAT_VERSION})"
        )
    input_shape = tuple(_field(document, "input_shape", path))
    num_classes = _field(document, "num_classes", path)
    capability = document.get("capability", Capability.white_box)
    input_range = _input_range(document.get("input_range", [None, None]), path)

    try:
        model = _decode(_field(document, "model", path), input_shape, input_range)
    except (KeyError, TypeError, ValueError) as error:
        if isinstance(error, GeexError):
            raise
        raise ParseError(f"{path}: malformed model record ({error!r})") from error

    if tuple(model.input_shape) != input_shape:
        raise ParseError(
            f"{path}: field 'input_shape' says {input_shape} but the model reads {tuple(model.input_shape)}"
        )
    if model.num_classes != num_classes:
        raise ParseError(
            f"{path}: field 'num_classes' says {num_classes} but the model has {model.num_classes}"
        )
    model.input_range = input_range
    if capability == Capability.black_box:
        return model.as_black_box()
    if capability != Capability.white_box:
        raise ParseError(f"{path}: field 'capability' has unknown value {capability!r}")
    return model


def _bound(value: float):
    return None if math.isinf(value) else value


def _input_range(bounds, path) -> tuple:
    """(low, high) from a two-entry list; null stands for an unbounded side."""
    if not isinstance(bounds, list) or len(bounds) != 2:
        raise ParseError(f"{path}: field 'input_range' must hold exactly two bounds, got {bounds!r}")
    try:
        low, high = (float(v) if v is not None else None for v in bounds)
    except (TypeError, ValueError):
        raise ParseError(f"{path}: field 'input_range' holds a non-numeric bound {bounds!r}") from None
    low = -math.inf if low is None else low
    high = math.inf if high is None else high
    if not low < high:
        raise ParseError(f"{path}: field 'input_range' must satisfy low < high, got {bounds!r}")
    return low, high


def _field(record: dict, name: str, path):
    if name not in record:
        raise ParseError(f"{path}: missing field {name!r}")
    return record[name]


def _encode(m: QueryModel) -> dict:
    if isinstance(m, DenseNet):
        return {
            "kind": "dense",
            "layers": [
                {
                    "rows": layer.rows,
                    "cols": layer.cols,
                    "activation": layer.activation,
                    "weights": layer.weights.data.tolist(),
                    "bias": layer.bias.data.tolist(),
                }
                for layer in m.layers
            ],
        }
    if isinstance(m, (LinearModel, LogisticModel)):
        return {"kind": m.kind, "shape": list(m.w.shape), "weights": m.w.data.tolist(), "bias": m.b}
    if isinstance(m, ConstantModel):
        return {"kind": m.kind, "value": m.c}
    if isinstance(m, DummyFeatureModel):
        return {"kind": m.kind, "index": m.k, "inner": _encode(m.inner)}
    if isinstance(m, WeightedSumModel):
        return {
            "kind": m.kind,
            "coefficients": m.coefficients,
            "models": [_encode(inner) for inner in m.models],
        }
    raise TypeError(f"cannot serialize model of type {type(m).__name__}")


def _decode(record: dict, input_shape: tuple, input_range: tuple) -> QueryModel:
    kind = record["kind"]
    if kind == "dense":
        layers = []
        for i, spec in enumerate(record["layers"]):
            rows, cols = int(spec["rows"]), int(spec["cols"])
            weights, bias = spec["weights"], spec["bias"]
            if len(weights) != rows * cols or len(bias) != rows:
                raise BadArch(
                    f"layer {i}: declares {rows}x{cols} but holds {len(weights)} weights "
                    f"and {len(bias)} biases"
                )
            layers.append(Layer(Grid(weights, (rows, cols)), Grid(bias), spec["activation"]))
        return DenseNet(layers, input_shape, input_range=input_range)
    if kind == LinearModel.kind:
        return LinearModel(Grid(record["weights"], record["shape"]), record["bias"])
    if kind == LogisticModel.kind:
        return LogisticModel(Grid(record["weights"], record["shape"]), record["bias"])
    if kind == ConstantModel.kind:
        return ConstantModel(record["value"], input_shape)
    if kind == DummyFeatureModel.kind:
        inner_shape = (int(np.prod(input_shape)) - 1,)
        return DummyFeatureModel(record["index"], _decode(record["inner"], inner_shape, input_range))
    if kind == WeightedSumModel.kind:
        models = [_decode(inner, input_shape, input_range) for inner in record["models"]]
        return WeightedSumModel(models, record["coefficients"])
    raise ValueError(f"unknown model kind {kind!r}")
