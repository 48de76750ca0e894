from __future__ import annotations

import numpy as np
from scipy.special import expit

from geex.constants import Capability, OutputKind
from geex.errors import BadArch, ShapeMismatch
from geex.grid import Grid
from geex.query_model import QueryModel


class AnalyticModel(QueryModel):
    """
    Closed-form single-output function with a closed-form gradient.
    Attributes:
        kind (str): Name of the function family, used by the model file format.
    """

    kind = "analytic"
    capability = Capability.white_box
    num_classes = 1

    @classmethod
    def sigmoid1d(cls) -> "LogisticModel":
        return LogisticModel(Grid([1.0]), 0.0)

    @classmethod
    def sigmoid_of_x_only_2d(cls) -> "LogisticModel":
        """sigmoid(x) of a point (x, y); y never influences the value."""
        return LogisticModel(Grid([1.0, 0.0]), 0.0)

    @classmethod
    def linear(cls, w: Grid, b: float = 0.0) -> "LinearModel":
        return LinearModel(w, b)

    @classmethod
    def constant(cls, c: float, input_shape=(1,)) -> "ConstantModel":
        return ConstantModel(c, input_shape)

    @classmethod
    def dummy_feature(cls, k: int, inner: "AnalyticModel") -> "DummyFeatureModel":
        return DummyFeatureModel(k, inner)


def _flat(batch: np.ndarray) -> np.ndarray:
    return batch.reshape(batch.shape[0], -1)


class LinearModel(AnalyticModel):
    """f(x) = sum(w * x) + b."""

    kind = "linear"

    def __init__(self, w: Grid, b: float = 0.0):
        self.w = w
        self.b = float(b)
        self.input_shape = w.shape

    def _forward(self, batch):
        return (_flat(batch) @ self.w.data + self.b)[:, np.newaxis]

    def _gradient_batch(self, batch, class_idx):
        return np.broadcast_to(self.w.array, batch.shape).copy()


class LogisticModel(AnalyticModel):
    """f(x) = sigmoid(sum(w * x) + b); probabilities in (0, 1)."""

    kind = "logistic"
    output_kind = OutputKind.probability

    def __init__(self, w: Grid, b: float = 0.0):
        self.w = w
        self.b = float(b)
        self.input_shape = w.shape

    def _forward(self, batch):
        return expit(_flat(batch) @ self.w.data + self.b)[:, np.newaxis]

    def _gradient_batch(self, batch, class_idx):
        s = expit(_flat(batch) @ self.w.data + self.b)
        slope = s * (1.0 - s)
        return (slope[:, np.newaxis] * self.w.data).reshape(batch.shape)


class ConstantModel(AnalyticModel):
    kind = "constant"

    def __init__(self, c: float, input_shape=(1,)):
        self.c = float(c)
        self.input_shape = tuple(input_shape)

    def _forward(self, batch):
        return np.full((batch.shape[0], 1), self.c)

    def _gradient_batch(self, batch, class_idx):
        return np.zeros(batch.shape)


class DummyFeatureModel(AnalyticModel):
    """
    Wraps a vector model and adds an input coordinate the function never reads.
    Attributes:
        k (int): Index of the ignored coordinate in the wrapper's input.
        inner (AnalyticModel): Model fed with the input minus coordinate k.
    """

    kind = "dummy_feature"

    def __init__(self, k: int, inner: AnalyticModel):
        if len(inner.input_shape) != 1:
            raise ShapeMismatch(
                f"dummy-feature wrapper needs a vector model, got input shape {inner.input_shape}"
            )
        width = inner.input_shape[0] + 1
        if not 0 <= k < width:
            raise ValueError(f"dummy coordinate {k} outside [0, {width})")
        self.k = int(k)
        self.inner = inner
        self.input_shape = (width,)
        self.output_kind = inner.output_kind

    def _forward(self, batch):
        return self.inner._forward(np.delete(batch, self.k, axis=1))

    def _gradient_batch(self, batch, class_idx):
        inner = self.inner._gradient_batch(np.delete(batch, self.k, axis=1), class_idx)
        return np.insert(inner, self.k, 0.0, axis=1)


class WeightedSumModel(AnalyticModel):
    """f = sum_i coefficients[i] * models[i]; all models share one input shape."""

    kind = "weighted_sum"

    def __init__(self, models: list[AnalyticModel], coefficients: list[float]):
        if not models or len(models) != len(coefficients):
            raise BadArch(
                f"weighted sum needs one coefficient per model, got {len(models)} models "
                f"and {len(coefficients)} coefficients"
            )
        shapes = {tuple(m.input_shape) for m in models}
        if len(shapes) != 1:
            raise ShapeMismatch(f"weighted sum over models of different shapes {sorted(shapes)}")
        self.models = list(models)
        self.coefficients = [float(c) for c in coefficients]
        self.input_shape = tuple(models[0].input_shape)

    def _forward(self, batch):
        total = np.zeros((batch.shape[0], 1))
        for coefficient, model in zip(self.coefficients, self.models):
            total = total + coefficient * model._forward(batch)
        return total

    def _gradient_batch(self, batch, class_idx):
        total = np.zeros(batch.shape)
        for coefficient, model in zip(self.coefficients, self.models):
            total = total + coefficient * model._gradient_batch(batch, class_idx)
        return total
