from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from geex.constants import Capability, OutputKind
from geex.errors import BadClass, NonFiniteValue, NotWhiteBox, ShapeMismatch
from geex.grid import Grid

# Batches are always cut into chunks of this many rows, whatever the worker count,
# so every row goes through the same arithmetic.
CHUNK_ROWS = 512


class QueryModel:
    """
    Opaque scalar-per-class function over Grids. Every model inherits from this class.
    Attributes:
        capability (str): Capability.black_box or Capability.white_box.
        input_shape (tuple[int, ...]): Shape of the Grids the model accepts.
        num_classes (int): Length of the class-score vector returned by `query`.
        input_range (tuple[float, float]): Declared range of valid feature values.
        output_kind (str): OutputKind of the class scores (probability, logit or score).

    Subclasses implement `_forward` (and `_gradient_batch` when white-box); the
    public methods validate inputs and fan batches out.
    """

    capability = Capability.black_box
    input_shape: tuple = (1,)
    num_classes = 1
    input_range = (-np.inf, np.inf)
    output_kind = OutputKind.score

    @property
    def is_white_box(self) -> bool:
        return self.capability == Capability.white_box

    def as_black_box(self) -> "QueryModel":
        """Same function with gradients withheld."""
        return BlackBox(self)

    def query(self, g: Grid) -> np.ndarray:
        """
        Class-score vector of a single input.
        Raises:
            ShapeMismatch: If g does not have `input_shape`.
        """
        self.check_shape(g.shape)
        return self._forward(g.array[np.newaxis])[0].copy()

    def query_batch(self, batch: np.ndarray, workers: int = 1) -> np.ndarray:
        """
        Class scores of a stack of inputs, shape (n, num_classes).
        Args:
            batch (np.ndarray): Inputs of shape (n, *input_shape).
            workers (int): Threads evaluating chunks; the result does not depend on it.
        Raises:
            ShapeMismatch: If the rows do not have `input_shape`.
            NonFiniteValue: If the batch holds NaN or Inf.
        """
        batch = np.asarray(batch, dtype=np.float64)
        self.check_shape(batch.shape[1:])
        if not np.all(np.isfinite(batch)):
            raise NonFiniteValue("query batch holds NaN or Inf")
        return _fan_out(self._forward, batch, workers)

    def class_score(self, g: Grid, class_idx: int) -> float:
        self.check_class(class_idx)
        return float(self.query(g)[class_idx])

    def gradient(self, g: Grid, class_idx: int) -> Grid:
        """
        Exact gradient of one class score at g.
        Raises:
            NotWhiteBox: If the model only answers queries.
            BadClass: If class_idx is not a valid class.
        """
        self.require_white_box()
        self.check_class(class_idx)
        self.check_shape(g.shape)
        return Grid(self._gradient_batch(g.array[np.newaxis], class_idx)[0])

    def gradient_batch(self, batch: np.ndarray, class_idx: int, workers: int = 1) -> np.ndarray:
        self.require_white_box()
        self.check_class(class_idx)
        batch = np.asarray(batch, dtype=np.float64)
        self.check_shape(batch.shape[1:])
        return _fan_out(lambda chunk: self._gradient_batch(chunk, class_idx), batch, workers)

    def _forward(self, batch: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gradient_batch(self, batch: np.ndarray, class_idx: int) -> np.ndarray:
        raise NotWhiteBox()

    def check_shape(self, shape) -> None:
        if tuple(shape) != tuple(self.input_shape):
            raise ShapeMismatch(
                f"model expects inputs of shape {tuple(self.input_shape)}, got {tuple(shape)}"
            )

    def check_class(self, class_idx) -> None:
        if int(class_idx) != class_idx or not 0 <= class_idx < self.num_classes:
            raise BadClass(f"class index {class_idx} outside [0, {self.num_classes})")

    def require_white_box(self) -> None:
        if not self.is_white_box:
            raise NotWhiteBox()


class BlackBox(QueryModel):
    """Wrapper exposing only the queries of another model."""

    def __init__(self, inner: QueryModel):
        self.inner = inner
        self.input_shape = inner.input_shape
        self.num_classes = inner.num_classes
        self.input_range = inner.input_range
        self.output_kind = inner.output_kind

    def _forward(self, batch):
        return self.inner._forward(batch)


def _fan_out(fn, batch: np.ndarray, workers: int) -> np.ndarray:
    chunks = [batch[i : i + CHUNK_ROWS] for i in range(0, batch.shape[0], CHUNK_ROWS)]
    if not chunks:
        return fn(batch)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, chunks))
    else:
        results = [fn(chunk) for chunk in chunks]
    return np.concatenate(results)


def finite_difference_gradient(model: QueryModel, g: Grid, class_idx: int, h: float = 1e-5) -> Grid:
    """Central-difference estimate of one class-score gradient, 2 * g.size queries."""
    model.check_class(class_idx)
    base = g.data
    shifted = np.repeat(base[np.newaxis], 2 * base.size, axis=0)
    steps = np.arange(base.size)
    shifted[2 * steps, steps] += h
    shifted[2 * steps + 1, steps] -= h
    scores = model.query_batch(shifted.reshape((-1,) + g.shape))[:, class_idx]
    return Grid((scores[0::2] - scores[1::2]) / (2.0 * h), g.shape)
