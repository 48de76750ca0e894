from __future__ import annotations

from typing import Union

import numpy as np

from geex.constants import GridOp
from geex.errors import AlphaOutOfRange, NonFiniteValue, ShapeMismatch


class Grid:
    """
    Shaped, contiguous array of 64-bit reals; the carrier for explicands, baselines,
    masks, queries and attributions.
    Attributes:
        shape (tuple[int, ...]): Extent of each axis, e.g. (8, 8) for an image or (p,) for a vector.
        data (np.ndarray): Flat row-major view of the values, length product(shape).
        array (np.ndarray): Read-only view of the values carrying `shape`.

    A Grid is immutable: the constructor copies its input, the stored array is
    flagged read-only and every operation returns a fresh Grid.
    """

    def __init__(self, values, shape: tuple = None):
        array = np.array(values, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1)
        if shape is not None:
            shape = tuple(int(s) for s in shape)
            if int(np.prod(shape)) != array.size:
                raise ShapeMismatch(
                    f"cannot lay {array.size} values out as shape {shape}"
                )
            array = array.reshape(shape)
        if any(s <= 0 for s in array.shape):
            raise ShapeMismatch(f"shape must hold positive extents, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise NonFiniteValue(f"grid of shape {array.shape} holds NaN or Inf")
        array = np.ascontiguousarray(array)
        array.setflags(write=False)
        self._array = array

    @classmethod
    def zeros(cls, shape) -> "Grid":
        return cls(np.zeros(tuple(shape)))

    @classmethod
    def full(cls, shape, value: float) -> "Grid":
        return cls(np.full(tuple(shape), float(value)))

    @property
    def shape(self) -> tuple:
        return self._array.shape

    @property
    def size(self) -> int:
        return self._array.size

    @property
    def ndim(self) -> int:
        return self._array.ndim

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def data(self) -> np.ndarray:
        return self._array.reshape(-1)

    def __getitem__(self, index):
        return self._array[index]

    def __eq__(self, value) -> bool:
        if not isinstance(value, Grid):
            return NotImplemented
        return self.shape == value.shape and bool(np.array_equal(self._array, value._array))

    def __hash__(self):
        return hash((self.shape, self._array.tobytes()))

    def __str__(self) -> str:
        return str(self.shape) + str(self._array.tolist())

    def __repr__(self) -> str:
        return f"Grid(shape={self.shape})"

    def add(self, other: Union["Grid", float]) -> "Grid":
        return elementwise(GridOp.add, self, other)

    def sub(self, other: Union["Grid", float]) -> "Grid":
        return elementwise(GridOp.sub, self, other)

    def mul(self, other: Union["Grid", float]) -> "Grid":
        return elementwise(GridOp.mul, self, other)

    def scale(self, factor: float) -> "Grid":
        return elementwise(GridOp.scale, self, factor)

    __add__ = add
    __sub__ = sub
    __mul__ = mul

    def __neg__(self) -> "Grid":
        return Grid(-self._array)


_UFUNCS = {
    GridOp.add: np.add,
    GridOp.sub: np.subtract,
    GridOp.mul: np.multiply,
    GridOp.scale: np.multiply,
}


def check_same_shape(a: Grid, b: Grid, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what} differ in shape: {a.shape} vs {b.shape}")


def elementwise(op: str, a: Grid, b: Union[Grid, float]) -> Grid:
    """
    Applies an element-by-element operation and returns a fresh Grid.
    Args:
        op (str): One of GridOp.add, GridOp.sub, GridOp.mul, GridOp.scale.
        a (Grid): Left operand.
        b (Grid | float): Right operand; a Grid of the same shape or a scalar. `scale` requires a scalar.
    Returns:
        Grid: The result; neither input is modified.
    Raises:
        ShapeMismatch: If both operands are Grids of different shapes.
        ValueError: If `op` is unknown, or `scale` receives a Grid.
    """
    if op not in _UFUNCS:
        raise ValueError(f"unknown grid operation {op!r}, expected one of {GridOp.all()}")
    if isinstance(b, Grid):
        if op == GridOp.scale:
            raise ValueError("scale takes a scalar factor, got a Grid")
        check_same_shape(a, b)
        other = b.array
    else:
        other = float(b)
    return Grid(_UFUNCS[op](a.array, other))


def interpolate(baseline: Grid, explicand: Grid, alpha: float) -> Grid:
    """
    Point at fraction `alpha` of the straight path from the baseline to the explicand,
    baseline + alpha * (explicand - baseline).
    Raises:
        ShapeMismatch: If baseline and explicand differ in shape.
        AlphaOutOfRange: If alpha lies outside [0, 1].
    Notes:
        alpha == 0 and alpha == 1 return the endpoints bit-for-bit.
    """
    check_same_shape(baseline, explicand, "baseline and explicand")
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return Grid(baseline.array)
    if alpha == 1.0:
        return Grid(explicand.array)
    return Grid(baseline.array + alpha * (explicand.array - baseline.array))


def path_points(baseline: np.ndarray, explicand: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Stack of path points baseline + alpha * (explicand - baseline), one per alpha."""
    alphas = np.asarray(alphas, dtype=np.float64).reshape((-1,) + (1,) * baseline.ndim)
    return baseline + alphas * (explicand - baseline)


def frobenius_norm(g: Grid) -> float:
    return float(np.sqrt(np.sum(np.square(g.array))))
