import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geex.constants import GridOp
from geex.errors import AlphaOutOfRange, NonFiniteValue, ShapeMismatch
from geex.grid import Grid, elementwise, frobenius_norm, interpolate, path_points

values = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
shapes = st.sampled_from([(1,), (3,), (2, 2), (4, 3)])


def grid_pairs():
    return shapes.flatmap(lambda shape: st.tuples(arrays(np.float64, shape, elements=values),
                                                  arrays(np.float64, shape, elements=values)))


def test_grid_init_copies_and_freezes():
    source = np.array([[1.0, 2.0], [3.0, 4.0]])
    g = Grid(source)
    source[0, 0] = 99.0

    assert g.shape == (2, 2), "Grid should keep the shape of its input"
    assert g[0, 0] == 1.0, "Grid should copy its input"
    assert g.data.tolist() == [1.0, 2.0, 3.0, 4.0], "data should be the row-major values"
    with pytest.raises(ValueError):
        g.array[0, 0] = 5.0


def test_grid_init_with_shape():
    g = Grid([1, 2, 3, 4, 5, 6], (2, 3))

    assert g.shape == (2, 3)
    assert g.size == 6
    assert g[1, 0] == 4.0


def test_grid_init_invalid():
    with pytest.raises(ShapeMismatch, match="cannot lay 5 values out as shape"):
        Grid([1, 2, 3, 4, 5], (2, 3))
    with pytest.raises(NonFiniteValue):
        Grid([1.0, np.nan])
    with pytest.raises(NonFiniteValue):
        Grid([np.inf])


@pytest.mark.parametrize(
    "op, a, b, expected",
    [
        (GridOp.mul, [1, 2, 3], [4, 5, 6], [4, 10, 18]),
        (GridOp.add, [1, 2], [3, 4], [4, 6]),
        (GridOp.sub, [5, 5], [2, 7], [3, -2]),
        (GridOp.scale, [1, 2], 0.0, [0, 0]),
        (GridOp.scale, [1, -2], 3.0, [3, -6]),
    ],
)
def test_elementwise(op, a, b, expected):
    right = Grid(b) if isinstance(b, list) else b
    left = Grid(a)
    result = elementwise(op, left, right)

    assert result.data.tolist() == expected, f"{op} of {a} and {b} should be {expected}"
    assert left.data.tolist() == a, "inputs should be left unmodified"


def test_elementwise_sub_self_is_zero():
    x = Grid([[0.5, -1.25], [3.0, 7.0]])
    assert x - x == Grid.zeros((2, 2))


def test_elementwise_errors():
    with pytest.raises(ShapeMismatch, match="differ in shape"):
        elementwise(GridOp.add, Grid([1, 2]), Grid([1, 2, 3]))
    with pytest.raises(ValueError, match="scale takes a scalar"):
        elementwise(GridOp.scale, Grid([1, 2]), Grid([1, 2]))
    with pytest.raises(ValueError, match="unknown grid operation"):
        elementwise("div", Grid([1, 2]), Grid([1, 2]))


def test_interpolate_endpoints_and_midpoint():
    baseline = Grid([0.1, -0.3, 0.7])
    x = Grid([1.0 / 3.0, 2.0, -5.5])

    assert interpolate(baseline, x, 1.0) == x, "alpha 1 should give the explicand exactly"
    assert interpolate(baseline, x, 0.0) == baseline, "alpha 0 should give the baseline exactly"
    assert interpolate(Grid([0, 0]), Grid([2, 4]), 0.5) == Grid([1, 2])
    assert interpolate(Grid.zeros((3,)), x, 1.0) == x


def test_interpolate_errors():
    with pytest.raises(AlphaOutOfRange, match="alpha must lie in"):
        interpolate(Grid([0.0]), Grid([1.0]), 1.5)
    with pytest.raises(AlphaOutOfRange):
        interpolate(Grid([0.0]), Grid([1.0]), -0.01)
    with pytest.raises(ShapeMismatch):
        interpolate(Grid([0.0]), Grid([1.0, 2.0]), 0.5)


def test_path_points_match_interpolate():
    baseline = Grid([[0.0, 1.0], [2.0, -1.0]])
    x = Grid([[1.0, 1.0], [0.0, 3.0]])
    alphas = np.array([0.2, 0.5, 0.9])
    points = path_points(baseline.array, x.array, alphas)

    assert points.shape == (3, 2, 2)
    for alpha, point in zip(alphas, points):
        np.testing.assert_allclose(point, interpolate(baseline, x, alpha).array, atol=1e-15)


def test_frobenius_norm():
    assert frobenius_norm(Grid([3, 4])) == 5.0
    assert frobenius_norm(Grid.zeros((4, 4))) == 0.0


@given(grid_pairs())
def test_add_then_sub_restores(pair):
    a, b = Grid(pair[0]), Grid(pair[1])
    np.testing.assert_allclose((a + b - b).array, a.array, rtol=0, atol=1e-12)


@given(grid_pairs(), st.floats(min_value=0.0, max_value=1.0))
def test_interpolate_is_affine(pair, alpha):
    baseline, x = Grid(pair[0]), Grid(pair[1])
    expected = baseline.scale(1.0 - alpha) + x.scale(alpha)
    np.testing.assert_allclose(interpolate(baseline, x, alpha).array, expected.array, rtol=0, atol=1e-12)


@given(grid_pairs())
def test_frobenius_norm_is_non_negative(pair):
    assert frobenius_norm(Grid(pair[0])) >= 0.0
