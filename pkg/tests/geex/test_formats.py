import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geex.attribution import Attribution
from geex.constants import AlphaMode
from geex.errors import ParseError, ShapeMismatch
from geex.formats import (
    heatmap_levels,
    parse_shape,
    read_attribution,
    read_dataset,
    read_grid,
    read_mask_bundle,
    write_attribution,
    write_dataset,
    write_heatmap,
    write_image,
    write_mask_bundle,
    write_patches,
    write_table,
)
from geex.grid import Grid
from geex.kernel import Kernel
from geex.mask_set import generate_mask_set
from geex.search_distribution import SearchDistribution


def attribution_of(values):
    values = Grid(values)
    return Attribution(values, Grid.zeros(values.shape), 0, 0, None, "fixed", 0)


def test_read_csv_vector_and_matrix(tmp_path):
    (tmp_path / "v.csv").write_text("0.5,-1,2e-3\n")
    (tmp_path / "m.csv").write_text("# two rows\n1,2\n3,4\n\n")

    assert read_grid(tmp_path / "v.csv") == Grid([0.5, -1.0, 0.002])
    assert read_grid(tmp_path / "m.csv") == Grid([[1.0, 2.0], [3.0, 4.0]])


@pytest.mark.parametrize(
    "text, message",
    [
        ("1,2\n3,x\n", r"bad\.csv:2: 'x' is not a number"),
        ("1,2\n3\n", "rows have different lengths"),
        ("1,nan\n", r"bad\.csv:1: non-finite value"),
        ("\n", "no values"),
    ],
)
def test_read_csv_errors(tmp_path, text, message):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ParseError, match=message):
        read_grid(path)


def test_read_missing_file(tmp_path):
    with pytest.raises(ParseError, match="cannot read file"):
        read_grid(tmp_path / "absent.csv")


def test_read_pgm(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_text("P2\n# a comment\n3 2\n4\n0 1 2\n3 4 0\n")
    g = read_grid(path)

    assert g.shape == (2, 3)
    np.testing.assert_array_equal(g.array, [[0.0, 0.25, 0.5], [0.75, 1.0, 0.0]])


@pytest.mark.parametrize(
    "text, message",
    [
        ("P5\n1 1\n255\n0\n", "expected a plain PGM"),
        ("P2\n2 1\n255\n0\n", "expected 2 pixels, found 1"),
        ("P2\n2 1\n255\n0 300\n", r"img\.pgm:4: pixel 300 outside \[0, 255\]"),
        ("P2\n2 x\n255\n0 0\n", "must be integers"),
    ],
)
def test_read_pgm_errors(tmp_path, text, message):
    path = tmp_path / "img.pgm"
    path.write_text(text)
    with pytest.raises(ParseError, match=message):
        read_grid(path)


def test_write_image_round_trip(tmp_path):
    path = tmp_path / "img.pgm"
    image = Grid([[0.0, 1.0], [2.0, -1.0]])
    write_image(path, image)

    assert path.read_text() == "P2\n2 2\n255\n0 255\n255 0\n"
    assert read_grid(path) == Grid([[0.0, 1.0], [1.0, 0.0]])


def test_heatmap_levels():
    np.testing.assert_array_equal(heatmap_levels(Grid([-2.0, 0.0, 1.0, 2.0])), [1, 128, 192, 255])
    assert np.all(heatmap_levels(Grid.zeros((3, 3))) == 128), "an all-zero map should be uniform grey"


@given(arrays(np.float64, 16, elements=st.floats(-1e6, 1e6)))
def test_heatmap_preserves_ranking(values):
    levels = heatmap_levels(Grid(values))
    order = np.argsort(values, kind="stable")

    assert np.all(np.diff(levels[order]) >= 0), "a larger attribution never gets a darker level"
    assert levels.min() >= 1 and levels.max() <= 255


def test_write_heatmap(tmp_path):
    path = tmp_path / "heat.pgm"
    write_heatmap(path, Grid([[0.0, 0.5]]))
    assert path.read_text() == "P2\n2 1\n255\n128 255\n"


def test_attribution_csv(tmp_path):
    path = tmp_path / "attribution.csv"
    values = np.array([[0.1, -1.0 / 3.0], [2.5e-17, 0.0]])
    write_attribution(path, attribution_of(values))

    lines = path.read_text().splitlines()
    assert lines[0] == "index,value"
    assert lines[2] == f"1,{-1.0 / 3.0!r}"
    np.testing.assert_array_equal(read_attribution(path, (2, 2)).array, values)


def test_read_attribution_errors(tmp_path):
    path = tmp_path / "attribution.csv"
    path.write_text("index,value\n0,1.0\n0,2.0\n")
    with pytest.raises(ParseError, match="index 0 appears twice"):
        read_attribution(path, (2,))

    path.write_text("index,value\n0,1.0\n1,2.0\n")
    with pytest.raises(ShapeMismatch, match=r"shape \(3,\) needs 3"):
        read_attribution(path, (3,))

    path.write_text("i,v\n")
    with pytest.raises(ParseError, match="expected the header"):
        read_attribution(path, (1,))


def test_write_table(tmp_path):
    path = tmp_path / "table.csv"
    write_table(path, ["method", "mean", "std"], [("geex", 0.5, None), ("random", 1.0 / 3.0, 0.0)])
    assert path.read_text() == f"method,mean,std\ngeex,0.5,\nrandom,{1.0 / 3.0!r},0.0\n"


@pytest.mark.parametrize("smoothing", [None, Kernel(3, 1.0)])
def test_mask_bundle_round_trip(tmp_path, smoothing):
    path = tmp_path / "masks.csv"
    ms = generate_mask_set(SearchDistribution(0.5, (4, 4)), 6, seed=9, smoothing=smoothing, alpha_mode=AlphaMode.iid_uniform)
    write_mask_bundle(path, ms)
    back = read_mask_bundle(path)

    np.testing.assert_array_equal(back.masks, ms.masks)
    np.testing.assert_array_equal(back.alphas, ms.alphas)
    np.testing.assert_allclose(back.scores, ms.scores, rtol=1e-12)
    assert (back.seed, back.mirrored, back.alpha_mode, back.sigma) == (9, True, AlphaMode.iid_uniform, 0.5)
    assert str(back.smoothing) == str(smoothing)


def test_mask_bundle_errors(tmp_path):
    path = tmp_path / "masks.csv"
    path.write_text("# geex-masks n_star=2 sigma=1.0 shape=2 seed=0 mirrored=1 smoothing=none alpha_mode=stratified\n0.5,1,2\n")
    with pytest.raises(ParseError, match="header declares 2 masks, found 1"):
        read_mask_bundle(path)

    path.write_text("# geex-masks n_star=1 sigma=1.0 shape=2 seed=0 mirrored=0 smoothing=none alpha_mode=stratified\n0.5,1\n")
    with pytest.raises(ParseError, match=r"masks\.csv:2: expected 3 values, found 2"):
        read_mask_bundle(path)

    path.write_text("# geex-masks n_star=1 sigma=1.0 seed=0\n")
    with pytest.raises(ParseError, match="missing header field 'shape'"):
        read_mask_bundle(path)

    path.write_text("# something-else\n")
    with pytest.raises(ParseError, match="expected a '# geex-masks' header"):
        read_mask_bundle(path)


BUNDLE_HEADER = "# geex-masks n_star={n} sigma={sigma} shape=2 seed=0 mirrored={mirrored} smoothing=none alpha_mode=stratified\n"


@pytest.mark.parametrize(
    "n, sigma, mirrored, rows, message",
    [
        (2, -1.0, 1, "0.5,1,2\n0.5,-1,-2\n", r"masks\.csv:1: sigma must be positive"),
        (2, 0.0, 0, "0.5,1,2\n0.5,-1,-2\n", r"masks\.csv:1: sigma must be positive"),
        (0, 1.0, 0, "", r"masks\.csv:1: n_star must be positive, got 0"),
        (3, 1.0, 1, "0.5,1,2\n0.5,-1,-2\n0.7,1,1\n", r"masks\.csv:1: mirrored bundle declares an odd n_star=3"),
        (2, 1.0, 1, "0.5,1,2\n0.5,-1,2\n", r"masks\.csv:3: mask is not the negation of line 2"),
        (2, 1.0, 1, "0.5,1,2\n0.25,-1,-2\n", r"masks\.csv:3: mirror row alpha 0\.25 differs from 0\.5"),
        (2, 1.0, 0, "0.5,1,2\n1.5,3,4\n", r"masks\.csv:3: alpha 1\.5 outside \[0, 1\]"),
        (2, 1.0, 1, "-0.1,1,2\n-0.1,-1,-2\n", r"masks\.csv:2: alpha -0\.1 outside \[0, 1\]"),
    ],
)
def test_mask_bundle_invariants(tmp_path, n, sigma, mirrored, rows, message):
    path = tmp_path / "masks.csv"
    path.write_text(BUNDLE_HEADER.format(n=n, sigma=sigma, mirrored=mirrored) + rows)

    with pytest.raises(ParseError, match=message):
        read_mask_bundle(path)


def test_mask_bundle_unpaired_rows_are_fine_when_not_mirrored(tmp_path):
    path = tmp_path / "masks.csv"
    path.write_text(BUNDLE_HEADER.format(n=3, sigma=1.0, mirrored=0) + "0.0,1,2\n1.0,3,4\n0.5,-1,0\n")
    back = read_mask_bundle(path)

    assert len(back) == 3
    assert back.alphas.tolist() == [0.0, 1.0, 0.5]


def test_dataset_round_trip(tmp_path, dataset):
    path = tmp_path / "dataset.csv"
    write_dataset(path, dataset)
    back = read_dataset(path)

    assert path.read_text().startswith("# geex-dataset shape=8x8 classes=2\n")
    np.testing.assert_array_equal(back.samples, dataset.samples)
    np.testing.assert_array_equal(back.labels, dataset.labels)


def test_dataset_bad_label(tmp_path):
    path = tmp_path / "dataset.csv"
    path.write_text("# geex-dataset shape=2 classes=2\n0,0.1,0.2\n2,0.3,0.4\n")
    with pytest.raises(ParseError, match=r"dataset\.csv:3: label '2' outside \[0, 2\)"):
        read_dataset(path)


def test_write_patches(tmp_path):
    path = tmp_path / "patches.csv"
    write_patches(path, {1: [(5, 5)], 0: [(1, 1), (1, 2)]})
    assert path.read_text() == "class,row,col\n0,1,1\n0,1,2\n1,5,5\n"


def test_parse_shape():
    assert parse_shape("8x8") == (8, 8)
    assert parse_shape("3") == (3,)
    with pytest.raises(ValueError, match="positive extents"):
        parse_shape("0x4")
