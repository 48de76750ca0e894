"""
Plain-text file formats: PGM (P2) images and heatmaps, attribution and table CSVs,
labeled dataset CSVs and mask-set bundles.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from geex.attribution import Attribution
from geex.constants import AlphaMode
from geex.errors import ParseError, ShapeMismatch
from geex.grid import Grid
from geex.kernel import Kernel
from geex.mask_set import MaskSet, read_only
from geex.search_distribution import SearchDistribution
from geex.training import LabeledDataset

HEATMAP_ZERO = 128
HEATMAP_SPAN = 127
MASK_BUNDLE_MAGIC = "geex-masks"
DATASET_MAGIC = "geex-dataset"


def _lines(path) -> list[str]:
    try:
        return Path(path).read_text().splitlines()
    except OSError as error:
        raise ParseError(f"{path}: cannot read file ({error.strerror})") from error


def _number(token: str, path, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{path}:{line_no}: {token.strip()!r} is not a number") from None
    if not np.isfinite(value):
        raise ParseError(f"{path}:{line_no}: non-finite value {token.strip()!r}")
    return value


def format_shape(shape) -> str:
    return "x".join(str(s) for s in shape)


def parse_shape(text: str) -> tuple:
    """Shape written as "8x8" or "2"."""
    try:
        shape = tuple(int(s) for s in text.lower().split("x"))
    except ValueError:
        raise ValueError(f"shape must be written like 8x8, got {text!r}") from None
    if not shape or any(s <= 0 for s in shape):
        raise ValueError(f"shape must hold positive extents, got {text!r}")
    return shape


def read_grid(path, fmt: str = None) -> Grid:
    """
    Reads an explicand or baseline.
    Args:
        path: A PGM (P2) image, scaled to [0, 1] by its maxval, or a CSV of numbers;
            one CSV row gives a vector, several rows a 2-D grid.
        fmt (str, optional): "pgm" or "csv"; guessed from the suffix when omitted.
    Raises:
        ParseError: With the file and line of the first malformed entry.
    """
    fmt = fmt or ("pgm" if Path(path).suffix.lower() == ".pgm" else "csv")
    if fmt == "pgm":
        return read_pgm(path)
    if fmt != "csv":
        raise ValueError(f"unknown grid format {fmt!r}, expected 'csv' or 'pgm'")

    rows = []
    for line_no, line in enumerate(_lines(path), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        rows.append([_number(token, path, line_no) for token in line.split(",")])
    if not rows:
        raise ParseError(f"{path}: no values")
    if len({len(row) for row in rows}) != 1:
        raise ParseError(f"{path}: rows have different lengths {sorted({len(row) for row in rows})}")
    return Grid(rows[0] if len(rows) == 1 else rows)


def read_pgm(path) -> Grid:
    tokens = []
    for line_no, line in enumerate(_lines(path), start=1):
        for token in line.split("#", 1)[0].split():
            tokens.append((token, line_no))
    if not tokens or tokens[0][0] != "P2":
        raise ParseError(f"{path}:1: expected a plain PGM starting with P2")
    if len(tokens) < 4:
        raise ParseError(f"{path}: PGM header is incomplete")
    try:
        width, height, maxval = (int(token) for token, _ in tokens[1:4])
    except ValueError:
        raise ParseError(f"{path}:{tokens[1][1]}: PGM width, height and maxval must be integers") from None
    if width <= 0 or height <= 0 or maxval <= 0:
        raise ParseError(f"{path}:{tokens[1][1]}: PGM header values must be positive")
    pixels = tokens[4:]
    if len(pixels) != width * height:
        raise ParseError(f"{path}: expected {width * height} pixels, found {len(pixels)}")
    values = []
    for token, line_no in pixels:
        value = _number(token, path, line_no)
        if not 0 <= value <= maxval:
            raise ParseError(f"{path}:{line_no}: pixel {token} outside [0, {maxval}]")
        values.append(value / maxval)
    return Grid(values, (height, width))


def _pgm_rows(levels: np.ndarray) -> np.ndarray:
    return levels.reshape(1, -1) if levels.ndim == 1 else levels.reshape(levels.shape[0], -1)


def write_pgm(path, levels: np.ndarray, maxval: int = 255) -> None:
    rows = _pgm_rows(np.asarray(levels, dtype=np.int64))
    lines = ["P2", f"{rows.shape[1]} {rows.shape[0]}", str(maxval)]
    lines.extend(" ".join(str(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def heatmap_levels(xi: Grid) -> np.ndarray:
    """8-bit levels 128 + round(127 * xi / max|xi|); an all-zero map is uniformly 128."""
    peak = float(np.max(np.abs(xi.array)))
    if peak == 0.0:
        return np.full(xi.shape, HEATMAP_ZERO, dtype=np.int64)
    return HEATMAP_ZERO + np.rint(HEATMAP_SPAN * xi.array / peak).astype(np.int64)


def write_heatmap(path, xi: Grid) -> None:
    write_pgm(path, heatmap_levels(xi))


def write_image(path, image: Grid) -> None:
    """Grayscale image of values in [0, 1]; values outside are clipped."""
    write_pgm(path, np.rint(np.clip(image.array, 0.0, 1.0) * 255).astype(np.int64))


def write_attribution(path, attribution: Attribution) -> None:
    lines = ["index,value"]
    lines.extend(f"{i},{float(v)!r}" for i, v in enumerate(attribution.xi.data))
    Path(path).write_text("\n".join(lines) + "\n")


def read_attribution(path, shape) -> Grid:
    """
    Reads an "index,value" attribution CSV back into a Grid of the given shape.
    Raises:
        ParseError: If the file is malformed or indices are missing or repeated.
        ShapeMismatch: If the file holds a different number of values.
    """
    lines = _lines(path)
    if not lines or lines[0].strip() != "index,value":
        raise ParseError(f"{path}:1: expected the header 'index,value'")
    values = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"{path}:{line_no}: expected 'index,value'")
        index = int(_number(parts[0], path, line_no))
        if index in values:
            raise ParseError(f"{path}:{line_no}: index {index} appears twice")
        values[index] = _number(parts[1], path, line_no)
    size = int(np.prod(shape))
    if len(values) != size:
        raise ShapeMismatch(f"{path}: holds {len(values)} values, shape {tuple(shape)} needs {size}")
    if sorted(values) != list(range(size)):
        raise ParseError(f"{path}: indices must cover 0..{size - 1}")
    return Grid([values[i] for i in range(size)], shape)


def write_table(path, header: list, rows: list) -> None:
    """CSV table; floats are written with repr so files are exact."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else repr(float(v)) if isinstance(v, float) else v for v in row])


def write_mask_bundle(path, ms: MaskSet) -> None:
    """
    Header line with the generation parameters, then one row per mask:
    its alpha followed by the row-major mask values.
    """
    smoothing = "none" if ms.smoothing is None else str(ms.smoothing)
    header = (
        f"# {MASK_BUNDLE_MAGIC} n_star={len(ms)} sigma={ms.sigma!r} shape={format_shape(ms.shape)} "
        f"seed={ms.seed} mirrored={int(ms.mirrored)} smoothing={smoothing} alpha_mode={ms.alpha_mode}"
    )
    lines = [header]
    for alpha, mask in zip(ms.alphas, ms.masks.reshape(len(ms), -1)):
        lines.append(",".join(repr(float(v)) for v in (alpha, *mask)))
    Path(path).write_text("\n".join(lines) + "\n")


def _header_fields(line: str, magic: str, path) -> dict:
    parts = line.split()
    if len(parts) < 2 or parts[0] != "#" or parts[1] != magic:
        raise ParseError(f"{path}:1: expected a '# {magic}' header line")
    fields = {}
    for part in parts[2:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise ParseError(f"{path}:1: header entry {part!r} is not key=value")
        fields[key] = value
    return fields


def _header_value(fields: dict, key: str, path, convert):
    if key not in fields:
        raise ParseError(f"{path}:1: missing header field {key!r}")
    try:
        return convert(fields[key])
    except ValueError as error:
        raise ParseError(f"{path}:1: header field {key!r}: {error}") from None


def read_mask_bundle(path) -> MaskSet:
    """
    Reads a bundle written by `write_mask_bundle`; scores are recomputed from the masks.
    Raises:
        ParseError: With the file and line of the first malformed entry.
    """
    lines = _lines(path)
    if not lines:
        raise ParseError(f"{path}: empty mask bundle")
    fields = _header_fields(lines[0], MASK_BUNDLE_MAGIC, path)
    n_star = _header_value(fields, "n_star", path, int)
    sigma = _header_value(fields, "sigma", path, float)
    shape = _header_value(fields, "shape", path, parse_shape)
    seed = _header_value(fields, "seed", path, int)
    mirrored = _header_value(fields, "mirrored", path, lambda v: bool(int(v)))
    smoothing_text = _header_value(fields, "smoothing", path, str)
    alpha_mode = _header_value(fields, "alpha_mode", path, str)
    if alpha_mode not in AlphaMode.all():
        raise ParseError(f"{path}:1: unknown alpha_mode {alpha_mode!r}")
    try:
        smoothing = None if smoothing_text == "none" else Kernel.parse(smoothing_text)
    except ValueError as error:
        raise ParseError(f"{path}:1: {error}") from None

    if n_star < 1:
        raise ParseError(f"{path}:1: n_star must be positive, got {n_star}")
    if mirrored and n_star % 2:
        raise ParseError(f"{path}:1: mirrored bundle declares an odd n_star={n_star}")
    try:
        dist = SearchDistribution(sigma, shape)
    except ValueError as error:
        raise ParseError(f"{path}:1: {error}") from None

    width = int(np.prod(shape)) + 1
    rows, line_nos = [], []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        row = [_number(token, path, line_no) for token in line.split(",")]
        if len(row) != width:
            raise ParseError(f"{path}:{line_no}: expected {width} values, found {len(row)}")
        rows.append(row)
        line_nos.append(line_no)
    if len(rows) != n_star:
        raise ParseError(f"{path}: header declares {n_star} masks, found {len(rows)}")

    table = np.array(rows, dtype=np.float64)
    _check_bundle_rows(table, line_nos, mirrored, path)
    masks = table[:, 1:].reshape((n_star,) + shape)
    return MaskSet(
        distribution=dist,
        masks=read_only(masks),
        scores=read_only(dist.scores(masks)),
        alphas=read_only(table[:, 0]),
        seed=seed,
        mirrored=mirrored,
        smoothing=smoothing,
        alpha_mode=alpha_mode,
    )


def _check_bundle_rows(table: np.ndarray, line_nos: list, mirrored: bool, path) -> None:
    """Path positions in [0, 1]; mirrored rows come in (eps, -eps) pairs sharing one alpha."""
    alphas, masks = table[:, 0], table[:, 1:]
    for i, alpha in enumerate(alphas):
        if not 0.0 <= alpha <= 1.0:
            raise ParseError(f"{path}:{line_nos[i]}: alpha {float(alpha)!r} outside [0, 1]")
    if not mirrored:
        return
    for k in range(0, len(table), 2):
        if alphas[k + 1] != alphas[k]:
            raise ParseError(
                f"{path}:{line_nos[k + 1]}: mirror row alpha {float(alphas[k + 1])!r} differs from {float(alphas[k])!r}"
            )
        if not np.array_equal(masks[k + 1], -masks[k]):
            raise ParseError(f"{path}:{line_nos[k + 1]}: mask is not the negation of line {line_nos[k]}")


def write_dataset(path, dataset: LabeledDataset) -> None:
    """Header line with the sample shape, then one row per sample: label, row-major pixels."""
    lines = [f"# {DATASET_MAGIC} shape={format_shape(dataset.shape)} classes={dataset.num_classes}"]
    for label, sample in zip(dataset.labels, dataset.samples.reshape(len(dataset), -1)):
        lines.append(",".join([str(int(label))] + [repr(float(v)) for v in sample]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path) -> LabeledDataset:
    lines = _lines(path)
    if not lines:
        raise ParseError(f"{path}: empty dataset file")
    fields = _header_fields(lines[0], DATASET_MAGIC, path)
    shape = _header_value(fields, "shape", path, parse_shape)
    num_classes = _header_value(fields, "classes", path, int)
    width = int(np.prod(shape)) + 1
    labels, samples = [], []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        row = line.split(",")
        if len(row) != width:
            raise ParseError(f"{path}:{line_no}: expected {width} values, found {len(row)}")
        label = _number(row[0], path, line_no)
        if label != int(label) or not 0 <= label < num_classes:
            raise ParseError(f"{path}:{line_no}: label {row[0]!r} outside [0, {num_classes})")
        labels.append(int(label))
        samples.append([_number(token, path, line_no) for token in row[1:]])
    return LabeledDataset(
        samples=np.array(samples, dtype=np.float64).reshape((len(samples),) + shape),
        labels=np.array(labels, dtype=np.int64),
        num_classes=num_classes,
    )


def write_patches(path, patches: dict) -> None:
    rows = [(label, row, col) for label, pixels in sorted(patches.items()) for row, col in pixels]
    write_table(path, ["class", "row", "col"], rows)
