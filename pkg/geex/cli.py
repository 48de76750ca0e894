"""
Command-line frontend: explain, evaluate, sweep, gen-model, gen-data and gen-masks.

Exit codes: 0 success, 2 usage or parse error, 3 shape mismatch, 4 missing
white-box capability, 5 numeric guard.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from geex.analytic_model import AnalyticModel
from geex.attribution import Attribution, ExplainConfig
from geex.constants import AlphaMode, BaselineKind, Method, Replacement
from geex.errors import GeexError, UsageError
from geex.evaluation import aopc_table, convergence_sweep, deletion_curve
from geex.explainers import explain, resolve_baseline, resolve_class
from geex.formats import (
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
from geex.grid import Grid, check_same_shape
from geex.kernel import Kernel
from geex.mask_set import generate_mask_set
from geex.model_file import load_model, save_model
from geex.search_distribution import SearchDistribution
from geex.training import TWO_BLOB_8X8, gen_synthetic_dataset, train_toy

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
ALPHA_FLAGS = {"iid": AlphaMode.iid_uniform, "stratified": AlphaMode.stratified}
MODEL_KINDS = ["sigmoid1d", "sigmoid2d", "linear", "constant", "dense"]
DEFAULT_ARCH = "16:relu,2:identity"


def _numbers(text: str, kind=float) -> list:
    try:
        return [kind(token) for token in text.split(",") if token.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _arch(text: str) -> list[dict]:
    layers = []
    for part in text.split(","):
        units, sep, activation = part.partition(":")
        if not sep or not units.strip().isdigit():
            raise UsageError(f"architecture layers are written UNITS:ACTIVATION, got {part!r}")
        layers.append({"units": int(units), "activation": activation.strip()})
    return layers


def _seeds(args) -> list[int]:
    if args.seeds < 1:
        raise UsageError(f"--seeds must be at least 1, got {args.seeds}")
    return [args.seed + i for i in range(args.seeds)]


def _add_explain_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("explainer")
    group.add_argument("--n-star", type=int, default=5000, help="query budget per explanation")
    group.add_argument("--sigma", type=float, default=1.0, help="spread of the search distribution")
    group.add_argument("--s-steps", type=int, default=5, help="path steps of geex-interp")
    group.add_argument("--mirror", choices=["on", "off"], default="on")
    group.add_argument("--smooth-kernel", metavar="SIZE:SIGMA", help="smooth the masks with a Gaussian kernel")
    group.add_argument("--baseline", default="zeros", metavar="zeros|blur|file:PATH")
    group.add_argument("--blur-size", type=int, default=5)
    group.add_argument("--blur-sigma", type=float, default=1.0)
    group.add_argument("--alpha", choices=sorted(ALPHA_FLAGS), default="stratified")
    group.add_argument("--fresh-masks", action="store_true", help="geex-interp draws new masks per step")
    group.add_argument("--ig-steps", type=int, help="Riemann steps of ig (default: n-star)")
    group.add_argument("--seed", type=int, default=0)
    group.add_argument("--class", dest="class_idx", type=int, help="class to explain (default: argmax)")
    group.add_argument("--workers", type=int, default=1, help="threads evaluating queries")
    group.add_argument("--format", choices=["csv", "pgm"], help="input format (default: from the suffix)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geex", description="Black-box path attributions from gradient estimates."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("explain", help="explain one input")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--method", choices=Method.all(), default=Method.geex)
    p.add_argument("--masks", help="pre-generated mask bundle for the query-only methods")
    p.add_argument("--out", default=".", help="output directory")
    _add_explain_flags(p)

    p = commands.add_parser("evaluate", help="deletion curves and AOPC")
    p.add_argument("model")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--methods", default=f"{Method.geex},{Method.random}", help="comma-separated methods")
    p.add_argument("--attribution", help="evaluate this attribution.csv instead of running methods")
    p.add_argument(
        "--replacement", default=f"{Replacement.baseline},{Replacement.gaussian}",
        help="comma-separated replacement kinds",
    )
    p.add_argument("--l", dest="length", type=int, help="deletion steps (default: every feature)")
    p.add_argument("--step-size", type=int, default=1, help="features replaced per step")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds, counting up from --seed")
    p.add_argument("--out", default=".")
    _add_explain_flags(p)

    p = commands.add_parser("sweep", help="convergence of geex to integrated gradients")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--budgets", required=True, help="comma-separated, strictly increasing budgets")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds, counting up from --seed")
    p.add_argument("--replacement", choices=Replacement.all(), default=Replacement.baseline)
    p.add_argument("--l", dest="length", type=int)
    p.add_argument("--out", default=".")
    _add_explain_flags(p)

    p = commands.add_parser("gen-model", help="write a model file")
    p.add_argument("kind", choices=MODEL_KINDS)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--weights", help="linear: comma-separated weights")
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--value", type=float, default=0.0, help="constant: output value")
    p.add_argument("--shape", default="1", help="constant: input shape, e.g. 8x8")
    p.add_argument("--data", help="dense: dataset.csv to train on (default: a generated two-blob set)")
    p.add_argument("--arch", default=DEFAULT_ARCH, help="dense: UNITS:ACTIVATION,...")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--black-box", action="store_true", help="withhold gradients from loaders")

    p = commands.add_parser("gen-data", help="write the synthetic two-blob dataset")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", default=".")

    p = commands.add_parser("gen-masks", help="write a reusable mask bundle")
    p.add_argument("--n-star", type=int, default=5000)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--shape", required=True, help="mask shape, e.g. 8x8")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mirror", choices=["on", "off"], default="on")
    p.add_argument("--smooth-kernel", metavar="SIZE:SIGMA")
    p.add_argument("--alpha", choices=sorted(ALPHA_FLAGS), default="stratified")
    p.add_argument("--out", required=True, help="bundle file to write")
    return parser


def explain_config(args, x: Grid) -> ExplainConfig:
    """ExplainConfig from parsed flags; the baseline file is read and checked against x."""
    baseline_kind, baseline = BaselineKind.zeros, None
    if args.baseline == "blur":
        baseline_kind = BaselineKind.blurred_explicand
    elif args.baseline.startswith("file:"):
        baseline_kind, baseline = BaselineKind.custom, read_grid(args.baseline[len("file:"):], args.format)
        check_same_shape(baseline, x, "baseline and explicand")
    elif args.baseline != "zeros":
        raise UsageError(f"--baseline must be zeros, blur or file:PATH, got {args.baseline!r}")
    try:
        smoothing = Kernel.parse(args.smooth_kernel) if args.smooth_kernel else None
        return ExplainConfig(
            sigma=args.sigma,
            n_star=args.n_star,
            s_steps=args.s_steps,
            mirrored=args.mirror == "on",
            smoothing=smoothing,
            baseline_kind=baseline_kind,
            baseline=baseline,
            alpha_mode=ALPHA_FLAGS[args.alpha],
            seed=args.seed,
            class_idx=args.class_idx,
            ig_steps=args.ig_steps,
            blur_size=args.blur_size,
            blur_sigma=args.blur_sigma,
            fresh_masks_per_step=args.fresh_masks,
            workers=args.workers,
        )
    except GeexError:
        raise
    except ValueError as error:
        raise UsageError(str(error)) from error


def _prepare_out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _meta_lines(attribution: Attribution, cfg: ExplainConfig, baseline_flag: str) -> list[str]:
    residual = attribution.completeness_residual
    entries = [
        ("method", attribution.method),
        ("seed", attribution.seed),
        ("n_star", cfg.n_star),
        ("sigma", repr(cfg.sigma)),
        ("s_steps", cfg.s_steps),
        ("mirrored", cfg.mirrored),
        ("alpha_mode", cfg.alpha_mode),
        ("smoothing", cfg.smoothing or "none"),
        ("baseline", baseline_flag),
        ("class", attribution.class_idx),
        ("output_kind", attribution.output_kind),
        ("n_queries", attribution.n_queries),
        ("completeness_residual", "none" if residual is None else repr(residual)),
    ]
    entries.extend(("warning", warning) for warning in attribution.warnings)
    return [f"{key}={value}" for key, value in entries]


def cmd_explain(args) -> int:
    m = load_model(args.model)
    x = read_grid(args.input, args.format)
    m.check_shape(x.shape)
    cfg = explain_config(args, x)
    mask_set = read_mask_bundle(args.masks) if args.masks else None
    out = _prepare_out(args.out)

    attribution = explain(args.method, m, x, cfg, mask_set)
    write_attribution(out / "attribution.csv", attribution)
    write_heatmap(out / "attribution.pgm", attribution.xi)
    (out / "meta.txt").write_text("\n".join(_meta_lines(attribution, cfg, args.baseline)) + "\n")
    logger.info("wrote attribution.csv, attribution.pgm and meta.txt to %s", out)
    return 0


def cmd_evaluate(args) -> int:
    m = load_model(args.model)
    inputs = [read_grid(path, args.format) for path in args.inputs]
    for x in inputs:
        m.check_shape(x.shape)
    cfg = explain_config(args, inputs[0])
    replacements = [r.strip() for r in args.replacement.split(",") if r.strip()]
    for replacement in replacements:
        if replacement not in Replacement.all():
            raise UsageError(f"unknown replacement {replacement!r}, expected one of {Replacement.all()}")
    seeds = _seeds(args)
    out = _prepare_out(args.out)

    curve_rows, aopc_rows = [], []
    seeds_text = " ".join(str(s) for s in seeds)
    if args.attribution:
        if len(inputs) != 1:
            raise UsageError("--attribution evaluates exactly one input")
        x = inputs[0]
        attribution = Attribution(
            xi=read_attribution(args.attribution, x.shape),
            baseline=resolve_baseline(x, cfg),
            class_idx=resolve_class(m, x, cfg.class_idx),
            n_queries=0,
            completeness_residual=None,
            method="file",
            seed=cfg.seed,
        )
        for replacement in replacements:
            curves = [
                deletion_curve(m, x, attribution, args.length, replacement, seed, args.step_size)
                for seed in seeds
            ]
            curve_rows.extend(
                ("file", replacement, step, float(r)) for step, r in enumerate(curves[0].ratios, start=1)
            )
            values = [curve.aopc for curve in curves]
            aopc_rows.append(("file", replacement, float(np.mean(values)), float(np.std(values)), seeds_text))
    else:
        methods = [name.strip() for name in args.methods.split(",") if name.strip()]
        for method in methods:
            if method not in Method.all():
                raise UsageError(f"unknown method {method!r}, expected one of {Method.all()}")
        cells = aopc_table({"model": m}, inputs, methods, replacements, cfg, seeds, args.length, args.step_size)
        for cell in cells:
            aopc_rows.append((cell.method, cell.replacement, cell.mean, cell.std, seeds_text))
            if cell.failed:
                continue
            curve_rows.extend(
                (cell.method, cell.replacement, step, float(r)) for step, r in enumerate(cell.curve.ratios, start=1)
            )

    write_table(out / "curve.csv", ["method", "replacement", "step", "ratio"], curve_rows)
    write_table(out / "aopc.csv", ["method", "replacement", "mean", "std", "seeds"], aopc_rows)
    logger.info("wrote curve.csv and aopc.csv to %s", out)
    return 0


def cmd_sweep(args) -> int:
    m = load_model(args.model)
    x = read_grid(args.input, args.format)
    m.check_shape(x.shape)
    cfg = explain_config(args, x)
    budgets = _numbers(args.budgets, int)
    if not budgets:
        raise UsageError("--budgets needs at least one budget")
    seeds = _seeds(args)
    out = _prepare_out(args.out)

    result = convergence_sweep(
        m, x, budgets, cfg, seeds,
        ig_steps=args.ig_steps or 512, with_aopc=True, l=args.length, replacement=args.replacement,
    )
    rows = zip(result.budgets, result.mean_rel_l2, result.std_rel_l2, result.mean_aopc)
    write_table(out / "sweep.csv", ["budget", "mean_rel_l2", "std", "mean_aopc"], list(rows))
    logger.info("wrote sweep.csv to %s", out)
    return 0


def cmd_gen_model(args) -> int:
    if args.kind == "sigmoid1d":
        m = AnalyticModel.sigmoid1d()
    elif args.kind == "sigmoid2d":
        m = AnalyticModel.sigmoid_of_x_only_2d()
    elif args.kind == "linear":
        if not args.weights:
            raise UsageError("gen-model linear needs --weights")
        m = AnalyticModel.linear(Grid(_numbers(args.weights)), args.bias)
    elif args.kind == "constant":
        try:
            shape = parse_shape(args.shape)
        except ValueError as error:
            raise UsageError(str(error)) from error
        m = AnalyticModel.constant(args.value, shape)
    else:
        dataset = read_dataset(args.data) if args.data else gen_synthetic_dataset(TWO_BLOB_8X8)
        m = train_toy(dataset, _arch(args.arch), epochs=args.epochs, lr=args.lr, seed=args.seed)
    if args.black_box:
        m = m.as_black_box()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_model(m, args.out)
    logger.info("wrote %s model to %s", args.kind, args.out)
    return 0


def cmd_gen_data(args) -> int:
    dataset = gen_synthetic_dataset(TWO_BLOB_8X8, args.n, args.noise, args.seed)
    out = _prepare_out(args.out)
    write_dataset(out / "dataset.csv", dataset)
    write_patches(out / "patches.csv", dataset.patches)
    for label in sorted(dataset.patches):
        write_image(out / f"class{label}.pgm", dataset.patch_mask(label))
    logger.info("wrote %d samples to %s", len(dataset), out)
    return 0


def cmd_gen_masks(args) -> int:
    try:
        shape = parse_shape(args.shape)
        smoothing = Kernel.parse(args.smooth_kernel) if args.smooth_kernel else None
        dist = SearchDistribution(args.sigma, shape)
    except GeexError:
        raise
    except ValueError as error:
        raise UsageError(str(error)) from error
    ms = generate_mask_set(
        dist, args.n_star, args.seed, mirrored=args.mirror == "on",
        smoothing=smoothing, alpha_mode=ALPHA_FLAGS[args.alpha],
    )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_mask_bundle(args.out, ms)
    logger.info("wrote %d masks to %s", len(ms), args.out)
    return 0


COMMANDS = {
    "explain": cmd_explain,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "gen-model": cmd_gen_model,
    "gen-data": cmd_gen_data,
    "gen-masks": cmd_gen_masks,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING, format=LOG_FORMAT, stream=sys.stderr
    )
    logger.info("running %s", args.command)
    try:
        return COMMANDS[args.command](args)
    except GeexError as error:
        print(f"geex {args.command}: {error}", file=sys.stderr)
        return error.exit_code
